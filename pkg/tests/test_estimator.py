"""Scikit-learn style facade: vectorizer and end-to-end recommender."""

import json

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import num_dataset, seq_gateway
from test_retrieval import make_pool
from vizrec import (
    CANONICAL_TYPES,
    ConfigError,
    FeatureVectorizer,
    LabeledCorpusRecord,
    Recommendation,
    RetrievalConfig,
    VisualizationRecommender,
    build_retrieval_set,
    extract_features,
    vectorize,
)
from vizrec.catalog import CATALOG

DIM = len(CATALOG)


def scoring_text(line, scatter, bar, box):
    payload = {
        "line chart": line,
        "scatter plot": scatter,
        "bar chart": bar,
        "box plot": box,
    }
    return "Scores follow from the structure. " + json.dumps(payload)


def accept_text_for(label):
    values = [0.1, 0.1, 0.1, 0.1]
    values[CANONICAL_TYPES.index(label)] = 0.7
    return scoring_text(*values)


def fit_responses(pool, rcfg, skip_ids=()):
    """Description + immediately-accepted scoring for every retrieval entry."""
    preview = build_retrieval_set(pool, rcfg)
    responses = []
    for entry in preview.entries:
        responses.append(f"An account of {entry.dataset_id}.")
        if entry.dataset_id in skip_ids:
            responses.extend([scoring_text(0.25, 0.25, 0.25, 0.25)] * 3)
        else:
            responses.append(accept_text_for(entry.label))
    return preview, responses


class TestFeatureVectorizer:
    def test_transform_shape_and_values(self):
        pool = make_pool(10)
        datasets = [r.dataset for r in pool]
        vec = FeatureVectorizer().fit(datasets)
        matrix = vec.transform(datasets)
        assert matrix.shape == (10, DIM)
        expected = vectorize(extract_features(datasets[0]), vec.stats_)
        assert matrix[0].tolist() == list(expected.values)

    def test_accepts_records_and_feature_maps(self):
        pool = make_pool(6)
        maps = [extract_features(r.dataset) for r in pool]
        from_records = FeatureVectorizer().fit(pool).transform(pool)
        from_maps = FeatureVectorizer().fit(maps).transform(maps)
        assert np.array_equal(from_records, from_maps)

    def test_fit_transform_matches_fit_then_transform(self):
        pool = make_pool(8)
        datasets = [r.dataset for r in pool]
        a = FeatureVectorizer().fit_transform(datasets)
        b = FeatureVectorizer().fit(datasets).transform(datasets)
        assert np.array_equal(a, b)

    def test_unfitted_transform_rejected(self):
        with pytest.raises(NotFittedError):
            FeatureVectorizer().transform([num_dataset("d", [1.0], [2.0])])

    def test_feature_names_match_catalog(self):
        names = FeatureVectorizer().get_feature_names_out()
        assert names.shape == (DIM,)
        assert names.tolist() == list(CATALOG.names)
        assert len(set(names.tolist())) == DIM

    def test_unsupported_item_rejected(self):
        with pytest.raises(TypeError, match="expected a dataset or feature map"):
            FeatureVectorizer().fit([{"not": "a dataset"}])


class TestVisualizationRecommenderFit:
    def make_fitted(self, skip_ids=()):
        pool = make_pool(24, groups=3)
        rcfg = RetrievalConfig(n_clusters=3, per_cluster=4, k=2)
        preview, responses = fit_responses(pool, rcfg, skip_ids)
        est = VisualizationRecommender(
            gateway=seq_gateway(responses), n_clusters=3, per_cluster=4, k=2
        )
        est.fit(pool)
        return est, preview

    def test_fit_builds_pruned_retrieval_set(self):
        est, preview = self.make_fitted()
        assert [e.dataset_id for e in est.retrieval_set_.entries] == [
            e.dataset_id for e in preview.entries
        ]
        assert all(e.is_accepted for e in est.retrieval_set_.entries)
        assert list(est.classes_) == ["line", "scatter", "bar", "box"]

    def test_fit_drops_never_accepted_entries(self):
        pool = make_pool(24, groups=3)
        rcfg = RetrievalConfig(n_clusters=3, per_cluster=4, k=2)
        preview = build_retrieval_set(pool, rcfg)
        victim = preview.entries[2].dataset_id
        est, _ = self.make_fitted(skip_ids={victim})
        kept = [e.dataset_id for e in est.retrieval_set_.entries]
        assert victim not in kept
        assert len(kept) == len(preview.entries) - 1

    def test_fit_with_separate_labels(self):
        pool = make_pool(24, groups=3)
        rcfg = RetrievalConfig(n_clusters=3, per_cluster=4, k=2)
        _, responses = fit_responses(pool, rcfg)
        est = VisualizationRecommender(
            gateway=seq_gateway(responses), n_clusters=3, per_cluster=4, k=2
        )
        est.fit([r.dataset for r in pool], [r.label for r in pool])
        baseline, _ = self.make_fitted()
        assert [e.dataset_id for e in est.retrieval_set_.entries] == [
            e.dataset_id for e in baseline.retrieval_set_.entries
        ]

    def test_fit_with_string_labels(self):
        pool = make_pool(24, groups=3)
        rcfg = RetrievalConfig(n_clusters=3, per_cluster=4, k=2)
        _, responses = fit_responses(pool, rcfg)
        est = VisualizationRecommender(
            gateway=seq_gateway(responses), n_clusters=3, per_cluster=4, k=2
        )
        est.fit(
            [r.dataset for r in pool], [r.label.corpus_label for r in pool]
        )
        assert all(e.is_accepted for e in est.retrieval_set_.entries)

    def test_fit_without_gateway_rejected(self):
        with pytest.raises(ConfigError, match="gateway is required"):
            VisualizationRecommender().fit(make_pool(8))

    def test_fit_length_mismatch_rejected(self):
        pool = make_pool(6)
        est = VisualizationRecommender(gateway=seq_gateway([]))
        with pytest.raises(ValueError, match="6 items but y has 5"):
            est.fit([r.dataset for r in pool], [r.label for r in pool[:5]])

    def test_fit_unlabeled_items_without_y_rejected(self):
        pool = make_pool(6)
        est = VisualizationRecommender(gateway=seq_gateway([]))
        with pytest.raises(TypeError, match="LabeledCorpusRecord"):
            est.fit([r.dataset for r in pool])


class TestVisualizationRecommenderPredict:
    def fitted(self, extra_responses):
        pool = make_pool(24, groups=3)
        rcfg = RetrievalConfig(n_clusters=3, per_cluster=4, k=2)
        _, responses = fit_responses(pool, rcfg)
        est = VisualizationRecommender(
            gateway=seq_gateway(responses + extra_responses),
            n_clusters=3, per_cluster=4, k=2,
        )
        return est.fit(pool)

    def test_predict_returns_argmax_labels(self):
        extra = [
            "A first account.", scoring_text(0.1, 0.6, 0.1, 0.2),
            "A second account.", scoring_text(0.2, 0.1, 0.1, 0.6),
        ]
        est = self.fitted(extra)
        tests = [
            num_dataset("q-1", [1.0, 5.0, 2.0], [3.0, 8.0, 1.0]),
            num_dataset("q-2", [1.0, 1.0, 9.0], [4.0, 4.0, 4.0]),
        ]
        labels = est.predict(tests)
        assert labels.tolist() == ["scatter", "box"]

    def test_predict_scores_matrix(self):
        extra = ["An account.", scoring_text(0.1, 0.6, 0.1, 0.2)]
        est = self.fitted(extra)
        matrix = est.predict_scores([num_dataset("q-1", [1.0, 2.0], [3.0, 4.0])])
        assert matrix.shape == (1, 4)
        assert matrix.tolist() == [[0.1, 0.6, 0.1, 0.2]]

    def test_recommend_returns_full_objects(self):
        extra = ["An account.", scoring_text(0.1, 0.6, 0.1, 0.2)]
        est = self.fitted(extra)
        recs = est.recommend([num_dataset("q-1", [1.0, 2.0], [3.0, 4.0])])
        assert len(recs) == 1
        assert isinstance(recs[0], Recommendation)
        assert recs[0].dataset_id == "q-1"
        assert len(recs[0].demo_ids) == 2

    def test_unfitted_predict_rejected(self):
        est = VisualizationRecommender(gateway=seq_gateway([]))
        with pytest.raises(NotFittedError):
            est.predict([num_dataset("q-1", [1.0], [2.0])])


class TestEstimatorProtocol:
    def test_get_params_round_trip(self):
        est = VisualizationRecommender(k=3, margin=0.2, seed=11)
        params = est.get_params()
        assert params["k"] == 3
        assert params["margin"] == 0.2
        assert params["seed"] == 11
        est.set_params(k=5, ordering="furthest")
        assert est.get_params()["k"] == 5
        assert est.get_params()["ordering"] == "furthest"

    def test_clone_preserves_params_and_drops_state(self):
        pool = make_pool(24, groups=3)
        rcfg = RetrievalConfig(n_clusters=3, per_cluster=4, k=2)
        _, responses = fit_responses(pool, rcfg)
        est = VisualizationRecommender(
            gateway=seq_gateway(responses), n_clusters=3, per_cluster=4, k=2
        )
        est.fit(pool)
        copy = clone(est)
        assert copy.get_params()["k"] == 2
        assert not hasattr(copy, "retrieval_set_")

    def test_vectorizer_clone(self):
        vec = FeatureVectorizer().fit(make_pool(6))
        copy = clone(vec)
        assert not hasattr(copy, "stats_")
