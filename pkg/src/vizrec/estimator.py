"""Scikit-learn style wrappers around the feature and recommendation APIs."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .catalog import CATALOG_VERSION, FeatureMap, schema_for
from .errors import ConfigError
from .features import extract_features
from .gateway import Gateway
from .pipeline import (
    BootstrapConfig,
    bootstrap_retrieval_set,
    prune_retrieval_set,
    recommend_all,
)
from .prompts import DEFAULT_TEMPLATES
from .retrieval import Ordering, RetrievalConfig, build_retrieval_set
from .tabular import (
    CANONICAL_TYPES,
    LabeledCorpusRecord,
    TabularDataset,
    VisualizationType,
)
from .vectorize import compute_standardization_stats, vectorize


def _as_feature_map(item) -> FeatureMap:
    if isinstance(item, FeatureMap):
        return item
    if isinstance(item, LabeledCorpusRecord):
        return extract_features(item.dataset)
    if isinstance(item, TabularDataset):
        return extract_features(item)
    raise TypeError(f"expected a dataset or feature map, got {type(item).__name__}")


class FeatureVectorizer(TransformerMixin, BaseEstimator):
    """Standardizing vectorizer over the fixed feature catalog.

    fit() learns pooled means and standard deviations; transform() emits the
    z-scored vectors with booleans as 0/1 and missing values as 0.
    """

    def fit(self, X: Sequence, y=None):
        maps = [_as_feature_map(item) for item in X]
        self.stats_ = compute_standardization_stats(maps, CATALOG_VERSION)
        return self

    def transform(self, X: Sequence) -> np.ndarray:
        if not hasattr(self, "stats_"):
            raise NotFittedError("FeatureVectorizer is not fitted yet; call fit first")
        rows = [vectorize(_as_feature_map(item), self.stats_).as_array() for item in X]
        schema = schema_for(CATALOG_VERSION)
        return np.array(rows, dtype=float).reshape(len(rows), len(schema))

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        return np.asarray(schema_for(CATALOG_VERSION).names, dtype=object)


class VisualizationRecommender(BaseEstimator):
    """End-to-end recommender with the usual fit/predict surface.

    fit() builds a clustered retrieval set from labeled examples and
    bootstraps demonstrations through the configured gateway; predict()
    returns the top-ranked chart label for each test dataset.
    """

    def __init__(
        self,
        gateway: Gateway | None = None,
        n_clusters: int = 4,
        per_cluster: int = 15,
        k: int = 8,
        seed: int = 0,
        ordering: str = "nearest",
        margin: float = 0.1,
        max_iters: int = 3,
        sum_tolerance: float = 0.05,
        templates=None,
        parallelism: int = 1,
    ):
        self.gateway = gateway
        self.n_clusters = n_clusters
        self.per_cluster = per_cluster
        self.k = k
        self.seed = seed
        self.ordering = ordering
        self.margin = margin
        self.max_iters = max_iters
        self.sum_tolerance = sum_tolerance
        self.templates = templates
        self.parallelism = parallelism

    def _retrieval_config(self) -> RetrievalConfig:
        return RetrievalConfig(
            n_clusters=self.n_clusters,
            per_cluster=self.per_cluster,
            k=self.k,
            seed=self.seed,
            ordering=Ordering(self.ordering),
        )

    def _bootstrap_config(self) -> BootstrapConfig:
        return BootstrapConfig(
            margin=self.margin,
            max_iters=self.max_iters,
            sum_tolerance=self.sum_tolerance,
        )

    def _templates(self):
        return self.templates if self.templates is not None else DEFAULT_TEMPLATES

    @staticmethod
    def _as_labeled(X: Sequence, y) -> list:
        if y is None:
            records = list(X)
            for r in records:
                if not isinstance(r, LabeledCorpusRecord):
                    raise TypeError(
                        "without y, X must contain LabeledCorpusRecord items"
                    )
            return records
        if len(X) != len(y):
            raise ValueError(f"X has {len(X)} items but y has {len(y)}")
        records = []
        for dataset, label in zip(X, y):
            if isinstance(label, str):
                label = VisualizationType.from_corpus_label(label)
            records.append(LabeledCorpusRecord(dataset=dataset, label=label))
        return records

    def fit(self, X: Sequence, y=None):
        if self.gateway is None:
            raise ConfigError("a gateway is required to fit the recommender")
        records = self._as_labeled(X, y)
        rcfg = self._retrieval_config()
        retrieval_set = build_retrieval_set(records, rcfg)
        bootstrap_retrieval_set(
            retrieval_set,
            self.gateway,
            self._bootstrap_config(),
            self._templates(),
            self.parallelism,
        )
        self.retrieval_set_ = prune_retrieval_set(retrieval_set)
        self.retrieval_config_ = rcfg
        self.classes_ = np.asarray([t.corpus_label for t in CANONICAL_TYPES], dtype=object)
        return self

    def _check_fitted(self):
        if not hasattr(self, "retrieval_set_"):
            raise NotFittedError(
                "VisualizationRecommender is not fitted yet; call fit first"
            )

    def recommend(self, X: Sequence) -> list:
        """Full Recommendation objects, in input order."""
        self._check_fitted()
        return recommend_all(
            list(X),
            self.retrieval_set_,
            self.retrieval_config_,
            self.gateway,
            self._bootstrap_config(),
            self._templates(),
            self.parallelism,
        )

    def predict_scores(self, X: Sequence) -> np.ndarray:
        """Score matrix of shape (n, 4) in canonical type order."""
        recs = self.recommend(X)
        return np.array([rec.scores.values for rec in recs], dtype=float)

    def predict(self, X: Sequence) -> np.ndarray:
        """Top-ranked corpus label for each dataset."""
        recs = self.recommend(X)
        return np.asarray(
            [rec.scores.argmax().corpus_label for rec in recs], dtype=object
        )
