"""Retrieval-set construction and demonstration selection.

A retrieval set is built from a labeled pool: extract features, standardize,
cluster into C groups, and keep the R members nearest each centroid. At
query time the K most cosine-similar bootstrapped entries become few-shot
demonstrations.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .catalog import FeatureMap, schema_for
from .cluster import kmeans
from .errors import ConfigError, SchemaError, VizRecError
from .features import extract_features
from .prompts import Explanation, ScoreVector
from .tabular import LabeledCorpusRecord, VisualizationType
from .vectorize import (
    FeatureVector,
    StandardizationStats,
    compute_standardization_stats,
    vectorize,
    vectors_to_matrix,
)

logger = logging.getLogger(__name__)

MAX_DEMONSTRATIONS = 8


class Ordering(Enum):
    NEAREST_FIRST = "nearest"
    FURTHEST_FIRST = "furthest"
    RANDOM = "random"


class BootstrapStatus(Enum):
    ACCEPTED = "accepted"
    PRUNED = "pruned"


@dataclass(frozen=True)
class BootstrapStep:
    """One iteration of the bootstrap loop: parsed scores or a parse error."""

    scores: ScoreVector | None = None
    explanation: Explanation | None = None
    error: str | None = None

    def __post_init__(self):
        if (self.scores is None) != (self.error is not None):
            raise ValueError("a step has either parsed scores or an error")


@dataclass(frozen=True)
class BootstrapOutcome:
    status: BootstrapStatus
    history: tuple  # of BootstrapStep
    final: tuple | None = None  # (ScoreVector, Explanation) when accepted

    def __post_init__(self):
        if (self.status is BootstrapStatus.ACCEPTED) != (self.final is not None):
            raise ValueError("accepted outcomes carry a final pair; pruned ones do not")
        if not self.history:
            raise ValueError("an outcome records at least one iteration")

    @property
    def iterations(self) -> int:
        return len(self.history)


@dataclass(frozen=True)
class RetrievalConfig:
    """Shape of the retrieval set and of demonstration selection."""

    n_clusters: int = 4
    per_cluster: int = 15
    k: int = 8
    seed: int = 0
    ordering: Ordering = Ordering.NEAREST_FIRST

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ConfigError("n_clusters must be at least 1")
        if self.per_cluster < 1:
            raise ConfigError("per_cluster must be at least 1")
        if not 0 <= self.k <= MAX_DEMONSTRATIONS:
            raise ConfigError(f"k must be between 0 and {MAX_DEMONSTRATIONS}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 bits")

    @property
    def target_size(self) -> int:
        return self.n_clusters * self.per_cluster

    def to_obj(self) -> dict:
        return {
            "n_clusters": self.n_clusters,
            "per_cluster": self.per_cluster,
            "k": self.k,
            "seed": self.seed,
            "ordering": self.ordering.value,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "RetrievalConfig":
        return cls(
            n_clusters=int(obj["n_clusters"]),
            per_cluster=int(obj["per_cluster"]),
            k=int(obj["k"]),
            seed=int(obj["seed"]),
            ordering=Ordering(obj["ordering"]),
        )


@dataclass
class RetrievalEntry:
    dataset_id: str
    label: VisualizationType
    cluster_id: int
    features: FeatureMap
    vector: FeatureVector
    description: str | None = None
    bootstrap: BootstrapOutcome | None = None

    @property
    def is_accepted(self) -> bool:
        return self.bootstrap is not None and self.bootstrap.status is BootstrapStatus.ACCEPTED


@dataclass
class RetrievalSet:
    schema_version: str
    stats: StandardizationStats
    config: RetrievalConfig
    entries: list  # of RetrievalEntry, cluster-major in selection order

    def accepted_entries(self) -> list:
        return [e for e in self.entries if e.is_accepted]


def cosine_similarity(u: FeatureVector, v: FeatureVector) -> float:
    """Cosine of the angle between two vectors; 0.0 when either has norm 0."""
    if u.schema_version != v.schema_version:
        raise SchemaError("cannot compare vectors from different schema versions")
    a, b = u.as_array(), v.as_array()
    if a.shape != b.shape:
        raise SchemaError("vector length mismatch")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    sim = float(np.dot(a, b) / (na * nb))
    return max(-1.0, min(1.0, sim))


def build_retrieval_set(
    pool: Sequence[LabeledCorpusRecord], config: RetrievalConfig
) -> RetrievalSet:
    """Cluster the pool and keep the per-cluster representatives.

    Entries come out cluster-major: cluster 0's representatives in order of
    distance to the centroid, then cluster 1's, and so on. Descriptions and
    bootstrap outcomes are filled in later by the pipeline.
    """
    if not pool:
        raise VizRecError("cannot build a retrieval set from an empty pool")
    if len(pool) < config.n_clusters:
        raise VizRecError(
            f"pool has {len(pool)} records but {config.n_clusters} clusters were requested"
        )
    ids = [r.dataset.id for r in pool]
    feature_maps = [extract_features(r.dataset) for r in pool]
    version = feature_maps[0].schema_version
    stats = compute_standardization_stats(feature_maps, version)
    vectors = [vectorize(fm, stats) for fm in feature_maps]
    matrix = vectors_to_matrix(vectors)
    result = kmeans(matrix, config.n_clusters, seed=config.seed)
    entries: list[RetrievalEntry] = []
    for cid in range(config.n_clusters):
        member_idx = np.flatnonzero(result.assignments == cid)
        dists = np.linalg.norm(matrix[member_idx] - result.centroids[cid], axis=1)
        ranked = sorted(
            zip(member_idx.tolist(), dists.tolist()), key=lambda t: (t[1], ids[t[0]])
        )
        take = ranked[: config.per_cluster]
        if len(take) < config.per_cluster:
            logger.warning(
                "cluster %d has only %d member(s); requested %d representatives",
                cid, len(take), config.per_cluster,
            )
        for idx, _ in take:
            entries.append(
                RetrievalEntry(
                    dataset_id=ids[idx],
                    label=pool[idx].label,
                    cluster_id=cid,
                    features=feature_maps[idx],
                    vector=vectors[idx],
                )
            )
    return RetrievalSet(
        schema_version=version, stats=stats, config=config, entries=entries
    )


def nearest_demonstrations(
    query: FeatureVector,
    retrieval_set: RetrievalSet,
    k: int,
    ordering: Ordering = Ordering.NEAREST_FIRST,
    seed: int = 0,
) -> list:
    """Pick the k accepted entries most cosine-similar to the query.

    Ties break toward the smaller dataset id. The ordering controls how the
    chosen k are arranged in the prompt, not which ones are chosen.
    """
    if not 0 <= k <= MAX_DEMONSTRATIONS:
        raise ConfigError(f"k must be between 0 and {MAX_DEMONSTRATIONS}")
    accepted = retrieval_set.accepted_entries()
    if k > len(accepted):
        raise VizRecError(
            f"requested {k} demonstrations but only {len(accepted)} accepted entries exist"
        )
    if k == 0:
        return []
    scored = sorted(
        accepted,
        key=lambda e: (-cosine_similarity(query, e.vector), e.dataset_id),
    )
    chosen = scored[:k]
    if ordering is Ordering.NEAREST_FIRST:
        return chosen
    if ordering is Ordering.FURTHEST_FIRST:
        return list(reversed(chosen))
    shuffled = list(chosen)
    random.Random(seed).shuffle(shuffled)
    return shuffled


def truncate_retrieval_set(retrieval_set: RetrievalSet, size: int) -> RetrievalSet:
    """Keep a deterministic, cluster-balanced prefix of the entries.

    Entries are taken round-robin across clusters in per-cluster selection
    order, so smaller sizes stay as balanced as the original set allows.
    """
    if size < 1:
        raise ConfigError("size must be at least 1")
    if size > len(retrieval_set.entries):
        raise VizRecError(
            f"cannot truncate to {size}; the set has {len(retrieval_set.entries)} entries"
        )
    by_cluster: dict[int, list] = {}
    for entry in retrieval_set.entries:
        by_cluster.setdefault(entry.cluster_id, []).append(entry)
    queues = [by_cluster[cid] for cid in sorted(by_cluster)]
    kept: list[RetrievalEntry] = []
    rank = 0
    while len(kept) < size:
        progressed = False
        for queue in queues:
            if rank < len(queue):
                kept.append(queue[rank])
                progressed = True
                if len(kept) == size:
                    break
        if not progressed:
            break
        rank += 1
    return RetrievalSet(
        schema_version=retrieval_set.schema_version,
        stats=retrieval_set.stats,
        config=retrieval_set.config,
        entries=kept,
    )


def _score_vector_to_obj(scores: ScoreVector) -> dict:
    return {t.display_name: s for t, s in zip(VisualizationType, scores.values)}


def _score_vector_from_obj(obj: dict) -> ScoreVector:
    return ScoreVector(values=tuple(float(obj[t.display_name]) for t in VisualizationType))


def _bootstrap_to_obj(outcome: BootstrapOutcome) -> dict:
    steps = []
    for step in outcome.history:
        if step.error is not None:
            steps.append({"error": step.error})
        else:
            steps.append(
                {
                    "scores": _score_vector_to_obj(step.scores),
                    "explanation": step.explanation.text,
                }
            )
    obj = {"status": outcome.status.value, "iterations": outcome.iterations, "history": steps}
    if outcome.final is not None:
        scores, explanation = outcome.final
        obj["final"] = {
            "scores": _score_vector_to_obj(scores),
            "explanation": explanation.text,
        }
    return obj


def _bootstrap_from_obj(obj: dict) -> BootstrapOutcome:
    history = []
    for step in obj["history"]:
        if "error" in step:
            history.append(BootstrapStep(error=step["error"]))
        else:
            history.append(
                BootstrapStep(
                    scores=_score_vector_from_obj(step["scores"]),
                    explanation=Explanation(step["explanation"]),
                )
            )
    final = None
    if "final" in obj:
        final = (
            _score_vector_from_obj(obj["final"]["scores"]),
            Explanation(obj["final"]["explanation"]),
        )
    return BootstrapOutcome(
        status=BootstrapStatus(obj["status"]), history=tuple(history), final=final
    )


def save_retrieval_set(retrieval_set: RetrievalSet, path: str) -> None:
    """Write the set as JSONL: a header line, then one line per entry."""
    header = {
        "schema_version": retrieval_set.schema_version,
        "stats": retrieval_set.stats.to_obj(),
        "config": retrieval_set.config.to_obj(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for entry in retrieval_set.entries:
            obj = {
                "id": entry.dataset_id,
                "label": entry.label.corpus_label,
                "cluster_id": entry.cluster_id,
                "features": entry.features.values,
                "vector": list(entry.vector.values),
            }
            if entry.description is not None:
                obj["description"] = entry.description
            if entry.bootstrap is not None:
                obj["bootstrap"] = _bootstrap_to_obj(entry.bootstrap)
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_retrieval_set(path: str) -> RetrievalSet:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().split("\n") if line.strip()]
    if not lines:
        raise VizRecError(f"empty retrieval store: {path}")
    header = json.loads(lines[0])
    version = header["schema_version"]
    schema_for(version)
    stats = StandardizationStats.from_obj(header["stats"])
    config = RetrievalConfig.from_obj(header["config"])
    entries = []
    for line in lines[1:]:
        obj = json.loads(line)
        features = FeatureMap.from_obj({"schema_version": version, "features": obj["features"]})
        entry = RetrievalEntry(
            dataset_id=obj["id"],
            label=VisualizationType.from_corpus_label(obj["label"]),
            cluster_id=int(obj["cluster_id"]),
            features=features,
            vector=FeatureVector(schema_version=version, values=tuple(float(v) for v in obj["vector"])),
            description=obj.get("description"),
            bootstrap=_bootstrap_from_obj(obj["bootstrap"]) if "bootstrap" in obj else None,
        )
        entries.append(entry)
    return RetrievalSet(schema_version=version, stats=stats, config=config, entries=entries)
