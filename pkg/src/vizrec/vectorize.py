"""Turn feature maps into fixed-length vectors for similarity search.

Booleans become 0/1 as-is; numeric features are z-scored against pool
statistics; missing values map to 0.0 (the pool mean, after z-scoring).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .catalog import FeatureKind, FeatureMap, schema_for
from .errors import SchemaError


@dataclass(frozen=True)
class StandardizationStats:
    """Per-feature mean/std for the numeric features of one schema version."""

    schema_version: str
    means: dict  # numeric feature name -> float
    stds: dict   # numeric feature name -> float

    @classmethod
    def identity(cls, schema_version: str) -> "StandardizationStats":
        schema = schema_for(schema_version)
        names = schema.numeric_names
        return cls(
            schema_version=schema_version,
            means={n: 0.0 for n in names},
            stds={n: 1.0 for n in names},
        )

    def to_obj(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "means": self.means,
            "stds": self.stds,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "StandardizationStats":
        schema = schema_for(obj["schema_version"])
        means = {n: float(obj["means"][n]) for n in schema.numeric_names}
        stds = {n: float(obj["stds"][n]) for n in schema.numeric_names}
        return cls(schema_version=obj["schema_version"], means=means, stds=stds)


@dataclass(frozen=True)
class FeatureVector:
    schema_version: str
    values: tuple  # floats, one per schema name, in schema order

    def __post_init__(self):
        schema = schema_for(self.schema_version)
        if len(self.values) != len(schema):
            raise SchemaError(
                f"vector length {len(self.values)} does not match schema length {len(schema)}"
            )

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def compute_standardization_stats(
    feature_maps: Iterable[FeatureMap], schema_version: str
) -> StandardizationStats:
    """Population mean/std of each numeric feature over non-missing values.

    A feature that is missing everywhere gets mean 0 and std 0, which later
    collapses its standardized values to 0.
    """
    schema = schema_for(schema_version)
    pools: dict[str, list[float]] = {n: [] for n in schema.numeric_names}
    for fm in feature_maps:
        if fm.schema_version != schema_version:
            raise SchemaError(
                f"feature map version {fm.schema_version!r} does not match {schema_version!r}"
            )
        for name in schema.numeric_names:
            v = fm.values[name]
            if v is not None:
                pools[name].append(float(v))
    means, stds = {}, {}
    for name, pool in pools.items():
        if pool:
            arr = np.asarray(pool, dtype=float)
            means[name] = float(arr.mean())
            stds[name] = float(arr.std())
        else:
            means[name] = 0.0
            stds[name] = 0.0
    return StandardizationStats(schema_version=schema_version, means=means, stds=stds)


def vectorize(features: FeatureMap, stats: StandardizationStats) -> FeatureVector:
    """Standardize a feature map into a fixed-order vector."""
    if features.schema_version != stats.schema_version:
        raise SchemaError(
            f"feature map version {features.schema_version!r} does not match "
            f"stats version {stats.schema_version!r}"
        )
    schema = schema_for(features.schema_version)
    out: list[float] = []
    for name in schema.names:
        value = features.values[name]
        if value is None:
            out.append(0.0)
        elif schema.kinds[name] is FeatureKind.BOOLEAN:
            out.append(1.0 if value else 0.0)
        else:
            std = stats.stds[name]
            if std > 0:
                out.append((float(value) - stats.means[name]) / std)
            else:
                out.append(0.0)
    return FeatureVector(schema_version=features.schema_version, values=tuple(out))


def vectors_to_matrix(vectors: Sequence[FeatureVector]) -> np.ndarray:
    if not vectors:
        raise ValueError("no vectors")
    version = vectors[0].schema_version
    for v in vectors:
        if v.schema_version != version:
            raise SchemaError("mixed schema versions in one vector batch")
    return np.asarray([v.values for v in vectors], dtype=float)
