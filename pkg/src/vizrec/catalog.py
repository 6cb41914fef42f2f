"""Feature schema: fixed names, order, and kinds for the feature catalog.

The catalog version string travels with every feature map, vector, and
retrieval store so mixed-version artifacts fail fast.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from .errors import SchemaError

CATALOG_VERSION = "llm4vis-cat-1"

FeatureValue = float | bool | None


class FeatureKind(Enum):
    NUMERIC = "numeric"
    BOOLEAN = "boolean"


# (name, kind) for one column role; names get an _x/_y suffix.
_B = FeatureKind.BOOLEAN
_N = FeatureKind.NUMERIC

_SINGLE_COLUMN = (
    ("data_type_is_string", _B),
    ("data_type_is_integer", _B),
    ("data_type_is_decimal", _B),
    ("data_type_is_time", _B),
    ("general_type_is_c", _B),
    ("general_type_is_q", _B),
    ("general_type_is_t", _B),
    ("length", _N),
    ("percentage_none", _N),
    ("name_length", _N),
    ("num_words_in_name", _N),
    ("has_uppercase_in_name", _B),
    ("has_digit_in_name", _B),
    ("has_currency_symbol_in_name", _B),
    ("mean", _N),
    ("median", _N),
    ("mode", _N),
    ("var", _N),
    ("std", _N),
    ("min", _N),
    ("max", _N),
    ("range", _N),
    ("normalized_mean", _N),
    ("normalized_median", _N),
    ("normalized_range", _N),
    ("coeff_var", _N),
    ("skewness", _N),
    ("kurtosis", _N),
    ("gini", _N),
    ("entropy", _N),
    ("normality_statistic", _N),
    ("normality_p", _N),
    ("is_normal_5", _B),
    ("is_normal_1", _B),
    ("percent_outliers_15iqr", _N),
    ("percent_outliers_1_99", _N),
    ("percent_outliers_3std", _N),
    ("is_sorted", _B),
    ("is_monotonic", _B),
    ("is_lin_space", _B),
    ("is_log_space", _B),
    ("num_unique", _N),
    ("percent_unique", _N),
    ("min_value_length", _N),
    ("max_value_length", _N),
    ("mean_value_length", _N),
)

_CROSS_COLUMN = (
    ("identical", _B),
    ("identical_unique", _B),
    ("has_shared_elements", _B),
    ("num_shared_elements", _N),
    ("percent_shared_elements", _N),
    ("has_shared_unique_elements", _B),
    ("num_shared_unique_elements", _N),
    ("percent_shared_unique_elements", _N),
    ("has_shared_words", _B),
    ("has_range_overlap", _B),
    ("name_edit_distance", _N),
    ("name_edit_distance_normalized", _N),
    ("nestedness", _N),
    ("correlation_value", _N),
    ("correlation_p", _N),
    ("correlation_significant_005", _B),
    ("ks_statistic", _N),
    ("ks_p", _N),
    ("ks_significant_005", _B),
    ("linregress_slope", _N),
    ("linregress_p", _N),
    ("linregress_significant_005", _B),
    ("chi2_statistic", _N),
    ("chi2_p", _N),
    ("chi2_significant_005", _B),
    ("one_way_anova_F", _N),
    ("one_way_anova_p", _N),
    ("one_way_anova_significant_005", _B),
)


@dataclass(frozen=True)
class FeatureSchema:
    version: str
    names: tuple[str, ...]
    kinds: dict  # name -> FeatureKind

    def kind_of(self, name: str) -> FeatureKind:
        return self.kinds[name]

    @property
    def numeric_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.names if self.kinds[n] is FeatureKind.NUMERIC)

    def __len__(self) -> int:
        return len(self.names)


def _build_catalog() -> FeatureSchema:
    names: list[str] = []
    kinds: dict[str, FeatureKind] = {}
    for role in ("x", "y"):
        for base, kind in _SINGLE_COLUMN:
            name = f"{base}_{role}"
            names.append(name)
            kinds[name] = kind
    for base, kind in _CROSS_COLUMN:
        names.append(base)
        kinds[base] = kind
    return FeatureSchema(version=CATALOG_VERSION, names=tuple(names), kinds=kinds)


CATALOG = _build_catalog()


@dataclass(frozen=True)
class FeatureMap:
    """A complete feature assignment under one schema version.

    ``values`` holds every schema name in schema order; booleans stay
    booleans, numerics are finite floats, missing is None (never NaN).
    """

    schema_version: str
    values: dict  # name -> FeatureValue, in schema order

    def __post_init__(self):
        schema = schema_for(self.schema_version)
        if tuple(self.values) != schema.names:
            missing = set(schema.names) - set(self.values)
            extra = set(self.values) - set(schema.names)
            problems = []
            if missing:
                problems.append(f"missing {sorted(missing)[:3]}")
            if extra:
                problems.append(f"unexpected {sorted(extra)[:3]}")
            if not problems:
                problems.append("names out of schema order")
            raise SchemaError(f"feature map does not match schema: {'; '.join(problems)}")
        for name, value in self.values.items():
            if value is None:
                continue
            kind = schema.kinds[name]
            if kind is FeatureKind.BOOLEAN:
                if not isinstance(value, bool):
                    raise SchemaError(f"feature {name!r} must be boolean or None")
            else:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise SchemaError(f"feature {name!r} must be numeric or None")
                if not math.isfinite(value):
                    raise SchemaError(f"feature {name!r} is not finite; use None for missing")

    def get(self, name: str) -> FeatureValue:
        return self.values[name]

    def to_json(self) -> str:
        return json.dumps(
            {"schema_version": self.schema_version, "features": self.values},
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, text: str) -> "FeatureMap":
        obj = json.loads(text)
        return cls.from_obj(obj)

    @classmethod
    def from_obj(cls, obj: dict) -> "FeatureMap":
        if not isinstance(obj, dict) or "schema_version" not in obj or "features" not in obj:
            raise SchemaError("expected an object with 'schema_version' and 'features'")
        version = obj["schema_version"]
        schema = schema_for(version)
        raw = obj["features"]
        values = {}
        for name in schema.names:
            if name not in raw:
                raise SchemaError(f"feature {name!r} missing from serialized map")
            v = raw[name]
            if v is not None and schema.kinds[name] is FeatureKind.NUMERIC:
                v = float(v)
            values[name] = v
        return cls(schema_version=version, values=values)


def schema_for(version: str) -> FeatureSchema:
    if version != CATALOG_VERSION:
        raise SchemaError(f"unknown feature schema version {version!r}; this build supports {CATALOG_VERSION!r}")
    return CATALOG
