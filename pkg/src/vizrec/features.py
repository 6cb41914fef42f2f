"""Feature extraction for two-column datasets.

Single-column statistics are computed per role (x, y) and suffixed; cross
column statistics compare the pair. Statistics that do not apply to a
column's type, or whose inputs are degenerate, come out as missing (None).
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np

from . import kernels
from .catalog import CATALOG, FeatureMap, FeatureValue
from .tabular import Column, GeneralType, TabularDataset

_CURRENCY_SYMBOLS = set("$€£¥₩₹¢")

_REL_TOL_SPACING = 1e-3


def _is_sorted(values: Sequence) -> bool:
    return all(values[i] <= values[i + 1] for i in range(len(values) - 1))


def _is_monotonic(values: Sequence) -> bool:
    return _is_sorted(values) or all(
        values[i] >= values[i + 1] for i in range(len(values) - 1)
    )


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=_REL_TOL_SPACING, abs_tol=1e-12)


def _is_lin_space(values: Sequence[float]) -> bool:
    if len(values) < 3:
        return False
    diffs = [values[i + 1] - values[i] for i in range(len(values) - 1)]
    return all(_close(d, diffs[0]) for d in diffs[1:])


def _is_log_space(values: Sequence[float]) -> bool:
    if len(values) < 3 or any(v <= 0 for v in values):
        return False
    ratios = [values[i + 1] / values[i] for i in range(len(values) - 1)]
    return all(_close(r, ratios[0]) for r in ratios[1:])


def _mode(values: Sequence[float]) -> float:
    counts = Counter(values)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def _name_features(name: str, out: dict) -> None:
    out["name_length"] = float(len(name))
    out["num_words_in_name"] = float(len(name.split()))
    out["has_uppercase_in_name"] = any(c.isupper() for c in name)
    out["has_digit_in_name"] = any(c.isdigit() for c in name)
    out["has_currency_symbol_in_name"] = any(c in _CURRENCY_SYMBOLS for c in name)


def _quantitative_features(values: Sequence[float], out: dict) -> None:
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        return
    mean = float(v.mean())
    median = float(np.median(v))
    lo, hi = float(v.min()), float(v.max())
    rng = hi - lo
    var = float(v.var())
    std = float(v.std())
    out["mean"] = mean
    out["median"] = median
    out["mode"] = _mode(values)
    out["var"] = var
    out["std"] = std
    out["min"] = lo
    out["max"] = hi
    out["range"] = rng
    out["normalized_mean"] = mean / hi if hi != 0 else None
    out["normalized_median"] = median / hi if hi != 0 else None
    out["normalized_range"] = rng / mean if mean != 0 else None
    out["coeff_var"] = std / mean if mean != 0 else None
    out["skewness"] = kernels.skewness(v)
    out["kurtosis"] = kernels.kurtosis_excess(v)
    out["gini"] = kernels.gini(v)
    out["entropy"] = kernels.histogram_entropy(v)
    normality = kernels.dagostino_normality(v)
    if normality is not None:
        stat, p = normality
        out["normality_statistic"] = stat
        out["normality_p"] = p
        out["is_normal_5"] = p > 0.05
        out["is_normal_1"] = p > 0.01
    q1, q3 = np.percentile(v, [25, 75])
    iqr = q3 - q1
    out["percent_outliers_15iqr"] = float(
        np.mean((v < q1 - 1.5 * iqr) | (v > q3 + 1.5 * iqr))
    )
    p1, p99 = np.percentile(v, [1, 99])
    out["percent_outliers_1_99"] = float(np.mean((v < p1) | (v > p99)))
    out["percent_outliers_3std"] = float(
        np.mean((v < mean - 3 * std) | (v > mean + 3 * std))
    )
    out["is_lin_space"] = _is_lin_space(values)
    out["is_log_space"] = _is_log_space(values)


def _categorical_features(values: Sequence[str], out: dict) -> None:
    if not values:
        return
    uniques = set(values)
    out["num_unique"] = float(len(uniques))
    out["percent_unique"] = len(uniques) / len(values)
    out["entropy"] = kernels.category_entropy(values)
    lengths = [len(s) for s in values]
    out["min_value_length"] = float(min(lengths))
    out["max_value_length"] = float(max(lengths))
    out["mean_value_length"] = sum(lengths) / len(lengths)


def extract_single_column_features(column: Column) -> dict:
    """Compute the per-column feature fragment, without the role suffix."""
    out: dict[str, FeatureValue] = {}
    dt = column.kind.data_type
    gt = column.kind.general_type
    out["data_type_is_string"] = dt.value == "string"
    out["data_type_is_integer"] = dt.value == "integer"
    out["data_type_is_decimal"] = dt.value == "decimal"
    out["data_type_is_time"] = dt.value == "time"
    out["general_type_is_c"] = gt is GeneralType.C
    out["general_type_is_q"] = gt is GeneralType.Q
    out["general_type_is_t"] = gt is GeneralType.T
    out["length"] = float(column.length)
    missing = sum(1 for c in column.cells if c.is_missing)
    out["percentage_none"] = missing / column.length
    _name_features(column.name, out)
    if gt is GeneralType.Q:
        present = column.numbers()
        _quantitative_features(present, out)
        if present:
            out["is_sorted"] = _is_sorted(present)
            out["is_monotonic"] = _is_monotonic(present)
    elif gt is GeneralType.C:
        present = column.texts()
        _categorical_features(present, out)
        if present:
            out["is_sorted"] = _is_sorted(present)
            out["is_monotonic"] = _is_monotonic(present)
    else:
        present = column.timestamps()
        if present:
            out["is_sorted"] = _is_sorted(present)
            out["is_monotonic"] = _is_monotonic(present)
    return out


def _shared_element_features(x: Column, y: Column, out: dict) -> None:
    rx, ry = x.renderings(), y.renderings()
    cx, cy = Counter(rx), Counter(ry)
    shared = sum(min(n, cy[v]) for v, n in cx.items())
    out["has_shared_elements"] = shared > 0
    out["num_shared_elements"] = float(shared)
    denom = max(len(rx), len(ry))
    out["percent_shared_elements"] = shared / denom if denom else None
    ux, uy = set(rx), set(ry)
    inter = ux & uy
    out["has_shared_unique_elements"] = bool(inter)
    out["num_shared_unique_elements"] = float(len(inter))
    udenom = max(len(ux), len(uy))
    out["percent_shared_unique_elements"] = len(inter) / udenom if udenom else None
    if ux and uy:
        out["nestedness"] = max(len(inter) / len(ux), len(inter) / len(uy))

    full_x = [c.render() for c in x.cells]
    full_y = [c.render() for c in y.cells]
    out["identical"] = full_x == full_y
    out["identical_unique"] = ux == uy


def _range_overlap(x: Column, y: Column) -> bool:
    if x.kind.general_type is GeneralType.Q and y.kind.general_type is GeneralType.Q:
        vx, vy = x.numbers(), y.numbers()
    elif x.kind.general_type is GeneralType.T and y.kind.general_type is GeneralType.T:
        vx, vy = x.timestamps(), y.timestamps()
    else:
        return False
    if not vx or not vy:
        return False
    return min(vx) <= max(vy) and min(vy) <= max(vx)


def _paired(x: Column, y: Column) -> list[tuple]:
    n = min(x.length, y.length)
    pairs = []
    for cx, cy in zip(x.cells[:n], y.cells[:n]):
        if not cx.is_missing and not cy.is_missing:
            pairs.append((cx, cy))
    return pairs


def _statistical_features(x: Column, y: Column, out: dict) -> None:
    gx, gy = x.kind.general_type, y.kind.general_type
    pairs = _paired(x, y)
    if gx is GeneralType.Q and gy is GeneralType.Q:
        px = [c.number for c, _ in pairs]
        py = [c.number for _, c in pairs]
        corr = kernels.pearson(px, py)
        if corr is not None:
            out["correlation_value"], out["correlation_p"] = corr
            out["correlation_significant_005"] = corr[1] < 0.05
        ks = kernels.two_sample_ks(x.numbers(), y.numbers())
        if ks is not None:
            out["ks_statistic"], out["ks_p"] = ks
            out["ks_significant_005"] = ks[1] < 0.05
        reg = kernels.linear_regression(px, py)
        if reg is not None:
            slope, _, p = reg
            out["linregress_slope"] = slope
            out["linregress_p"] = p
            out["linregress_significant_005"] = p < 0.05
    elif gx is GeneralType.C and gy is GeneralType.C:
        pa = [c.text for c, _ in pairs]
        pb = [c.text for _, c in pairs]
        chi2 = kernels.chi2_independence(pa, pb)
        if chi2 is not None:
            out["chi2_statistic"], out["chi2_p"] = chi2
            out["chi2_significant_005"] = chi2[1] < 0.05
    elif {gx, gy} == {GeneralType.C, GeneralType.Q}:
        if gx is GeneralType.C:
            cats = [c.text for c, _ in pairs]
            nums = [c.number for _, c in pairs]
        else:
            cats = [c.text for _, c in pairs]
            nums = [c.number for c, _ in pairs]
        groups: dict[str, list[float]] = {}
        for cat, num in zip(cats, nums):
            groups.setdefault(cat, []).append(num)
        anova = kernels.one_way_anova(list(groups.values()))
        if anova is not None:
            out["one_way_anova_F"], out["one_way_anova_p"] = anova
            out["one_way_anova_significant_005"] = anova[1] < 0.05


def extract_cross_column_features(x: Column, y: Column) -> dict:
    """Compute the pairwise feature fragment."""
    out: dict[str, FeatureValue] = {}
    _shared_element_features(x, y, out)
    tokens_x = {t for t in x.name.lower().split() if t}
    tokens_y = {t for t in y.name.lower().split() if t}
    out["has_shared_words"] = bool(tokens_x & tokens_y)
    out["has_range_overlap"] = _range_overlap(x, y)
    dist = kernels.levenshtein(x.name, y.name)
    out["name_edit_distance"] = float(dist)
    longest = max(len(x.name), len(y.name))
    out["name_edit_distance_normalized"] = dist / longest if longest else 0.0
    _statistical_features(x, y, out)
    return out


def _clean(value: FeatureValue) -> FeatureValue:
    if value is None or isinstance(value, bool):
        return value
    value = float(value)
    if not math.isfinite(value):
        return None
    return value


def extract_features(dataset: TabularDataset) -> FeatureMap:
    """Compute the full feature map for a dataset under the current catalog."""
    fragments: dict[str, FeatureValue] = {}
    for role, column in (("x", dataset.x), ("y", dataset.y)):
        for name, value in extract_single_column_features(column).items():
            fragments[f"{name}_{role}"] = value
    fragments.update(extract_cross_column_features(dataset.x, dataset.y))
    values = {name: _clean(fragments.get(name)) for name in CATALOG.names}
    return FeatureMap(schema_version=CATALOG.version, values=values)
