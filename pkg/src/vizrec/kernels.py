"""Statistical kernels used by feature extraction.

Every kernel returns None (or None-valued tuples) instead of raising when the
input is degenerate or below the test's minimum size, so extraction can map
the result straight to a missing feature value.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from typing import Sequence

import numpy as np
from scipy import stats


def _arr(values: Sequence[float]) -> np.ndarray:
    return np.asarray(values, dtype=float)


def skewness(values: Sequence[float]) -> float | None:
    """Population skewness m3 / m2^1.5; 0.0 for a constant sample."""
    v = _arr(values)
    if v.size == 0:
        return None
    d = v - v.mean()
    m2 = float(np.mean(d ** 2))
    if m2 == 0.0:
        return 0.0
    m3 = float(np.mean(d ** 3))
    return m3 / m2 ** 1.5


def kurtosis_excess(values: Sequence[float]) -> float | None:
    """Population excess kurtosis m4 / m2^2 - 3; -3.0 for a constant sample."""
    v = _arr(values)
    if v.size == 0:
        return None
    d = v - v.mean()
    m2 = float(np.mean(d ** 2))
    if m2 == 0.0:
        return -3.0
    m4 = float(np.mean(d ** 4))
    return m4 / m2 ** 2 - 3.0


def gini(values: Sequence[float]) -> float | None:
    """Gini coefficient; values are shifted by -min when min < 0.

    Uses the sorted-index identity G = 2*sum(i*x_i)/(n*sum(x)) - (n+1)/n.
    Returns 0.0 when the (shifted) values sum to zero.
    """
    v = _arr(values)
    if v.size == 0:
        return None
    lo = float(v.min())
    if lo < 0:
        v = v - lo
    total = float(v.sum())
    if total == 0.0:
        return 0.0
    n = v.size
    s = np.sort(v)
    ranks = np.arange(1, n + 1, dtype=float)
    return float(2.0 * np.dot(ranks, s) / (n * total) - (n + 1) / n)


def shannon_entropy(weights: Sequence[float]) -> float | None:
    """Shannon entropy (natural log) of a nonnegative weight vector."""
    w = _arr(weights)
    if w.size == 0:
        return None
    total = float(w.sum())
    if total <= 0:
        return None
    p = w[w > 0] / total
    return float(-np.sum(p * np.log(p)))


def category_entropy(values: Sequence[str]) -> float | None:
    if not values:
        return None
    counts = list(Counter(values).values())
    return shannon_entropy(counts)


def histogram_entropy(values: Sequence[float], bins: int = 10) -> float | None:
    """Entropy of an equal-width histogram over [min, max]."""
    v = _arr(values)
    if v.size == 0:
        return None
    counts, _ = np.histogram(v, bins=bins)
    return shannon_entropy(counts)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float] | None:
    """Pearson r and two-sided p for paired samples; None when undefined.

    Requires n >= 3 and nonzero variance on both sides.
    """
    x, y = _arr(xs), _arr(ys)
    if x.size != y.size or x.size < 3:
        return None
    if float(np.var(x)) == 0.0 or float(np.var(y)) == 0.0:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r, p = stats.pearsonr(x, y)
    return float(r), float(p)


def two_sample_ks(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float] | None:
    """Two-sample Kolmogorov-Smirnov statistic and p; samples are unpaired."""
    x, y = _arr(xs), _arr(ys)
    if x.size == 0 or y.size == 0:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = stats.ks_2samp(x, y)
    return float(res.statistic), float(res.pvalue)


def chi2_independence(a: Sequence[str], b: Sequence[str]) -> tuple[float, float] | None:
    """Chi-squared test of independence over co-occurring category pairs."""
    n = min(len(a), len(b))
    if n == 0:
        return None
    table = Counter(zip(a[:n], b[:n]))
    rows = sorted({k[0] for k in table})
    cols = sorted({k[1] for k in table})
    if len(rows) < 2 or len(cols) < 2:
        return None
    matrix = np.array([[table.get((r, c), 0) for c in cols] for r in rows], dtype=float)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = stats.chi2_contingency(matrix)
    except ValueError:
        return None
    return float(res.statistic), float(res.pvalue)


def one_way_anova(groups: Sequence[Sequence[float]]) -> tuple[float, float] | None:
    """One-way ANOVA F and p across groups; None when degenerate."""
    filled = [_arr(g) for g in groups if len(g) > 0]
    if len(filled) < 2:
        return None
    pooled = np.concatenate(filled)
    if pooled.size <= len(filled) or float(np.var(pooled)) == 0.0:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = stats.f_oneway(*filled)
    f, p = float(res.statistic), float(res.pvalue)
    if math.isnan(f) or math.isnan(p):
        return None
    return f, p


def linear_regression(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float] | None:
    """Least-squares slope, r, and two-sided p for paired samples."""
    x, y = _arr(xs), _arr(ys)
    if x.size != y.size or x.size < 3:
        return None
    if float(np.var(x)) == 0.0:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = stats.linregress(x, y)
    slope, p = float(res.slope), float(res.pvalue)
    if math.isnan(slope):
        return None
    return slope, float(res.rvalue), p


def dagostino_normality(values: Sequence[float]) -> tuple[float, float] | None:
    """D'Agostino-Pearson omnibus normality test; needs n >= 8 and spread."""
    v = _arr(values)
    if v.size < 8 or float(np.var(v)) == 0.0:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        stat, p = stats.normaltest(v)
    return float(stat), float(p)


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit costs, iterative two-row DP."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]
