"""Statistics kernels against independent reference implementations."""

import math
import random
import string

import numpy as np
import pytest

import oracles
from vizrec.kernels import (
    category_entropy,
    chi2_independence,
    dagostino_normality,
    gini,
    histogram_entropy,
    kurtosis_excess,
    levenshtein,
    linear_regression,
    one_way_anova,
    pearson,
    shannon_entropy,
    skewness,
    two_sample_ks,
)

ATOL = 1e-9
P_ATOL = 1e-6


def random_sample(rng, n):
    kind = rng.randrange(4)
    if kind == 0:
        return [rng.uniform(-100, 100) for _ in range(n)]
    if kind == 1:
        return [rng.gauss(0, 3) for _ in range(n)]
    if kind == 2:
        return [float(rng.randrange(-5, 6)) for _ in range(n)]
    return [rng.expovariate(0.3) for _ in range(n)]


class TestMomentKernels:
    def test_skewness_matches_direct_summation(self):
        rng = random.Random(11)
        for _ in range(200):
            sample = random_sample(rng, rng.randrange(5, 201))
            assert skewness(sample) == pytest.approx(
                oracles.skewness_oracle(sample), abs=ATOL
            )

    def test_kurtosis_matches_direct_summation(self):
        rng = random.Random(12)
        for _ in range(200):
            sample = random_sample(rng, rng.randrange(5, 201))
            assert kurtosis_excess(sample) == pytest.approx(
                oracles.kurtosis_oracle(sample), abs=ATOL
            )

    def test_constant_sample_conventions(self):
        assert skewness([2.0] * 10) == 0.0
        assert kurtosis_excess([2.0] * 10) == -3.0

    def test_empty_sample_undefined(self):
        assert skewness([]) is None
        assert kurtosis_excess([]) is None

    def test_known_values(self):
        # Symmetric two-point sample: skew 0, kurtosis m4/m2^2 - 3 = -2.
        assert skewness([-1.0, 1.0]) == pytest.approx(0.0, abs=ATOL)
        assert kurtosis_excess([-1.0, 1.0]) == pytest.approx(-2.0, abs=ATOL)


class TestGini:
    def test_matches_pairwise_identity(self):
        rng = random.Random(13)
        for _ in range(100):
            sample = random_sample(rng, rng.randrange(5, 120))
            assert gini(sample) == pytest.approx(
                oracles.gini_oracle(sample), abs=ATOL
            )

    def test_negative_values_shifted(self):
        sample = [-3.0, -1.0, 2.0]
        assert gini(sample) == pytest.approx(oracles.gini_oracle(sample), abs=ATOL)

    def test_all_zero_is_zero(self):
        assert gini([0.0, 0.0, 0.0]) == 0.0

    def test_perfect_equality(self):
        assert gini([5.0] * 20) == pytest.approx(0.0, abs=ATOL)

    def test_single_owner_approaches_one(self):
        # One nonzero among n values: G = (n - 1) / n.
        values = [0.0] * 9 + [10.0]
        assert gini(values) == pytest.approx(0.9, abs=ATOL)

    def test_empty_undefined(self):
        assert gini([]) is None


class TestEntropy:
    def test_category_entropy_matches_direct(self):
        rng = random.Random(14)
        for _ in range(100):
            labels = [
                rng.choice(string.ascii_lowercase[: rng.randrange(1, 9)])
                for _ in range(rng.randrange(5, 201))
            ]
            assert category_entropy(labels) == pytest.approx(
                oracles.entropy_oracle(labels), abs=ATOL
            )

    def test_uniform_entropy_is_log_k(self):
        labels = ["a", "b", "c", "d"] * 25
        assert category_entropy(labels) == pytest.approx(math.log(4), abs=ATOL)

    def test_single_category_is_zero(self):
        assert category_entropy(["x"] * 50) == pytest.approx(0.0, abs=ATOL)

    def test_weight_entropy_matches_direct(self):
        rng = random.Random(15)
        for _ in range(50):
            weights = [rng.uniform(0, 5) for _ in range(rng.randrange(2, 30))]
            if math.fsum(weights) == 0:
                continue
            assert shannon_entropy(weights) == pytest.approx(
                oracles.weight_entropy_oracle(weights), abs=ATOL
            )

    def test_zero_weights_dropped(self):
        assert shannon_entropy([1.0, 0.0, 1.0]) == pytest.approx(
            math.log(2), abs=ATOL
        )

    def test_histogram_entropy_constant_sample(self):
        # Everything lands in one bin.
        assert histogram_entropy([3.0] * 40) == pytest.approx(0.0, abs=ATOL)

    def test_histogram_entropy_uniform_bins(self):
        # 10 bins x 4 values each over [0, 10).
        values = [b + off for b in range(10) for off in (0.1, 0.3, 0.5, 0.7)]
        assert histogram_entropy(values) == pytest.approx(math.log(10), abs=ATOL)


class TestPearson:
    def test_r_matches_direct_formula(self):
        rng = random.Random(16)
        for _ in range(200):
            n = rng.randrange(5, 201)
            xs = random_sample(rng, n)
            ys = [x * rng.uniform(-2, 2) + rng.gauss(0, 5) for x in xs]
            result = pearson(xs, ys)
            if result is None:
                continue
            r, _ = result
            assert r == pytest.approx(oracles.pearson_r_oracle(xs, ys), abs=ATOL)

    def test_p_matches_beta_series(self):
        rng = random.Random(17)
        checked = 0
        while checked < 100:
            n = rng.randrange(5, 201)
            xs = random_sample(rng, n)
            ys = [x * rng.uniform(-2, 2) + rng.gauss(0, 5) for x in xs]
            result = pearson(xs, ys)
            if result is None:
                continue
            r, p = result
            assert p == pytest.approx(oracles.pearson_p_oracle(r, n), abs=P_ATOL)
            checked += 1

    def test_perfect_correlation(self):
        xs = [1.0, 2.0, 3.0, 4.0]
        r, p = pearson(xs, [2 * x + 1 for x in xs])
        assert r == pytest.approx(1.0, abs=ATOL)
        assert p == pytest.approx(0.0, abs=P_ATOL)

    def test_degenerate_inputs_undefined(self):
        assert pearson([1.0, 2.0], [3.0, 4.0]) is None  # n < 3
        assert pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) is None  # zero variance
        assert pearson([1.0, 2.0, 3.0], [1.0, 2.0]) is None  # length mismatch


class TestLevenshtein:
    def test_matches_recursive_definition(self):
        rng = random.Random(18)
        for _ in range(200):
            a = "".join(rng.choice("abcde") for _ in range(rng.randrange(0, 15)))
            b = "".join(rng.choice("abcde") for _ in range(rng.randrange(0, 15)))
            assert levenshtein(a, b) == oracles.levenshtein_oracle(a, b)

    @pytest.mark.parametrize(
        "a, b, d",
        [
            ("", "", 0),
            ("abc", "abc", 0),
            ("abc", "", 3),
            ("kitten", "sitting", 3),
            ("flaw", "lawn", 2),
        ],
    )
    def test_known_distances(self, a, b, d):
        assert levenshtein(a, b) == d

    def test_symmetry(self):
        assert levenshtein("abcdef", "azced") == levenshtein("azced", "abcdef")


class TestAuxiliaryTests:
    """The remaining significance tests: shape and degeneracy contracts."""

    def test_ks_identical_samples(self):
        xs = [1.0, 2.0, 3.0, 4.0, 5.0]
        stat, p = two_sample_ks(xs, list(xs))
        assert stat == pytest.approx(0.0, abs=ATOL)
        assert p == pytest.approx(1.0, abs=1e-9)

    def test_ks_disjoint_samples(self):
        stat, _ = two_sample_ks([1.0, 2.0, 3.0], [10.0, 11.0, 12.0])
        assert stat == pytest.approx(1.0, abs=ATOL)

    def test_ks_unpaired_lengths_allowed(self):
        assert two_sample_ks([1.0, 2.0], [1.0, 2.0, 3.0, 4.0]) is not None

    def test_ks_statistic_matches_ecdf_scan(self):
        rng = random.Random(19)
        for _ in range(50):
            xs = random_sample(rng, rng.randrange(3, 60))
            ys = random_sample(rng, rng.randrange(3, 60))
            stat, _ = two_sample_ks(xs, ys)
            grid = sorted(set(xs) | set(ys))
            brute = max(
                abs(
                    sum(v <= g for v in xs) / len(xs)
                    - sum(v <= g for v in ys) / len(ys)
                )
                for g in grid
            )
            assert stat == pytest.approx(brute, abs=ATOL)

    def test_chi2_independent_table(self):
        a = ["p", "q"] * 30
        b = ["u", "u", "v"] * 20
        result = chi2_independence(a, b)
        assert result is not None
        _, p = result
        assert 0.0 <= p <= 1.0

    def test_chi2_degenerate_single_category(self):
        assert chi2_independence(["p"] * 10, ["u", "v"] * 5) is None

    def test_anova_equal_groups(self):
        groups = [[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]
        f, p = one_way_anova(groups)
        assert f == pytest.approx(0.0, abs=ATOL)
        assert p == pytest.approx(1.0, abs=1e-9)

    def test_anova_degenerate(self):
        assert one_way_anova([[1.0, 2.0]]) is None
        assert one_way_anova([[1.0, 1.0], [1.0, 1.0]]) is None

    def test_linear_regression_exact_line(self):
        xs = [0.0, 1.0, 2.0, 3.0]
        slope, r, p = linear_regression(xs, [3.0 + 2.0 * x for x in xs])
        assert slope == pytest.approx(2.0, abs=ATOL)
        assert r == pytest.approx(1.0, abs=ATOL)

    def test_linear_regression_degenerate(self):
        assert linear_regression([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) is None

    def test_normality_needs_eight_points(self):
        assert dagostino_normality([1.0, 2.0, 3.0]) is None
        sample = list(np.random.default_rng(0).normal(size=100))
        stat, p = dagostino_normality(sample)
        assert stat >= 0.0
        assert 0.0 <= p <= 1.0

    def test_normality_constant_undefined(self):
        assert dagostino_normality([1.0] * 20) is None
