"""Feature extraction: schema coverage, goldens, and cross-column stats."""

import math

import pytest

import oracles
from conftest import ccol, dataset, num_dataset, qcol
from vizrec import CATALOG_VERSION, extract_features, schema_for
from vizrec.catalog import CATALOG, FeatureKind
from vizrec.features import (
    extract_cross_column_features,
    extract_single_column_features,
)
from vizrec.tabular import build_column

ATOL = 1e-9


class TestCatalogSchema:
    def test_total_size(self):
        assert len(CATALOG) == 120

    def test_suffixed_and_cross_split(self):
        x_names = [n for n in CATALOG.names if n.endswith("_x")]
        y_names = [n for n in CATALOG.names if n.endswith("_y")]
        cross = [n for n in CATALOG.names if not n.endswith(("_x", "_y"))]
        assert len(x_names) == 46
        assert len(y_names) == 46
        assert len(cross) == 28
        assert [n[:-2] for n in x_names] == [n[:-2] for n in y_names]

    def test_every_name_has_a_kind(self):
        for name in CATALOG.names:
            assert CATALOG.kind_of(name) in (FeatureKind.BOOLEAN, FeatureKind.NUMERIC)

    def test_schema_for_rejects_unknown_version(self):
        with pytest.raises(Exception):
            schema_for("no-such-catalog")

    def test_current_version_resolves(self):
        assert schema_for(CATALOG_VERSION) is CATALOG


# Golden for a constant-zero 800-row decimal column. Every value is
# hand-derivable: zero moments, the constant-sample conventions for shape
# statistics, missing for zero-denominator ratios, single-bin entropy, and
# trivially sorted/evenly spaced order flags.
CONSTANT_ZERO_GOLDEN = {
    "data_type_is_string": False,
    "data_type_is_integer": False,
    "data_type_is_decimal": True,
    "data_type_is_time": False,
    "general_type_is_c": False,
    "general_type_is_q": True,
    "general_type_is_t": False,
    "length": 800.0,
    "percentage_none": 0.0,
    "name_length": 1.0,
    "num_words_in_name": 1.0,
    "has_uppercase_in_name": False,
    "has_digit_in_name": False,
    "has_currency_symbol_in_name": False,
    "mean": 0.0,
    "median": 0.0,
    "mode": 0.0,
    "var": 0.0,
    "std": 0.0,
    "min": 0.0,
    "max": 0.0,
    "range": 0.0,
    "normalized_mean": None,
    "normalized_median": None,
    "normalized_range": None,
    "coeff_var": None,
    "skewness": 0.0,
    "kurtosis": -3.0,
    "gini": 0.0,
    "entropy": 0.0,
    "percent_outliers_15iqr": 0.0,
    "percent_outliers_1_99": 0.0,
    "percent_outliers_3std": 0.0,
    "is_lin_space": True,
    "is_log_space": False,
    "is_sorted": True,
    "is_monotonic": True,
}


class TestConstantZeroGolden:
    def test_single_column_fragment_matches_golden(self):
        col = build_column("y", ["0.0"] * 800)
        feats = extract_single_column_features(col)
        assert set(feats) == set(CONSTANT_ZERO_GOLDEN)
        for name, expected in CONSTANT_ZERO_GOLDEN.items():
            got = feats[name]
            if expected is None:
                assert got is None, name
            elif isinstance(expected, bool):
                assert got is expected, name
            else:
                assert got == pytest.approx(expected, abs=ATOL), name

    def test_normality_undefined_for_constant(self):
        col = build_column("y", ["0.0"] * 800)
        feats = extract_single_column_features(col)
        assert "normality_p" not in feats


class TestNameFeatures:
    def test_plain_name(self):
        feats = extract_single_column_features(qcol("price", [1.0, 2.0]))
        assert feats["name_length"] == 5.0
        assert feats["num_words_in_name"] == 1.0
        assert feats["has_uppercase_in_name"] is False

    def test_busy_name(self):
        feats = extract_single_column_features(qcol("Total Sales 2020", [1.0, 2.0]))
        assert feats["name_length"] == 16.0
        assert feats["num_words_in_name"] == 3.0
        assert feats["has_uppercase_in_name"] is True
        assert feats["has_digit_in_name"] is True

    def test_currency_symbol(self):
        feats = extract_single_column_features(qcol("$ amount", [1.0]))
        assert feats["has_currency_symbol_in_name"] is True


class TestQuantitativeFeatures:
    SAMPLE = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]

    def feats(self, values=None):
        return extract_single_column_features(qcol("v", values or self.SAMPLE))

    def test_location_and_spread(self):
        f = self.feats()
        v = self.SAMPLE
        n = len(v)
        mean = oracles.mean_oracle(v)
        assert f["mean"] == pytest.approx(mean, abs=ATOL)
        assert f["min"] == 1.0 and f["max"] == 9.0 and f["range"] == 8.0
        var = math.fsum((x - mean) ** 2 for x in v) / n
        assert f["var"] == pytest.approx(var, abs=ATOL)
        assert f["std"] == pytest.approx(math.sqrt(var), abs=ATOL)

    def test_normalized_ratios(self):
        f = self.feats()
        assert f["normalized_mean"] == pytest.approx(f["mean"] / f["max"], abs=ATOL)
        assert f["normalized_median"] == pytest.approx(f["median"] / f["max"], abs=ATOL)
        assert f["normalized_range"] == pytest.approx(f["range"] / f["mean"], abs=ATOL)
        assert f["coeff_var"] == pytest.approx(f["std"] / f["mean"], abs=ATOL)

    def test_zero_denominators_are_missing(self):
        # max = 0 kills the max-normalized ratios; mean = 0 kills the rest.
        f = self.feats([-1.0, 0.0, -2.0, 3.0])  # mean = 0, max = 3
        assert f["normalized_range"] is None
        assert f["coeff_var"] is None
        assert f["normalized_mean"] == pytest.approx(0.0, abs=ATOL)

    def test_shape_statistics_match_oracles(self):
        f = self.feats()
        assert f["skewness"] == pytest.approx(
            oracles.skewness_oracle(self.SAMPLE), abs=ATOL
        )
        assert f["kurtosis"] == pytest.approx(
            oracles.kurtosis_oracle(self.SAMPLE), abs=ATOL
        )
        assert f["gini"] == pytest.approx(
            oracles.gini_oracle(self.SAMPLE), abs=ATOL
        )

    def test_mode_breaks_ties_low(self):
        f = self.feats([2.0, 2.0, 1.0, 1.0, 3.0])
        assert f["mode"] == 1.0

    def test_outlier_fractions(self):
        # 39 tight values and one far spike: every definition flags just it.
        values = [float(i % 10) for i in range(39)] + [1000.0]
        f = self.feats(values)
        assert f["percent_outliers_15iqr"] == pytest.approx(1 / 40, abs=ATOL)
        assert f["percent_outliers_3std"] == pytest.approx(1 / 40, abs=ATOL)

    def test_normality_present_for_large_samples(self):
        values = [math.sin(i * 0.7) * 3 + i * 0.01 for i in range(100)]
        f = self.feats(values)
        assert 0.0 <= f["normality_p"] <= 1.0
        assert f["is_normal_5"] is (f["normality_p"] > 0.05)
        assert f["is_normal_1"] is (f["normality_p"] > 0.01)

    def test_spacing_flags(self):
        assert self.feats([1.0, 3.0, 5.0, 7.0])["is_lin_space"] is True
        assert self.feats([1.0, 2.0, 4.0, 8.0])["is_log_space"] is True
        f = self.feats([1.0, 2.0, 4.0, 9.0])
        assert f["is_lin_space"] is False
        assert f["is_log_space"] is False

    def test_order_flags(self):
        increasing = self.feats([1.0, 2.0, 2.0, 5.0])
        assert increasing["is_sorted"] is True and increasing["is_monotonic"] is True
        decreasing = self.feats([5.0, 3.0, 1.0])
        assert decreasing["is_sorted"] is False and decreasing["is_monotonic"] is True
        jumbled = self.feats([1.0, 5.0, 2.0])
        assert jumbled["is_sorted"] is False and jumbled["is_monotonic"] is False

    def test_missing_values_excluded(self):
        f = extract_single_column_features(qcol("v", [1.0, None, 3.0, None]))
        assert f["length"] == 4.0
        assert f["percentage_none"] == pytest.approx(0.5, abs=ATOL)
        assert f["mean"] == pytest.approx(2.0, abs=ATOL)


class TestCategoricalFeatures:
    def test_uniqueness_and_lengths(self):
        f = extract_single_column_features(ccol("region", ["aa", "bb", "aa", "cccc"]))
        assert f["num_unique"] == 3.0
        assert f["percent_unique"] == pytest.approx(0.75, abs=ATOL)
        assert f["min_value_length"] == 2.0
        assert f["max_value_length"] == 4.0
        assert f["mean_value_length"] == pytest.approx(2.5, abs=ATOL)

    def test_entropy_matches_oracle(self):
        labels = ["a", "a", "b", "c", "c", "c"]
        f = extract_single_column_features(ccol("k", labels))
        assert f["entropy"] == pytest.approx(oracles.entropy_oracle(labels), abs=ATOL)

    def test_string_order_flags(self):
        f = extract_single_column_features(ccol("k", ["apple", "banana", "cherry"]))
        assert f["is_sorted"] is True

    def test_no_quantitative_fragment(self):
        f = extract_single_column_features(ccol("k", ["a", "b"]))
        assert "mean" not in f
        assert "skewness" not in f


class TestTemporalFeatures:
    def test_sortedness_on_timestamps(self):
        col = build_column("when", ["2020-01-01", "2020-01-02", "2020-01-03"])
        f = extract_single_column_features(col)
        assert f["general_type_is_t"] is True
        assert f["is_sorted"] is True
        assert f["is_monotonic"] is True
        assert "mean" not in f


class TestSharedElementFeatures:
    def test_identical_columns(self):
        x, y = qcol("x", [1.0, 2.0, 3.0]), qcol("y", [1.0, 2.0, 3.0])
        f = extract_cross_column_features(x, y)
        assert f["identical"] is True
        assert f["identical_unique"] is True
        assert f["num_shared_elements"] == 3.0
        assert f["percent_shared_elements"] == pytest.approx(1.0, abs=ATOL)
        assert f["nestedness"] == pytest.approx(1.0, abs=ATOL)

    def test_multiset_sharing(self):
        x = ccol("x", ["a", "a", "b", "c"])
        y = ccol("y", ["a", "b", "b", "d", "e"])
        f = extract_cross_column_features(x, y)
        # min counts: a -> 1, b -> 1.
        assert f["num_shared_elements"] == 2.0
        assert f["percent_shared_elements"] == pytest.approx(2 / 5, abs=ATOL)
        assert f["num_shared_unique_elements"] == 2.0
        assert f["percent_shared_unique_elements"] == pytest.approx(2 / 4, abs=ATOL)
        assert f["identical"] is False

    def test_disjoint_columns(self):
        f = extract_cross_column_features(ccol("x", ["a"]), ccol("y", ["b"]))
        assert f["has_shared_elements"] is False
        assert f["nestedness"] == pytest.approx(0.0, abs=ATOL)

    def test_shared_words_in_names(self):
        x = ccol("total sales", ["a"])
        y = qcol("sales 2020", [1.0])
        assert extract_cross_column_features(x, y)["has_shared_words"] is True
        z = qcol("price", [1.0])
        assert extract_cross_column_features(x, z)["has_shared_words"] is False

    def test_name_edit_distance(self):
        f = extract_cross_column_features(qcol("kitten", [1.0]), qcol("sitting", [1.0]))
        assert f["name_edit_distance"] == 3.0
        assert f["name_edit_distance_normalized"] == pytest.approx(3 / 7, abs=ATOL)

    def test_range_overlap(self):
        a = extract_cross_column_features(qcol("x", [0.0, 5.0]), qcol("y", [4.0, 9.0]))
        assert a["has_range_overlap"] is True
        b = extract_cross_column_features(qcol("x", [0.0, 1.0]), qcol("y", [2.0, 3.0]))
        assert b["has_range_overlap"] is False
        c = extract_cross_column_features(ccol("x", ["a"]), qcol("y", [1.0]))
        assert c["has_range_overlap"] is False


class TestCrossStatisticalFeatures:
    def test_qq_correlation_matches_oracle(self):
        xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        ys = [2.1, 3.9, 6.2, 8.1, 9.8, 12.3]
        f = extract_cross_column_features(qcol("x", xs), qcol("y", ys))
        r = oracles.pearson_r_oracle(xs, ys)
        assert f["correlation_value"] == pytest.approx(r, abs=ATOL)
        assert f["correlation_p"] == pytest.approx(
            oracles.pearson_p_oracle(r, len(xs)), abs=1e-6
        )
        assert f["correlation_significant_005"] is (f["correlation_p"] < 0.05)
        assert "ks_statistic" in f
        assert "linregress_slope" in f

    def test_paired_stats_truncate_and_drop_missing(self):
        # Pairing stops at the shorter column and skips missing pairs;
        # the KS statistic still sees both full samples.
        x = qcol("x", [1.0, 2.0, None, 4.0, 5.0, 6.0, 7.0])
        y = qcol("y", [2.0, 4.0, 6.0, None, 10.0])
        f = extract_cross_column_features(x, y)
        px, py = [1.0, 2.0, 5.0], [2.0, 4.0, 10.0]
        r = oracles.pearson_r_oracle(px, py)
        assert f["correlation_value"] == pytest.approx(r, abs=ATOL)

    def test_qq_degenerate_correlation_missing(self):
        f = extract_cross_column_features(qcol("x", [1.0, 1.0, 1.0]), qcol("y", [1.0, 2.0, 3.0]))
        assert "correlation_value" not in f

    def test_cc_chi2(self):
        x = ccol("x", ["p", "q"] * 20)
        y = ccol("y", ["u", "u", "v", "v"] * 10)
        f = extract_cross_column_features(x, y)
        assert "chi2_statistic" in f
        assert 0.0 <= f["chi2_p"] <= 1.0

    def test_cq_anova(self):
        x = ccol("group", ["a"] * 5 + ["b"] * 5)
        y = qcol("value", [1.0, 2.0, 1.5, 2.5, 2.0, 8.0, 9.0, 8.5, 9.5, 9.0])
        f = extract_cross_column_features(x, y)
        assert f["one_way_anova_F"] > 1.0
        assert f["one_way_anova_significant_005"] is True

    def test_qc_anova_role_symmetric(self):
        y = ccol("group", ["a"] * 5 + ["b"] * 5)
        x = qcol("value", [1.0, 2.0, 1.5, 2.5, 2.0, 8.0, 9.0, 8.5, 9.5, 9.0])
        f = extract_cross_column_features(x, y)
        assert "one_way_anova_F" in f


class TestExtractFeatures:
    def test_full_map_covers_schema(self):
        ds = num_dataset("d", [1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
        fm = extract_features(ds)
        assert fm.schema_version == CATALOG_VERSION
        assert list(fm.values) == list(CATALOG.names)

    def test_inapplicable_features_are_missing(self):
        ds = dataset("d", ccol("k", ["a", "b"]), qcol("v", [1.0, 2.0]))
        fm = extract_features(ds)
        assert fm.values["mean_x"] is None
        assert fm.values["num_unique_y"] is None
        assert fm.values["mean_y"] is not None

    def test_values_are_clean(self):
        ds = num_dataset("d", [1.0, 2.0, 3.0, 4.0], [1.0, 4.0, 9.0, 16.0])
        for v in extract_features(ds).values.values():
            assert v is None or isinstance(v, bool) or (
                isinstance(v, float) and math.isfinite(v)
            )

    def test_suffixes_follow_roles(self):
        ds = dataset("d", qcol("alpha", [5.0, 1.0]), qcol("beta", [2.0, 9.0]))
        fm = extract_features(ds)
        assert fm.values["min_x"] == 1.0
        assert fm.values["min_y"] == 2.0

    def test_json_round_trip(self):
        ds = num_dataset("d", [1.0, 2.0, 3.0], [3.0, 1.0, 2.0])
        fm = extract_features(ds)
        from vizrec import FeatureMap

        again = FeatureMap.from_json(fm.to_json())
        assert again == fm

    def test_deterministic(self):
        ds = num_dataset("d", [1.5, 2.5, 3.5, 9.0], [4.0, 4.0, 2.0, 1.0])
        assert extract_features(ds) == extract_features(ds)
