"""
Unit tests for the exact metric core.

Tests validation, the elementary calculus (sup distance, diameter, restriction,
scaling) and the Kuratowski embeddings.
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from metric_amalgam.amalgam_logic.core import (
    EmbeddingMode,
    FinMetric,
    PseudoFinMetric,
    capped_sup_dist,
    check_metric,
    cycle_graph_metric,
    diam,
    equilateral,
    kuratowski,
    line_metric,
    min_cap,
    min_sep,
    relabel,
    restrict,
    revalidate,
    scale,
    sup_dist,
    validate,
)
from metric_amalgam.amalgam_logic.errors import ErrorCode, InvalidMetricError, MetricError


# ===============================================================================
# Validation
# ===============================================================================

class TestValidate:
    """Tests for validate and check_metric."""

    def test_two_points(self):
        """Test the smallest nontrivial metric space."""
        d = validate(["a", "b"], [[0, 1], [1, 0]])

        assert isinstance(d, FinMetric)
        assert d("a", "b") == 1
        assert d.size == 2

    def test_equilateral_is_valid(self):
        """Test three points at mutual distance 1."""
        d = validate(["a", "b", "c"], [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
        assert d.values() == [1, 1, 1]

    def test_triangle_violation(self):
        """Test d(a, c) = 3 > d(a, b) + d(b, c) = 2 is reported with its triple."""
        with pytest.raises(InvalidMetricError) as exc_info:
            validate(["a", "b", "c"], [[0, 1, 3], [1, 0, 1], [3, 1, 0]])

        assert exc_info.value.code is ErrorCode.TRIANGLE_VIOLATION
        assert [v.labels for v in exc_info.value.violations] == [("a", "b", "c")]

    def test_reports_every_violation(self):
        """Test that mixed failures are all listed under InvalidMetric."""
        violations = check_metric(["a", "b"], [[1, 2], [3, 0]])
        codes = {v.code for v in violations}

        assert ErrorCode.NONZERO_DIAGONAL in codes
        assert ErrorCode.ASYMMETRIC_PAIR in codes
        with pytest.raises(InvalidMetricError) as exc_info:
            validate(["a", "b"], [[1, 2], [3, 0]])
        assert exc_info.value.code is ErrorCode.INVALID_METRIC

    def test_zero_off_diagonal(self):
        """Test that a pseudometric is rejected in strict mode only."""
        matrix = [[0, 0], [0, 0]]
        assert check_metric(["a", "b"], matrix, strict=False) == []
        assert [v.code for v in check_metric(["a", "b"], matrix)] == [ErrorCode.ZERO_OFF_DIAGONAL]

    def test_negative_entry(self):
        """Test negative entries are named."""
        codes = {v.code for v in check_metric(["a", "b"], [[0, -1], [-1, 0]])}
        assert ErrorCode.NEGATIVE_ENTRY in codes

    def test_non_square(self):
        """Test a ragged matrix."""
        with pytest.raises(InvalidMetricError) as exc_info:
            validate(["a", "b"], [[0, 1], [1]])
        assert exc_info.value.code is ErrorCode.NON_SQUARE

    def test_duplicate_label(self):
        """Test repeated labels."""
        with pytest.raises(InvalidMetricError) as exc_info:
            validate(["a", "a"], [[0, 1], [1, 0]])
        assert exc_info.value.code is ErrorCode.DUPLICATE_LABEL

    def test_exact_scalars(self):
        """Test decimal and fraction strings parse without rounding."""
        d = validate(["a", "b", "c"], [["0", "0.1", "1/3"], ["0.1", "0", "1/3"], ["1/3", "1/3", "0"]])

        assert d("a", "b") == Fraction(1, 10)
        assert d("a", "c") == Fraction(1, 3)

    def test_invalid_scalar(self):
        """Test an unparseable entry."""
        with pytest.raises(MetricError) as exc_info:
            validate(["a", "b"], [["0", "one"], ["one", "0"]])
        assert exc_info.value.code is ErrorCode.INVALID_SCALAR

    def test_float_entries_read_as_decimals(self):
        """Test float entries are read through their decimal form, not their binary value."""
        d = validate(["a", "b"], [[0.0, 0.1], [0.1, 0.0]])
        assert d("a", "b") == Fraction(1, 10)

    @pytest.mark.parametrize("value", [float("nan"), float("inf"), True])
    def test_non_finite_scalar(self, value):
        """Test non-finite floats and booleans are not scalars."""
        with pytest.raises(MetricError) as exc_info:
            validate(["a", "b"], [[0, value], [value, 0]])
        assert exc_info.value.code is ErrorCode.INVALID_SCALAR

    def test_revalidate_accepts_constructions(self, square_c4):
        """Test revalidate on a built space."""
        assert revalidate(square_c4) == square_c4

    def test_pseudometric_promotion(self):
        """Test to_metric on a pseudometric with a zero pair."""
        pseudo = PseudoFinMetric(("a", "b"), ((Fraction(0), Fraction(0)), (Fraction(0), Fraction(0))))

        assert not pseudo.is_metric()
        with pytest.raises(MetricError) as exc_info:
            pseudo.to_metric()
        assert exc_info.value.code is ErrorCode.ZERO_OFF_DIAGONAL

    @given(oracles.sup_norm_metrics())
    @settings(max_examples=50, deadline=None)
    def test_generated_metrics_validate(self, d):
        """Test that the oracle and validate agree on generated metrics."""
        assert oracles.is_metric(d)
        assert check_metric(d.labels, d.dist) == []


# ===============================================================================
# Elementary Calculus
# ===============================================================================

class TestSupDist:
    """Tests for sup_dist and capped_sup_dist."""

    def test_identity(self, triangle_345):
        """Test d = e gives 0."""
        assert sup_dist(triangle_345, triangle_345) == 0

    def test_single_pair(self):
        """Test two points at 1 and 3."""
        assert sup_dist(line_metric([0, 1], ["a", "b"]), line_metric([0, 3], ["a", "b"])) == 2

    def test_max_over_pairs(self):
        """Test one pair raised from 2 to 7/2 in an equilateral space."""
        d = equilateral(["p", "q", "r"], 2)
        e = validate(["p", "q", "r"], [[0, 2, "7/2"], [2, 0, 2], ["7/2", 2, 0]])
        assert sup_dist(d, e) == Fraction(3, 2)

    def test_label_order_does_not_matter(self, line3):
        """Test sup_dist compares by label."""
        reordered = restrict(line3, ["c", "a", "b"])
        assert sup_dist(line3, reordered) == 0

    def test_label_mismatch(self, line3, equilateral3):
        """Test different label sets."""
        with pytest.raises(MetricError) as exc_info:
            sup_dist(line3, equilateral3)
        assert exc_info.value.code is ErrorCode.LABEL_MISMATCH

    def test_capped(self):
        """Test the bounded variant."""
        d, e = line_metric([0, 1], ["a", "b"]), line_metric([0, 5], ["a", "b"])
        assert capped_sup_dist(d, e) == 1
        assert capped_sup_dist(d, d) == 0

    @given(oracles.sup_norm_metrics(min_points=3, max_points=4), st.integers(1, 4))
    @settings(max_examples=40, deadline=None)
    def test_matches_oracle(self, d, factor):
        """Test against the naive double loop."""
        e = scale(d, factor)
        assert sup_dist(d, e) == oracles.sup_distance(d, e)


class TestDiameterAndSeparation:
    """Tests for diam and min_sep."""

    def test_singleton(self, line3):
        """Test a singleton has diameter 0."""
        assert diam(line3, ["b"]) == 0

    def test_equilateral(self):
        """Test equilateral at epsilon."""
        d = equilateral(5, Fraction(1, 7))
        assert diam(d) == Fraction(1, 7)
        assert min_sep(d) == Fraction(1, 7)

    def test_line(self, line3):
        """Test the line 0, 1, 2."""
        assert diam(line3) == 2

    def test_min_sep_line(self):
        """Test the line 0, 1, 3."""
        assert min_sep(line_metric([0, 1, 3])) == 1

    def test_min_sep_two_points(self):
        """Test one pair."""
        assert min_sep(line_metric([0, 1])) == 1

    def test_empty_subset(self, line3):
        """Test diameter of the empty set."""
        with pytest.raises(MetricError) as exc_info:
            diam(line3, [])
        assert exc_info.value.code is ErrorCode.EMPTY_SUBSET

    def test_min_sep_too_small(self, line3):
        """Test min_sep on one point."""
        with pytest.raises(MetricError) as exc_info:
            min_sep(line3, ["a"])
        assert exc_info.value.code is ErrorCode.SUBSET_TOO_SMALL

    def test_unknown_label(self, line3):
        """Test a subset naming a missing point."""
        with pytest.raises(MetricError) as exc_info:
            diam(line3, ["a", "z"])
        assert exc_info.value.code is ErrorCode.UNKNOWN_LABEL


class TestRestrict:
    """Tests for restrict."""

    def test_all_labels(self, triangle_345):
        """Test restricting to every point returns the same space."""
        assert restrict(triangle_345, triangle_345.labels) == triangle_345

    def test_singleton(self, triangle_345):
        """Test a 1x1 zero matrix."""
        single = restrict(triangle_345, ["y"])
        assert single.labels == ("y",)
        assert single.dist == ((0,),)

    def test_pair_of_equilateral(self):
        """Test any pair of the equilateral space."""
        pair = restrict(equilateral(4), ["1", "3"])
        assert pair.values() == [1]

    def test_set_follows_space_order(self, triangle_345):
        """Test that sets keep the order of the space."""
        assert restrict(triangle_345, {"z", "x"}).labels == ("x", "z")

    def test_empty(self, triangle_345):
        """Test the empty subset."""
        with pytest.raises(MetricError) as exc_info:
            restrict(triangle_345, [])
        assert exc_info.value.code is ErrorCode.EMPTY_SUBSET


class TestScaling:
    """Tests for scale and min_cap."""

    def test_scale_by_one(self, triangle_345):
        """Test the identity scale."""
        assert scale(triangle_345, 1) == triangle_345

    def test_scale_values(self, line3):
        """Test rational scaling."""
        assert scale(line3, "1/2").values() == [Fraction(1, 2), 1, Fraction(1, 2)]

    def test_cap_above_diameter(self, triangle_345):
        """Test a cap at or above the diameter."""
        assert min_cap(triangle_345, 5) == triangle_345

    def test_cap_line(self, line3):
        """Test the line 0, 1, 2 capped at 3/2."""
        capped = min_cap(line3, "3/2")

        assert capped("a", "c") == Fraction(3, 2)
        assert capped("a", "b") == 1
        assert check_metric(capped.labels, capped.dist) == []

    @pytest.mark.parametrize("c", [0, -1, "-1/2"])
    def test_nonpositive_constant(self, line3, c):
        """Test scale and min_cap reject c <= 0."""
        for operation in (scale, min_cap):
            with pytest.raises(MetricError) as exc_info:
                operation(line3, c)
            assert exc_info.value.code is ErrorCode.NONPOSITIVE_CONSTANT

    @given(oracles.sup_norm_metrics(), st.sampled_from([Fraction(1, 3), Fraction(1, 2), Fraction(2)]))
    @settings(max_examples=40, deadline=None)
    def test_cap_stays_metric(self, d, c):
        """Test min(d, c) is a metric for generated spaces."""
        assert oracles.is_metric(min_cap(d, c))


class TestRelabel:
    """Tests for relabel."""

    def test_relabel(self, line3):
        """Test a bijection."""
        moved = relabel(line3, {"a": "x", "b": "y", "c": "z"})
        assert moved("x", "z") == 2

    def test_collision(self, line3):
        """Test a non-injective mapping."""
        with pytest.raises(MetricError) as exc_info:
            relabel(line3, {"a": "x", "b": "x", "c": "z"})
        assert exc_info.value.code is ErrorCode.LABEL_COLLISION


# ===============================================================================
# Embeddings
# ===============================================================================

class TestKuratowski:
    """Tests for the based and bounded embeddings."""

    def test_based_two_points(self):
        """Test K(x) = d_x - d_a on two points."""
        d = line_metric([0, 1], ["a", "b"])
        points = kuratowski(d, EmbeddingMode.BASED, "a")

        assert points.vector("a") == (0, 0)
        assert points.vector("b") == (1, -1)
        assert points.sup_diff("a", "b") == 1

    def test_bounded_two_points(self):
        """Test L(x) = d_x on two points."""
        d = line_metric([0, 1], ["a", "b"])
        points = kuratowski(d, "bounded")

        assert points.vector("a") == (0, 1)
        assert points.vector("b") == (1, 0)
        assert points.sup_diff("a", "b") == 1

    def test_unknown_base(self, line3):
        """Test a base point that is not a label."""
        with pytest.raises(MetricError) as exc_info:
            kuratowski(line3, EmbeddingMode.BASED, "z")
        assert exc_info.value.code is ErrorCode.UNKNOWN_LABEL

    def test_concat_is_max(self, line3):
        """Test that concatenating with a cap embedding gives the max of the two distances."""
        combined = kuratowski(line3).concat(kuratowski(min_cap(line3, "1/2"), EmbeddingMode.BOUNDED))
        assert combined.distances().to_metric() == line3

    @given(oracles.sup_norm_metrics(max_points=6), st.sampled_from(list(EmbeddingMode)))
    @settings(max_examples=60, deadline=None)
    def test_isometry(self, d, mode):
        """Test both embeddings are isometric on every pair."""
        points = kuratowski(d, mode)
        assert points.distances().to_metric() == d

    @pytest.mark.slow
    @given(oracles.sup_norm_metrics(min_points=2, max_points=50, max_coord=60), st.sampled_from(list(EmbeddingMode)))
    @settings(max_examples=100, deadline=None)
    def test_isometry_sweep(self, d, mode):
        """Test both embeddings stay isometric on spaces of up to fifty points."""
        assert kuratowski(d, mode).distances().to_metric() == d

    @pytest.mark.slow
    @pytest.mark.parametrize("mode", list(EmbeddingMode))
    @pytest.mark.parametrize("build", [
        lambda: cycle_graph_metric(50),
        lambda: line_metric([Fraction(k * k, 7) for k in range(50)]),
        lambda: equilateral(50, "3/2"),
    ])
    def test_isometry_fifty_points(self, build, mode):
        """Test the embeddings on fixed fifty-point spaces."""
        d = build()
        points = kuratowski(d, mode)

        assert len(points.labels) == 50
        assert points.distances().to_metric() == d


class TestStandardSpaces:
    """Tests for the named spaces used as fixtures and violators."""

    def test_cycle_graph(self):
        """Test the 4-cycle."""
        c4 = cycle_graph_metric(4)
        assert c4("0", "2") == 2
        assert c4("0", "3") == 1

    def test_cycle_graph_too_small(self):
        """Test m < 3."""
        with pytest.raises(MetricError) as exc_info:
            cycle_graph_metric(2)
        assert exc_info.value.code is ErrorCode.SPACE_TOO_SMALL

    @given(oracles.line_points())
    @settings(max_examples=40, deadline=None)
    def test_line_metric(self, points):
        """Test line metrics are metrics with |s - t| distances."""
        d = line_metric(points)
        assert oracles.is_metric(d)
        assert diam(d) == max(points) - min(points)
