"""
Unit tests for metric inequality descriptors, defects and their parameters.
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from metric_amalgam.amalgam_logic.config import VerdictKind
from metric_amalgam.amalgam_logic.core import diam, line_metric, scale
from metric_amalgam.amalgam_logic.errors import ErrorCode, MetricError
from metric_amalgam.amalgam_logic.inequalities import (
    ExpressionDescriptor,
    HyperbolicityDescriptor,
    HyperbolicityParameter,
    MetricInequalityParameter,
    PtolemyDescriptor,
    UltrametricDescriptor,
    check_inequality,
    hyperbolicity_delta,
    make_descriptor,
    ptolemy_defect,
    subhomogeneity_probe,
    ultrametric_defect,
)
from metric_amalgam.amalgam_logic.transmissible import satisfies_property


# ===============================================================================
# Defects
# ===============================================================================

class TestUltrametricDefect:
    """Tests for ultrametric_defect."""

    def test_line(self, line3):
        """Test d(a, c) - max(d(a, b), d(b, c)) = 1."""
        report = ultrametric_defect(line3)

        assert report.defect == 1
        assert report.violated
        assert report.witness == ("a", "b", "c")

    def test_ultrametric_tree(self, ultrametric_tree):
        """Test a nonpositive defect."""
        assert not ultrametric_defect(ultrametric_tree).violated

    def test_too_few_points(self):
        """Test vacuous satisfaction on two points."""
        report = ultrametric_defect(line_metric([0, 1]))

        assert report.defect == 0
        assert report.witness is None

    @given(oracles.sup_norm_metrics(min_points=3, max_points=6), st.sampled_from([Fraction(1, 2), Fraction(3)]))
    @settings(max_examples=40, deadline=None)
    def test_matches_oracle(self, d, factor):
        """Test against all ordered triples, and linear scaling."""
        defect = ultrametric_defect(d, threads=2).defect

        assert defect == oracles.ultrametric_defect(d)
        assert ultrametric_defect(scale(d, factor)).defect == factor * defect


class TestPtolemyDefect:
    """Tests for ptolemy_defect."""

    def test_c4(self, square_c4):
        """Test 2 * 2 - 1 * 1 - 1 * 1 = 2."""
        assert ptolemy_defect(square_c4).defect == 2

    def test_euclidean_square(self, euclidean_square):
        """Test the defect may be negative."""
        report = ptolemy_defect(euclidean_square)

        assert report.defect == Fraction(-1, 25)
        assert not report.violated

    def test_three_points(self, triangle_345):
        """Test vacuous satisfaction."""
        assert ptolemy_defect(triangle_345).defect == 0

    @given(oracles.sup_norm_metrics(min_points=4, max_points=6), st.sampled_from([Fraction(1, 3), Fraction(2)]))
    @settings(max_examples=30, deadline=None)
    def test_matches_oracle(self, d, factor):
        """Test against all ordered 4-tuples, and quadratic scaling."""
        defect = ptolemy_defect(d).defect

        assert defect == oracles.ptolemy_defect(d)
        assert ptolemy_defect(scale(d, factor)).defect == factor ** 2 * defect


class TestHyperbolicityDelta:
    """Tests for hyperbolicity_delta."""

    def test_c4(self, square_c4):
        """Test the 4-cycle has delta 1."""
        report = hyperbolicity_delta(square_c4)

        assert report.defect == 1
        assert report.details["raw"] == 1

    def test_tree(self, star_tree):
        """Test a tree metric is 0-hyperbolic."""
        assert hyperbolicity_delta(star_tree).defect == 0

    def test_clipped(self, line3):
        """Test three points give delta 0."""
        report = hyperbolicity_delta(line3)

        assert report.defect == 0
        assert report.witness is None

    @given(oracles.sup_norm_metrics(min_points=4, max_points=6))
    @settings(max_examples=30, deadline=None)
    def test_matches_oracle(self, d):
        """Test against the four point oracle."""
        report = hyperbolicity_delta(d)

        assert report.defect == oracles.gromov_delta(d)
        assert report.defect >= 0


@pytest.mark.slow
class TestSmallMetricCensus:
    """Tests every metric on at most five points with distances in {1, 3/2, 2} against the oracles."""

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_ultrametric_defect(self, n):
        """Test the ultrametric defect on the whole census."""
        for d in oracles.metric_census(n):
            assert ultrametric_defect(d).defect == oracles.ultrametric_defect(d)

    @pytest.mark.parametrize("n", [4, 5])
    def test_ptolemy_defect(self, n):
        """Test the Ptolemy defect on the whole census."""
        for d in oracles.metric_census(n):
            assert ptolemy_defect(d).defect == oracles.ptolemy_defect(d)

    @pytest.mark.parametrize("n", [4, 5])
    def test_hyperbolicity_delta(self, n):
        """Test the four point delta on the whole census."""
        for d in oracles.metric_census(n):
            assert hyperbolicity_delta(d).defect == oracles.gromov_delta(d)


# ===============================================================================
# Descriptors
# ===============================================================================

class TestDescriptors:
    """Tests for descriptor construction and evaluation."""

    def test_hyperbolicity_descriptor_at_delta(self, square_c4):
        """Test delta = 1 makes the 4-cycle satisfy the four point condition."""
        report = check_inequality(HyperbolicityDescriptor(1), square_c4)

        assert report.defect == 0
        assert not report.violated

    def test_hyperbolicity_violator(self):
        """Test only delta = 0 stores a violating space."""
        assert HyperbolicityDescriptor(0).violator() is not None
        assert HyperbolicityDescriptor("1/2").violator() is None

    def test_negative_delta(self):
        """Test delta < 0."""
        with pytest.raises(MetricError) as exc_info:
            HyperbolicityDescriptor(-1)
        assert exc_info.value.code is ErrorCode.NONPOSITIVE_PARAMETER

    def test_expression_matches_ultrametric(self, geometric_line, star_tree):
        """Test a user expression equal to the built-in ultrametric descriptor."""
        expression = ExpressionDescriptor("max(x_1_2, x_2_3) - x_1_3", n=3)
        for d in (geometric_line, star_tree):
            assert check_inequality(expression, d).defect == ultrametric_defect(d).defect

    def test_expression_short_names(self, triangle_345):
        """Test xij names and division by a constant; the triangle inequality holds."""
        expression = ExpressionDescriptor("(x12 + x23 - x13) / 2", n=3)
        assert not check_inequality(expression, triangle_345).violated

    @pytest.mark.parametrize("text", [
        "y_1_2",
        "x_1_1",
        "x_1_4",
        "x_1_2 / x_1_3",
        "x_1_2 +",
        "x_1_2 ** 2",
        "x_1_2 / 0",
    ])
    def test_invalid_expressions(self, text):
        """Test rejected expressions."""
        with pytest.raises(MetricError) as exc_info:
            ExpressionDescriptor(text, n=3)
        assert exc_info.value.code is ErrorCode.INVALID_EXPRESSION

    def test_expression_arity(self):
        """Test n = 1."""
        with pytest.raises(MetricError) as exc_info:
            ExpressionDescriptor("x_1_2", n=1)
        assert exc_info.value.code is ErrorCode.ARITY_TOO_SMALL

    def test_make_descriptor(self):
        """Test lookup by name."""
        assert isinstance(make_descriptor("ultrametric"), UltrametricDescriptor)
        assert isinstance(make_descriptor("ptolemy"), PtolemyDescriptor)
        assert make_descriptor("hyperbolicity", delta="1/2").delta == Fraction(1, 2)
        assert make_descriptor("inequality", expr="x_1_2", arity=2).n == 2

    def test_make_descriptor_errors(self):
        """Test unknown names and incomplete user inequalities."""
        with pytest.raises(MetricError) as exc_info:
            make_descriptor("banach")
        assert exc_info.value.code is ErrorCode.UNKNOWN_DESCRIPTOR
        with pytest.raises(MetricError) as exc_info:
            make_descriptor("inequality", expr="x_1_2")
        assert exc_info.value.code is ErrorCode.INVALID_EXPRESSION


class TestSubhomogeneityProbe:
    """Tests for subhomogeneity_probe."""

    SCALES = ["1/2", 2, 3]

    def test_ultrametric(self, line3, triangle_345):
        """Test degree 1 holds."""
        report = subhomogeneity_probe(UltrametricDescriptor(), [line3, triangle_345], self.SCALES)

        assert report.holds
        assert report.checked == 6

    def test_ptolemy(self, square_c4, euclidean_square):
        """Test degree 2 holds."""
        assert subhomogeneity_probe(PtolemyDescriptor(), [square_c4, euclidean_square], self.SCALES).holds

    def test_hyperbolicity_positive_delta(self, square_c4):
        """Test the additive delta breaks degree 1 when shrinking."""
        report = subhomogeneity_probe(HyperbolicityDescriptor(1), [square_c4], self.SCALES)

        assert not report.holds
        assert [c["r"] for c in report.counterexamples] == [Fraction(1, 2)]

    def test_sample_too_small(self, line3):
        """Test a sample with fewer points than the arity."""
        with pytest.raises(MetricError) as exc_info:
            subhomogeneity_probe(PtolemyDescriptor(), [line3], [2])
        assert exc_info.value.code is ErrorCode.ARITY_EXCEEDS_SPACE

    def test_nonpositive_scale(self, line3):
        """Test r = 0."""
        with pytest.raises(MetricError) as exc_info:
            subhomogeneity_probe(UltrametricDescriptor(), [line3], [0])
        assert exc_info.value.code is ErrorCode.NONPOSITIVE_PARAMETER


# ===============================================================================
# Parameters
# ===============================================================================

class TestMetricInequalityParameter:
    """Tests for MetricInequalityParameter."""

    def test_single_index(self):
        """Test the index set {1}."""
        param = MetricInequalityParameter(UltrametricDescriptor())

        assert list(param.q_enum()) == [1]
        assert param.finite_q
        assert param.parse_q("1") == 1
        with pytest.raises(MetricError) as exc_info:
            param.parse_q("2")
        assert exc_info.value.code is ErrorCode.INVALID_INDEX

    @pytest.mark.parametrize("epsilon", [Fraction(1, 10), Fraction(3)])
    def test_singular_space(self, epsilon):
        """Test the violator rescaled to diameter epsilon."""
        param = MetricInequalityParameter(PtolemyDescriptor())
        space = param.singular_space(1, epsilon)

        assert diam(space) == epsilon
        assert ptolemy_defect(space).violated
        assert param.minimal_cardinality(1) == 4

    def test_padded_singular_space(self):
        """Test padding keeps the diameter and the violation."""
        space = MetricInequalityParameter(UltrametricDescriptor()).singular_space(1, Fraction(1, 10), 5)

        assert space.size == 5
        assert diam(space) == Fraction(1, 10)
        assert ultrametric_defect(space).violated

    def test_not_singular(self):
        """Test a user descriptor without a stored violator."""
        param = MetricInequalityParameter(ExpressionDescriptor("x_1_2", n=2))

        assert not param.singular
        with pytest.raises(MetricError) as exc_info:
            param.singular_space(1, Fraction(1))
        assert exc_info.value.code is ErrorCode.NOT_SINGULAR

    def test_describe(self):
        """Test descriptor fields are merged."""
        description = MetricInequalityParameter(HyperbolicityDescriptor("1/2")).describe()

        assert description["name"] == "hyperbolicity"
        assert description["delta"] == "1/2"
        assert not description["singular"]


class TestHyperbolicityParameter:
    """Tests for HyperbolicityParameter."""

    def test_c4_verdict(self, square_c4):
        """Test the first half-integer index above the 4-cycle's delta."""
        verdict = satisfies_property(HyperbolicityParameter(), square_c4)

        assert verdict.kind is VerdictKind.SATISFIED
        assert verdict.q == 1

    def test_tree_verdict(self, star_tree):
        """Test a tree satisfies delta = 0."""
        assert satisfies_property(HyperbolicityParameter(), star_tree).q == 0

    def test_not_singular(self):
        """Test no small violating spaces are produced."""
        param = HyperbolicityParameter()

        assert not param.singular
        with pytest.raises(MetricError) as exc_info:
            param.singular_space(Fraction(1, 2), Fraction(1))
        assert exc_info.value.code is ErrorCode.NOT_SINGULAR

    def test_parse_q(self):
        """Test keyed, positional and negative indices."""
        param = HyperbolicityParameter()

        assert param.parse_q("delta=1/2") == Fraction(1, 2)
        assert param.parse_q("3") == 3
        with pytest.raises(MetricError) as exc_info:
            param.parse_q("delta=-1")
        assert exc_info.value.code is ErrorCode.NONPOSITIVE_PARAMETER
