"""
Tests for paired tent maps and piecewise-linear map operations.
"""

from fractions import Fraction

import pytest

from tentcocycle.base.error_handling import DomainError
from tentcocycle.interval_maps import (
    AffineBranch,
    Interval,
    OneTailedPoint,
    PairedTentParams,
    PiecewiseLinearMap,
    Side,
    branch_count_by_half,
    compose_second_iterate,
    evaluate,
    graph_samples,
    hanging_points,
    image_of_interval,
    image_of_set,
    make_paired_tent,
    union_measure,
    weight_function,
)
from tentcocycle.step_functions import Half

F = Fraction


class TestInterval:
    """Test closed intervals inside [-1, 1]."""

    def test_measure_is_normalized(self):
        """The whole space has mass one."""
        assert Interval(-1, 1).measure == 1
        assert Interval(F(-1, 2), F(1, 4)).measure == F(3, 8)

    def test_rejects_empty_and_outside(self):
        """Degenerate or out-of-range intervals are domain errors."""
        with pytest.raises(DomainError):
            Interval(0, 0)
        with pytest.raises(DomainError):
            Interval(-2, 0)

    def test_intersect(self):
        """Intersections without interior are None."""
        assert Interval(-1, 0).intersect(F(-1, 2), 1) == Interval(F(-1, 2), 0)
        assert Interval(-1, 0).intersect(0, 1) is None

    def test_union_measure(self):
        """Measures of disjoint pieces add up."""
        assert union_measure([Interval(-1, 0), Interval(F(1, 2), 1)]) == F(3, 4)


class TestPairedTent:
    """Test construction and evaluation of T_{eps1, eps2}."""

    def test_branch_formulas(self, tent_exact):
        """Slopes are 2(1 + eps) and the turning values are eps1 and -eps2."""
        slopes = [b.slope for b in tent_exact.branches]
        assert slopes == [F(5, 2), F(-5, 2), F(-7, 2), F(7, 2)]
        assert tent_exact(F(-1, 2)) == F(1, 4)
        assert tent_exact(F(1, 2)) == F(-3, 4)
        assert tent_exact(-1) == -1
        assert tent_exact(1) == 1

    def test_left_branch_wins_at_breakpoints(self, tent_exact):
        """At 0 the branch on [-1/2, 0] is used."""
        assert evaluate(tent_exact, 0) == -1
        assert evaluate(tent_exact, F(1, 4)) == F(1, 8)

    def test_origin_records_parameters(self, tent_exact):
        """The map remembers the parameters it was built from."""
        assert tent_exact.origin == (PairedTentParams(F(1, 4), F(3, 4)),)

    def test_float_parameters(self):
        """Float parameters give float branches."""
        tent = make_paired_tent(PairedTentParams(0.5, 0.25))
        assert not tent.is_exact
        assert tent(-0.5) == pytest.approx(0.5)
        assert tent(0.5) == pytest.approx(-0.25)

    def test_parameters_validated(self):
        """eps outside [0, 1] is rejected."""
        with pytest.raises(DomainError):
            PairedTentParams(F(3, 2), 0)
        with pytest.raises(DomainError):
            PairedTentParams(-0.1, 0)

    def test_scaled(self):
        """Scaling multiplies both leakages."""
        assert PairedTentParams(1, F(1, 2)).scaled(F(1, 2)) == PairedTentParams(F(1, 2), F(1, 4))

    def test_evaluate_outside_domain(self, tent_exact):
        """Points outside [-1, 1] are domain errors."""
        with pytest.raises(DomainError):
            evaluate(tent_exact, F(3, 2))

    def test_rejects_weak_expansion(self):
        """Branches must expand by at least 2."""
        with pytest.raises(DomainError):
            PiecewiseLinearMap((AffineBranch(Interval(-1, 1), 1, 0),))

    def test_rejects_gaps(self):
        """Branch domains must tile [-1, 1]."""
        with pytest.raises(DomainError):
            PiecewiseLinearMap((
                AffineBranch(Interval(-1, 0), 2, 1),
                AffineBranch(Interval(F(1, 2), 1), 4, -3),
            ))


class TestSecondIterate:
    """Test composition of two paired tent maps."""

    def test_composition_matches_pointwise(self, tent_exact, second_iterate_exact):
        """S(x) = T2(T1(x)) away from breakpoints."""
        outer = make_paired_tent(PairedTentParams(F(1, 2), F(1, 8)))
        for x in (F(-7, 8), F(-5, 8), F(-1, 10), F(1, 5), F(2, 3), F(19, 20)):
            assert second_iterate_exact(x) == outer(tent_exact(x))

    def test_branch_counts(self, second_iterate_exact):
        """eps1 = 1/4 gives 6 branches on [-1, 0]; the full image of [0, 1] gives 8."""
        assert len(second_iterate_exact) == 14
        assert branch_count_by_half(second_iterate_exact) == {Half.MINUS: 6, Half.PLUS: 8}

    def test_branch_count_without_leakage(self):
        """With eps1 = 0 the left half maps onto [-1, 0] and splits into 4 branches."""
        first = make_paired_tent(PairedTentParams(0, F(1, 2)))
        second = make_paired_tent(PairedTentParams(F(1, 2), F(1, 2)))
        counts = branch_count_by_half(compose_second_iterate(first, second))
        assert counts[Half.MINUS] == 4

    def test_branch_count_large_leakage(self):
        """With eps1 in (1/2, 1) the left half reaches every branch of the second map."""
        first = make_paired_tent(PairedTentParams(F(3, 4), F(1, 2)))
        second = make_paired_tent(PairedTentParams(F(1, 2), F(1, 2)))
        counts = branch_count_by_half(compose_second_iterate(first, second))
        assert counts[Half.MINUS] == 8

    def test_slopes_multiply(self, second_iterate_exact):
        """Every branch slope is a product of two tent slopes."""
        allowed = {a * b for a in (F(5, 2), F(7, 2)) for b in (F(3), F(9, 4))}
        assert {abs(b.slope) for b in second_iterate_exact.branches} <= allowed

    def test_origin_has_both_maps(self, second_iterate_exact):
        """The composed map records both parameter pairs in order."""
        assert [p.eps1 for p in second_iterate_exact.origin] == [F(1, 4), F(1, 2)]


class TestWeightsAndImages:
    """Test the weight function, hanging points and images."""

    def test_weight_function(self, tent_exact):
        """g = 1/|T'| is constant on each half."""
        g = weight_function(tent_exact)
        assert g.breakpoints == (-1, 0, 1)
        assert g.values == (F(2, 5), F(2, 7))

    def test_hanging_points(self, tent_exact):
        """Only the turning points at +-1/2 hang, once from each side."""
        expected = {
            OneTailedPoint(F(-1, 2), Side.MINUS),
            OneTailedPoint(F(-1, 2), Side.PLUS),
            OneTailedPoint(F(1, 2), Side.MINUS),
            OneTailedPoint(F(1, 2), Side.PLUS),
        }
        assert hanging_points(tent_exact) == expected

    def test_full_leakage_has_no_hanging_points(self, tent_one):
        """eps = 1 sends the turning points to +-1."""
        assert hanging_points(tent_one) == set()

    def test_hanging_points_within_half(self, tent_exact):
        """Restricting to [-1, 0] keeps the left turning point only."""
        points = hanging_points(tent_exact, within=Interval(-1, 0))
        assert {p.x for p in points} == {F(-1, 2)}

    def test_image_of_left_half(self, tent_exact):
        """T maps [-1, 0] onto [-1, eps1]."""
        assert image_of_interval(tent_exact, Interval(-1, 0)) == [Interval(-1, F(1, 4))]

    def test_image_of_small_interval(self, tent_exact):
        """An interval inside one branch maps affinely."""
        assert image_of_interval(tent_exact, Interval(F(1, 2), F(3, 4))) == [Interval(F(-3, 4), F(1, 8))]

    def test_image_of_set_merges(self, tent_exact):
        """Overlapping images merge into one interval."""
        image = image_of_set(tent_exact, [Interval(-1, F(-1, 2)), Interval(F(-1, 2), 0)])
        assert image == [Interval(-1, F(1, 4))]

    def test_graph_samples(self, tent_one):
        """Samples are evenly spaced and follow the map."""
        samples = graph_samples(tent_one, 5)
        assert [x for x, _ in samples] == [-1.0, -0.5, 0.0, 0.5, 1.0]
        assert [y for _, y in samples] == [-1.0, 1.0, -1.0, -1.0, 1.0]

    def test_graph_needs_two_points(self, tent_one):
        """A graph with one sample is rejected."""
        with pytest.raises(DomainError):
            graph_samples(tent_one, 1)
