"""
Tests for the cone C_a and its Hilbert projective metric.
"""

import math
from fractions import Fraction

import pytest

from tentcocycle.base.error_handling import DomainError, PreconditionError
from tentcocycle.cone_metric import (
    ConeParams,
    adaptedness_ratio,
    comparability_norm_bound,
    cone_contains,
    contraction_factor,
    d_adapted_verify,
    estimate_image_diameter,
    hilbert_alpha_beta,
    lift_into_cone,
    probe_family,
    random_cone_element,
    theta,
    theta_to_constant_bound,
)
from tentcocycle.step_functions import StepFunction, constant, indicator, l1_norm, zero

F = Fraction


@pytest.fixture
def narrow_cone():
    """C_1 with nu = 1/2."""
    return ConeParams(a=1, nu=F(1, 2))


def two_level(left, right) -> StepFunction:
    return StepFunction((-1, 0, 1), (left, right))


class TestConeParams:
    """Test parameter validation and derived constants."""

    def test_aperture_from_nu(self):
        """nu = 0.8 needs a = 120; the sharp constants need a = 14."""
        assert ConeParams.from_nu(0.8).a == 120
        assert ConeParams.from_nu(0.8, sharp=True).a == 14

    def test_adaptedness_constant(self, cone):
        """D = 2a + 1."""
        assert cone.D == 241

    def test_invalid(self):
        """a > 0 and nu in (0, 1) are required."""
        with pytest.raises(DomainError):
            ConeParams(a=0, nu=0.5)
        with pytest.raises(DomainError):
            ConeParams(a=1, nu=1)
        with pytest.raises(DomainError):
            ConeParams.from_nu(0.7)


class TestMembership:
    """Test cone_contains and the lifting helpers."""

    def test_constant_is_inside(self, cone):
        assert cone_contains(constant(1), cone)

    def test_zero_and_negative_are_outside(self, cone):
        """The cone excludes zero and functions with negative values."""
        assert not cone_contains(zero(), cone)
        assert not cone_contains(two_level(1, -1), cone)

    def test_aperture_bound(self, narrow_cone):
        """(3, 1) has Var 2 and L1 norm 2: inside C_1 but not C_(1/2)."""
        f = two_level(3, 1)
        assert cone_contains(f, narrow_cone)
        assert not cone_contains(f, narrow_cone, scale=narrow_cone.nu)

    def test_lift_into_cone(self, narrow_cone):
        """The indicator of [-1, 0] needs the constant 1/2 added to enter C_1."""
        lifted = lift_into_cone(indicator(-1, 0), narrow_cone)
        assert lifted.values == (F(3, 2), F(1, 2))
        assert cone_contains(lifted, narrow_cone)

    def test_random_cone_elements(self, rng, cone):
        """Random elements have unit L1 norm and lie in the requested subcone."""
        for _ in range(20):
            f = random_cone_element(rng, cone, ratio=F(4, 5), exact=True)
            assert l1_norm(f) == 1
            assert cone_contains(f, cone, scale=F(4, 5))

    def test_probe_family(self):
        """One constant, one bump per grid cell and the random probes."""
        params = ConeParams(a=2, nu=F(1, 2))
        probes = probe_family(params, n_random=3)
        assert len(probes) == 1 + 4 + 3
        for f in probes:
            assert cone_contains(f, params, tol=1e-9)
            assert float(l1_norm(f)) == pytest.approx(1.0)


class TestHilbertMetric:
    """Test alpha, beta and theta."""

    def test_wide_cone_uses_pointwise_ratios(self, cone):
        """In a wide cone alpha and beta are the min and max of w / v."""
        geometry = hilbert_alpha_beta(constant(1), two_level(3, 1), cone)
        assert geometry.alpha == pytest.approx(1.0)
        assert geometry.beta == pytest.approx(3.0)
        assert geometry.theta == pytest.approx(math.log(3))

    def test_narrow_cone_needs_bisection(self, narrow_cone):
        """In C_1 the variation constraint binds: alpha = 1/2 and beta = 5/2 for (2, 1)."""
        geometry = hilbert_alpha_beta(constant(1), two_level(2, 1), narrow_cone)
        assert geometry.alpha == pytest.approx(0.5, rel=1e-8)
        assert geometry.beta == pytest.approx(2.5, rel=1e-8)
        assert geometry.theta == pytest.approx(math.log(5), abs=1e-7)

    def test_projective_invariance(self, cone):
        """theta ignores positive scalings of either argument."""
        v, w = constant(1), two_level(3, 1)
        assert theta(v, w * 7, cone) == pytest.approx(theta(v, w, cone), abs=1e-9)
        assert theta(v * F(1, 3), w, cone) == pytest.approx(theta(v, w, cone), abs=1e-9)

    def test_symmetric_and_zero_on_multiples(self, cone):
        v, w = constant(1), two_level(3, 1)
        assert theta(v, w, cone) == pytest.approx(theta(w, v, cone), abs=1e-9)
        assert theta(w, w * 2, cone) == pytest.approx(0.0, abs=1e-9)

    def test_disjoint_supports_are_infinitely_far(self, cone):
        """A function vanishing on a cell cannot dominate one that does not."""
        geometry = hilbert_alpha_beta(two_level(1, 0), constant(1), cone)
        assert geometry.alpha == pytest.approx(1.0)
        assert geometry.beta == math.inf
        assert geometry.theta == math.inf

    def test_rejects_points_outside_the_cone(self, narrow_cone):
        with pytest.raises(DomainError):
            theta(constant(1), two_level(10, 1), narrow_cone)

    def test_contraction_factor(self):
        """tanh(D / 4), with 1 for an unbounded diameter."""
        assert contraction_factor(0) == 0
        assert contraction_factor(4) == pytest.approx(math.tanh(1))
        assert contraction_factor(math.inf) == 1.0
        with pytest.raises(DomainError):
            contraction_factor(-1)


class TestNormComparisons:
    """Test the bounds relating theta to norms."""

    def test_theta_to_constant(self, cone):
        """log((1 + nu)/(1 - nu) sup/inf) = log 27 for (3, 1) with nu = 0.8."""
        bound = theta_to_constant_bound(two_level(3, 1), cone)
        assert bound == pytest.approx(math.log(27))

    def test_theta_to_constant_needs_subcone(self, narrow_cone):
        with pytest.raises(PreconditionError):
            theta_to_constant_bound(two_level(3, 1), narrow_cone)

    def test_d_adapted(self, cone):
        """-1 <= g <= 1 in the cone order implies ||g|| <= D ||1||."""
        g = two_level(F(1, 2), F(-1, 2))
        assert d_adapted_verify(constant(1), g, cone)
        assert adaptedness_ratio(constant(1), g) == 1.0

    def test_d_adapted_needs_order(self, cone):
        with pytest.raises(PreconditionError):
            d_adapted_verify(constant(1), constant(2), cone)

    def test_comparability(self, cone):
        """Equal-norm elements are within D^2 r (e^theta - 1) of each other."""
        g = two_level(F(4, 5), F(2, 5))
        bound = comparability_norm_bound(constant(1), g, cone)
        assert bound.lhs == pytest.approx(0.8)
        assert bound.rhs == pytest.approx(241**2, rel=1e-8)
        assert bound.holds

    def test_comparability_needs_equal_norms(self, cone):
        with pytest.raises(PreconditionError):
            comparability_norm_bound(constant(1), constant(2), cone)


class TestImageDiameter:
    """Test the diameter estimate over probe images."""

    def test_identical_images(self, cone):
        assert estimate_image_diameter([constant(1), constant(2)], constant(1), cone) == 0

    def test_degenerate_image_is_unbounded(self, cone):
        assert estimate_image_diameter([zero()], constant(1), cone) == math.inf
