"""
Tests for the Markov paired tent maps T_{kappa_n, kappa_n}.
"""

import math

import numpy as np
import pytest

from tentcocycle.base.error_handling import DomainError, MarkovPropertyError
from tentcocycle.markov import (
    adjacency_matrix,
    build_partition,
    cell_measures,
    char_poly_verify,
    characteristic_polynomial,
    exact_lambda2,
    invariant_density,
    loglog_slope,
    markov_driving,
    real_roots,
    solve_kappa,
    subdominant_check,
    target_charpoly,
    transition_matrix,
)
from tentcocycle.schemas import MARKOV_COLUMNS
from tentcocycle.step_functions import integral


class TestKappa:
    """Test the defining equation (2 + 2 kappa)^n kappa = 1."""

    def test_closed_form_for_n1(self):
        """2 kappa^2 + 2 kappa - 1 = 0 gives kappa_1 = (sqrt 3 - 1) / 2."""
        assert solve_kappa(1) == pytest.approx((math.sqrt(3) - 1) / 2, rel=1e-14)

    @pytest.mark.parametrize("n", [2, 5, 9, 12])
    def test_equation_holds(self, n):
        kappa = solve_kappa(n)
        assert (2 + 2 * kappa) ** n * kappa == pytest.approx(1.0, rel=1e-12)

    def test_decreasing(self):
        kappas = [solve_kappa(n) for n in range(1, 10)]
        assert kappas == sorted(kappas, reverse=True)

    def test_invalid_index(self):
        with pytest.raises(DomainError):
            solve_kappa(0)


class TestPartition:
    """Test the Markov partition and its adjacency matrix."""

    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_cell_count(self, n):
        cells = build_partition(n)
        assert len(cells) == 2 * n + 4
        assert cells[0][0] == -1.0
        assert cells[-1][1] == 1.0
        assert all(lo < hi for lo, hi in cells)

    def test_n1_adjacency(self):
        """Cells [-1,-1/2], [-1/2,-k], [-k,0], [0,k], [k,1/2], [1/2,1]."""
        model = adjacency_matrix(1)
        assert model.adjacency == [
            [1, 1, 1, 1, 0, 0],
            [0, 0, 0, 1, 0, 0],
            [1, 1, 1, 0, 0, 0],
            [0, 0, 0, 1, 1, 1],
            [0, 0, 1, 0, 0, 0],
            [0, 0, 1, 1, 1, 1],
        ]
        assert not model.asymptotic

    def test_row_sums_match_slopes(self):
        """Each cell image has length (2 + 2 kappa) times the cell length."""
        n = 4
        kappa = solve_kappa(n)
        measures = cell_measures(n)
        adjacency = np.array(adjacency_matrix(n).adjacency)
        np.testing.assert_allclose(adjacency @ measures, (2 + 2 * kappa) * measures, rtol=1e-12)

    @pytest.mark.parametrize("n", range(1, 13))
    def test_characteristic_polynomial(self, n):
        """det(x I - A_n) = x^2 (x^n (x - 2) - 2)(x^n (x - 2) + 2)."""
        assert char_poly_verify(n)
        coefficients = characteristic_polynomial(n)
        assert len(coefficients) == 2 * n + 5
        assert coefficients[0] == 1

    def test_target_polynomial_n1(self):
        """x^2 (x^2 - 2x - 2)(x^2 - 2x + 2) = x^6 - 4x^5 + 4x^4 - 4x^2."""
        coefficients = [int(c) for c in target_charpoly(1).all_coeffs()]
        assert coefficients == [1, -4, 4, 0, -4, 0, 0]


class TestSpectrum:
    """Test rho, r_n and lambda2."""

    @pytest.mark.parametrize(
        "n, kappa, lambda2, ratio",
        [
            (5, 0.027311, -0.065582, 1.2007),
            (6, 0.0143452, -0.031751, 1.1067),
            (7, 0.0074186, -0.0157063, 1.0586),
            (8, 0.00378982, -0.0078254, 1.0324),
        ],
    )
    def test_reference_values(self, n, kappa, lambda2, ratio):
        model = exact_lambda2(n)
        assert model.kappa == pytest.approx(kappa, rel=1e-4)
        assert model.lambda2 == pytest.approx(lambda2, rel=1e-3)
        assert model.ratio_to_minus_2kappa == pytest.approx(ratio, rel=1e-3)
        assert model.charpoly_ok
        assert model.asymptotic

    @pytest.mark.parametrize("n", [3, 6, 10])
    def test_leading_eigenvalue(self, n):
        """rho(A_n) = 2 + 2 kappa_n."""
        model = exact_lambda2(n)
        assert model.rho == pytest.approx(2 + 2 * model.kappa, rel=1e-9)
        assert max(model.real_roots) == pytest.approx(2 + 2 * solve_kappa(n), rel=1e-12)

    @pytest.mark.parametrize("n", [1, 5, 12])
    def test_rho_is_root_of_characteristic_factor(self, n):
        """rho solves x^n (x - 2) = 2 at full float precision."""
        rho = exact_lambda2(n).rho
        assert rho == pytest.approx(2 + 2 * solve_kappa(n), rel=1e-14)
        assert rho**n * (rho - 2) == pytest.approx(2, rel=1e-10)

    def test_eigen_solve_is_only_a_cross_check(self, mocker):
        """A disagreeing dense eigen-solve is reported, not used as rho."""
        mocker.patch("tentcocycle.markov._eigen_moduli", return_value=np.array([2.5, 1.0]))
        with pytest.raises(MarkovPropertyError, match="characteristic factor"):
            exact_lambda2(6)

    def test_ratio_tends_to_one(self):
        ratios = [exact_lambda2(n).ratio_to_minus_2kappa for n in range(5, 11)]
        assert ratios == sorted(ratios, reverse=True)
        assert 1.0 < ratios[-1] < 1.05

    def test_real_roots_n1(self):
        """1 +- sqrt 3 and the double root 0 counted once."""
        roots = real_roots(1)
        assert roots == pytest.approx([1 - math.sqrt(3), 0.0, 1 + math.sqrt(3)], abs=1e-12)

    def test_small_n_uses_eigenvalue_modulus(self):
        """For n = 1 the second eigenvalues 1 +- i have modulus sqrt 2."""
        model = exact_lambda2(1)
        assert model.lambda2 == pytest.approx(math.log(math.sqrt(2) / (1 + math.sqrt(3))), rel=1e-9)

    def test_subdominant_spectrum(self):
        assert subdominant_check(5)

    def test_loglog_slope(self):
        assert loglog_slope([1.0, 2.0], [1.0, 4.0]) == pytest.approx(2.0)
        models = [exact_lambda2(n) for n in range(5, 9)]
        slope = loglog_slope([m.kappa for m in models], [m.lambda2 for m in models])
        assert slope == pytest.approx(1.075, abs=0.01)
        with pytest.raises(DomainError):
            loglog_slope([1.0], [1.0])

    def test_csv_row(self):
        assert set(exact_lambda2(5).csv_row()) == set(MARKOV_COLUMNS)


class TestInvariantDensity:
    """Test the transfer matrix and its leading eigenvector."""

    def test_measures_are_preserved(self):
        matrix = transition_matrix(5)
        measures = cell_measures(5)
        np.testing.assert_allclose(measures @ matrix, measures, atol=1e-12)

    def test_density_has_unit_integral(self):
        density = invariant_density(4)
        assert float(integral(density)) == pytest.approx(1.0)
        assert min(density.values) > 0

    def test_density_is_symmetric(self):
        """T_{k,k} commutes with x -> -x, so the density is even."""
        density = invariant_density(3)
        values = density.values
        assert values == pytest.approx(tuple(reversed(values)), rel=1e-9)

    def test_markov_driving(self):
        stream = markov_driving(5)
        assert stream.is_constant
        assert stream.entries[0].eps1 == pytest.approx(solve_kappa(5))
