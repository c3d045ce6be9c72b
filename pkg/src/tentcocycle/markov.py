"""
Exact spectral data of the Markov paired tent maps T_n = T_{kappa_n, kappa_n}.

kappa_n solves (2 + 2 kappa)^n kappa = 1, which makes the forward orbits of
the critical values +-kappa_n land on 0 after n steps. The cells cut by those
orbits form a Markov partition with 2n + 4 cells, so the transfer operator on
cell indicators is the matrix M_n = A_n^T / (2 + 2 kappa_n).

All dynamics run at 200 bits; cell endpoints are matched with slack 2^-180.
"""

import math
import threading
from contextlib import contextmanager
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from mpmath import mp, mpf
from sympy import Matrix, Poly, symbols
from sympy.polys.matrices import DomainMatrix

from .base.error_handling import DomainError, MarkovPropertyError, NumericalError
from .driving import DrivingStream, constant_driving
from .interval_maps import PairedTentParams, make_paired_tent
from .logging_config import PipelineLogger, get_logger
from .schemas import MarkovModel
from .step_functions import StepFunction

logger = get_logger(__name__)
pipeline_logger = PipelineLogger(__name__)

PRECISION_BITS = 200
MATCH_SLACK_BITS = 180
_x = symbols("x")

# mp.workprec swaps a process-wide precision; sweeps call in from worker threads
_MP_LOCK = threading.RLock()


@contextmanager
def _precision():
    with _MP_LOCK, mp.workprec(PRECISION_BITS):
        yield


def _check_n(n: int) -> None:
    if n < 1:
        raise DomainError(f"Markov index n must be at least 1, got {n}")


@lru_cache(maxsize=None)
def _kappa_mp(n: int) -> mpf:
    _check_n(n)
    with _precision():
        lo, hi = mpf(0), mpf(1) / 2
        for _ in range(PRECISION_BITS + 8):
            mid = (lo + hi) / 2
            if (2 + 2 * mid) ** n * mid < 1:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


def solve_kappa(n: int) -> float:
    """The root of (2 + 2 kappa)^n kappa = 1 in (0, 1/2); the left side is increasing."""
    return float(_kappa_mp(n))


@lru_cache(maxsize=None)
def _partition_points(n: int) -> Tuple[mpf, ...]:
    kappa = _kappa_mp(n)
    with _precision():
        tent = make_paired_tent(PairedTentParams(kappa, kappa))
        half = mpf(1) / 2
        points = [mpf(-1), -half, mpf(0), half, mpf(1)]
        for start in (kappa, -kappa):
            x = start
            for _ in range(n):
                points.append(x)
                x = tent(x)
        points.sort()
        slack = mpf(2) ** -MATCH_SLACK_BITS
        distinct = [points[0]]
        for p in points[1:]:
            if p - distinct[-1] > slack:
                distinct.append(p)
    if len(distinct) != 2 * n + 5:
        raise MarkovPropertyError(
            f"expected {2 * n + 5} partition points for n={n}, found {len(distinct)}"
        )
    return tuple(distinct)


def build_partition(n: int) -> List[Tuple[float, float]]:
    """The 2n + 4 Markov cells of T_n, left to right."""
    points = _partition_points(n)
    return [(float(lo), float(hi)) for lo, hi in zip(points[:-1], points[1:])]


def _match(y: mpf, points: Sequence[mpf], slack: mpf) -> int:
    index = min(range(len(points)), key=lambda i: abs(points[i] - y))
    if abs(points[index] - y) > slack:
        raise MarkovPropertyError(f"branch image endpoint {mp.nstr(y, 20)} is not a partition point")
    return index


@lru_cache(maxsize=None)
def _adjacency(n: int) -> Tuple[Tuple[int, ...], ...]:
    points = _partition_points(n)
    kappa = _kappa_mp(n)
    size = len(points) - 1
    rows = []
    with _precision():
        tent = make_paired_tent(PairedTentParams(kappa, kappa))
        slack = mpf(2) ** -MATCH_SLACK_BITS
        for lo, hi in zip(points[:-1], points[1:]):
            midpoint = (lo + hi) / 2
            branch = next(b for b in tent.branches if b.domain.lo <= midpoint <= b.domain.hi)
            ends = sorted((_match(branch(lo), points, slack), _match(branch(hi), points, slack)))
            row = [0] * size
            for j in range(ends[0], ends[1]):
                row[j] = 1
            rows.append(tuple(row))
    return tuple(rows)


def adjacency_matrix(n: int) -> MarkovModel:
    """A[i][j] = 1 iff T_n(R_i) contains R_j, read off the dynamics."""
    adjacency = _adjacency(n)
    return MarkovModel(
        n=n,
        kappa=solve_kappa(n),
        partition=[list(cell) for cell in build_partition(n)],
        adjacency=[list(row) for row in adjacency],
        asymptotic=n >= 5,
    )


def _adjacency_array(n: int) -> np.ndarray:
    return np.array(_adjacency(n), dtype=np.int64)


def target_charpoly(n: int) -> Poly:
    """x^2 (x^n (x - 2) - 2)(x^n (x - 2) + 2)."""
    x = _x
    return Poly(x**2 * (x**n * (x - 2) - 2) * (x**n * (x - 2) + 2), x)


def characteristic_polynomial(n: int) -> List[int]:
    """Integer coefficients of det(x I - A_n), highest degree first."""
    matrix = DomainMatrix.from_Matrix(Matrix(_adjacency(n)))
    return [int(c) for c in matrix.charpoly()]


def char_poly_verify(n: int) -> bool:
    expected = [int(c) for c in target_charpoly(n).all_coeffs()]
    ok = characteristic_polynomial(n) == expected
    if not ok:
        pipeline_logger.warning_skip(f"characteristic polynomial mismatch at n={n}")
    return ok


def _bisect(f, lo: mpf, hi: mpf, iterations: int = PRECISION_BITS) -> mpf:
    """Bisection for a sign change of f on [lo, hi]."""
    f_lo = f(lo)
    if f_lo * f(hi) > 0:
        raise NumericalError(f"no sign change on [{mp.nstr(lo, 10)}, {mp.nstr(hi, 10)}]")
    for _ in range(iterations):
        mid = (lo + hi) / 2
        f_mid = f(mid)
        if f_mid == 0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return (lo + hi) / 2


def real_roots(n: int) -> List[float]:
    """Distinct real roots of the characteristic polynomial, ascending.

    sympy isolates them on the square-free part with rational endpoints and
    mpmath bisection refines each isolating interval.
    """
    square_free = target_charpoly(n).sqf_part()
    coeffs = [int(c) for c in square_free.all_coeffs()]
    roots = []
    with _precision():
        def f(t):
            return mp.polyval(coeffs, t)
        for (a, b), _ in square_free.intervals():
            if a == b:
                roots.append(float(a))
                continue
            lo = mpf(a.p) / a.q
            hi = mpf(b.p) / b.q
            roots.append(float(_bisect(f, lo, hi)))
    return sorted(roots)


RHO_CROSS_CHECK = 1e-8


def _spectral_radius(n: int) -> mpf:
    """2 + 2 kappa_n as the root of x^n (x - 2) - 2 on (2, 3)."""
    with _precision():
        def f(t):
            return t**n * (t - 2) - 2
        return _bisect(f, mpf(2), mpf(3))


def _eigen_moduli(n: int) -> np.ndarray:
    """Eigenvalue moduli of A_n from a dense float eigen-solve, largest first."""
    eigenvalues = np.linalg.eigvals(_adjacency_array(n).astype(float))
    return np.sort(np.abs(eigenvalues))[::-1]


def _second_root(n: int) -> Tuple[mpf, bool]:
    """Root 2 - 2 r_n of x^n (x - 2) + 2 next to 2, and whether it is real-isolated."""
    with _precision():
        def f(t):
            return t**n * (t - 2) + 2
        turning = mpf(2 * n) / (n + 1)
        if f(turning) < 0:
            return _bisect(f, turning, mpf(2)), True
    return mpf(0), False


def exact_lambda2(n: int) -> MarkovModel:
    """Full Markov model with rho, r_n and lambda2 = log((2 - 2 r_n)/(2 + 2 kappa_n)).

    rho is the root of x^n (x - 2) - 2 above 2; the dense eigen-solve of A_n
    only has to agree with it.

    For n >= 4 the second eigenvalue 2 - 2 r_n is the real root of
    x^n (x - 2) + 2 between its turning point 2n/(n + 1) and 2. Below that the
    second largest eigenvalue modulus of A_n is used. Only n >= 5 is flagged
    as asymptotic.
    """
    model = adjacency_matrix(n)
    kappa = _kappa_mp(n)
    rho = float(_spectral_radius(n))
    moduli = _eigen_moduli(n)
    if abs(float(moduli[0]) - rho) > RHO_CROSS_CHECK * rho:
        raise MarkovPropertyError(
            f"n={n}: spectral radius of A_n is {moduli[0]:.12g}, the characteristic factor gives {rho:.12g}"
        )

    root, isolated = _second_root(n)
    if isolated:
        second = float(root)
    else:
        second = float(moduli[1])
        pipeline_logger.warning_skip(f"n={n}: using the second eigenvalue modulus of A_n", n=n)
    with _precision():
        lambda2 = float(mp.log(mpf(second) / (2 + 2 * kappa)))
    r_n = (2 - second) / 2

    model.rho = rho
    model.r_n = r_n
    model.lambda2 = lambda2
    model.ratio_to_minus_2kappa = lambda2 / (-2 * model.kappa)
    model.charpoly_ok = char_poly_verify(n)
    model.real_roots = real_roots(n)
    logger.info(f"n={n}: kappa={model.kappa:.6g} r_n={r_n:.6g} lambda2={lambda2:.6g}")
    return model


def cell_measures(n: int) -> np.ndarray:
    """Normalized Lebesgue measure of each Markov cell."""
    return np.array([(hi - lo) / 2 for lo, hi in build_partition(n)])


def transition_matrix(n: int) -> np.ndarray:
    """M_n = A_n^T / (2 + 2 kappa_n), acting on cell coefficient vectors.

    Cell measures form a left eigenvector for the eigenvalue 1.
    """
    matrix = _adjacency_array(n).T / (2 + 2 * solve_kappa(n))
    measures = cell_measures(n)
    defect = float(np.max(np.abs(measures @ matrix - measures)))
    if defect > 1e-9:
        raise NumericalError(f"cell measures are not preserved by M_{n} (defect {defect:.3e})")
    return matrix


def invariant_density(n: int) -> StepFunction:
    """Leading eigenvector of M_n as a step function with unit integral."""
    matrix = transition_matrix(n)
    eigenvalues, vectors = np.linalg.eig(matrix)
    lead = int(np.argmin(np.abs(eigenvalues - 1)))
    coefficients = np.real(vectors[:, lead])
    coefficients = coefficients / float(coefficients @ cell_measures(n))
    points = [lo for lo, _ in build_partition(n)] + [1.0]
    return StepFunction(tuple(points), tuple(float(c) for c in coefficients))


def subdominant_check(n: int, tol: float = 1e-6) -> bool:
    """Every eigenvalue of M_n but the leading one has modulus <= exp(lambda2) + tol."""
    moduli = np.sort(np.abs(np.linalg.eigvals(transition_matrix(n))))[::-1]
    bound = math.exp(exact_lambda2(n).lambda2)
    return bool(np.all(moduli[1:] <= bound + tol))


def markov_driving(n: int) -> DrivingStream:
    """The constant driving with eps1 = eps2 = kappa_n."""
    kappa = solve_kappa(n)
    return constant_driving(kappa, kappa)


def loglog_slope(kappas: Sequence[float], lambdas: Sequence[float]) -> float:
    """Least-squares slope of log|lambda2| against log kappa."""
    if len(kappas) != len(lambdas) or len(kappas) < 2:
        raise DomainError("loglog_slope needs at least two matched points")
    slope, _ = np.polyfit(np.log(np.asarray(kappas)), np.log(np.abs(np.asarray(lambdas))), 1)
    return float(slope)
