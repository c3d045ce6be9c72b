"""
The cone C_a = {f >= 0, Var(f) <= a ||f||_1} \\ {0} of BV step functions and its
Hilbert projective metric.
"""

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .base.error_handling import DomainError, NumericalError, PreconditionError
from .logging_config import get_logger
from .step_functions import (
    StepFunction,
    bv_norm,
    bv_norm_max,
    constant,
    indicator,
    l1_norm,
    random_step_function,
    scale,
    variation,
)
from .utils import Scalar, to_fraction

logger = get_logger(__name__)

# Cone membership slack used when validating float inputs to the metric.
MEMBERSHIP_TOL = 1e-9
MAX_DOUBLINGS = 64


@dataclass(frozen=True)
class ConeParams:
    """Cone aperture ``a`` and target subcone ratio ``nu``."""

    a: Scalar
    nu: Scalar

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError(f"cone parameter a must be positive, got {self.a}")
        if not 0 < self.nu < 1:
            raise DomainError(f"cone ratio nu must lie in (0, 1), got {self.nu}")

    @property
    def D(self) -> Scalar:
        """Adaptedness constant 2a + 1."""
        return 2 * self.a + 1

    @classmethod
    def from_nu(cls, nu, sharp: bool = False) -> "ConeParams":
        """Smallest integer aperture that makes the second iterates map C_a into C_{nu a}.

        The general Lasota-Yorke constants (3/4, 6) give a = ceil(6 / (nu - 3/4));
        the sharp ones (1/2, 4), valid when every eps <= 1/2, give ceil(4 / (nu - 1/2)).
        """
        q = to_fraction(nu)
        contraction, offset = (Fraction(1, 2), 4) if sharp else (Fraction(3, 4), 6)
        if not contraction < q < 1:
            raise DomainError(f"nu must lie in ({contraction}, 1) for these constants, got {nu}")
        return cls(a=math.ceil(offset / (q - contraction)), nu=nu)


@dataclass(frozen=True)
class ConeGeometry:
    alpha: float
    beta: float
    theta: float


@dataclass(frozen=True)
class NormBound:
    """Both sides of a norm inequality lhs <= rhs."""
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def cone_contains(f: StepFunction, params: ConeParams, scale: Scalar = 1, tol: float = 0.0) -> bool:
    """Membership in C_{scale * a}; ``tol`` loosens both constraints for float inputs."""
    if f.is_zero():
        return False
    if min(f.values) < -tol:
        return False
    return variation(f) <= scale * params.a * l1_norm(f) + tol


class _Pair:
    """Two step functions sampled on a common grid, as float arrays."""

    def __init__(self, v: StepFunction, w: StepFunction):
        grid = sorted(set(v.breakpoints) | set(w.breakpoints))
        mids = [(lo + hi) / 2 for lo, hi in zip(grid[:-1], grid[1:])]
        self.v = np.array([float(_value(v, m)) for m in mids])
        self.w = np.array([float(_value(w, m)) for m in mids])
        self.mass = np.diff(np.array([float(x) for x in grid])) / 2
        self.int_v = float(self.v @ self.mass)
        self.int_w = float(self.w @ self.mass)

    def below_feasible(self, lam: float, a: float) -> bool:
        """Is w - lam v in C_a or zero (positivity assumed)."""
        h = self.w - lam * self.v
        var = float(np.abs(np.diff(h)).sum())
        return var <= a * (self.int_w - lam * self.int_v) + 1e-14 * max(1.0, var)

    def above_feasible(self, mu: float, a: float) -> bool:
        """Is mu v - w in C_a or zero (positivity assumed)."""
        h = mu * self.v - self.w
        var = float(np.abs(np.diff(h)).sum())
        return var <= a * (mu * self.int_v - self.int_w) + 1e-14 * max(1.0, var)


def _value(f: StepFunction, x) -> Scalar:
    return f.values[min(bisect_right(f.breakpoints, x) - 1, f.cell_count - 1)]


def _alpha(pair: _Pair, a: float, tol: float) -> float:
    positive = pair.v > 0
    if not positive.any():
        raise DomainError("alpha needs a nonzero first argument")
    lam_pos = float(np.min(pair.w[positive] / pair.v[positive]))
    if lam_pos <= 0:
        return 0.0
    if pair.below_feasible(lam_pos, a):
        return lam_pos
    lo, hi = 0.0, lam_pos
    while hi - lo > tol * hi:
        mid = (lo + hi) / 2
        if pair.below_feasible(mid, a):
            lo = mid
        else:
            hi = mid
    return lo


def _beta(pair: _Pair, a: float, tol: float) -> float:
    if np.any((pair.v <= 0) & (pair.w > 0)):
        return math.inf
    positive = pair.v > 0
    mu_pos = float(np.max(pair.w[positive] / pair.v[positive]))
    if pair.above_feasible(mu_pos, a):
        return mu_pos
    lo, hi = mu_pos, max(2 * mu_pos, 1e-300)
    for _ in range(MAX_DOUBLINGS):
        if pair.above_feasible(hi, a):
            break
        lo, hi = hi, 2 * hi
    else:
        return math.inf
    while hi - lo > tol * hi:
        mid = (lo + hi) / 2
        if pair.above_feasible(mid, a):
            hi = mid
        else:
            lo = mid
    return hi


def hilbert_alpha_beta(
    v: StepFunction, w: StepFunction, params: ConeParams, tol: float = 1e-10
) -> ConeGeometry:
    """Compute alpha(v, w), beta(v, w) and theta(v, w) in C_a.

    Both bounds are found by bisection against the exact membership predicate;
    the positivity constraint gives the starting bracket and is often the
    binding one, in which case no bisection is needed.
    """
    for name, f in (("v", v), ("w", w)):
        if not cone_contains(f, params, tol=MEMBERSHIP_TOL):
            raise DomainError(f"{name} is not in the cone C_a with a={params.a}")
    pair = _Pair(v, w)
    a = float(params.a)
    alpha = _alpha(pair, a, tol)
    beta = _beta(pair, a, tol)
    if alpha > beta:
        # both sides within tolerance of collinear
        alpha = beta = (alpha + beta) / 2
    if alpha <= 0 or math.isinf(beta):
        theta = math.inf
    else:
        theta = max(0.0, math.log(beta / alpha))
    return ConeGeometry(alpha=alpha, beta=beta, theta=theta)


def theta(v: StepFunction, w: StepFunction, params: ConeParams, tol: float = 1e-10) -> float:
    """Hilbert projective distance between two cone elements."""
    return hilbert_alpha_beta(v, w, params, tol).theta


def contraction_factor(diam: float) -> float:
    """Birkhoff contraction coefficient tanh(diam / 4)."""
    if diam < 0 or math.isnan(diam):
        raise DomainError(f"diameter must be nonnegative, got {diam}")
    if math.isinf(diam):
        return 1.0
    return math.tanh(diam / 4)


def theta_to_constant_bound(f: StepFunction, params: ConeParams) -> float:
    """Upper bound log((1 + nu)/(1 - nu) * esssup f / essinf f) on theta(f, 1).

    The actual distance is computed as well; a violation raises NumericalError.
    """
    if not cone_contains(f, params, scale=params.nu, tol=MEMBERSHIP_TOL):
        raise PreconditionError(f"f must lie in C_(nu a) with nu={params.nu}, a={params.a}")
    essinf = float(min(f.values))
    if essinf <= 0:
        return math.inf
    nu = float(params.nu)
    bound = math.log((1 + nu) / (1 - nu) * float(max(f.values)) / essinf)
    actual = theta(f, constant(1), params)
    if actual > bound + 1e-9:
        raise NumericalError(f"theta(f, 1) = {actual} exceeds its bound {bound}")
    return bound


def _in_cone_or_zero(f: StepFunction, params: ConeParams) -> bool:
    return f.is_zero() or cone_contains(f, params, tol=MEMBERSHIP_TOL)


def adaptedness_ratio(f: StepFunction, g: StepFunction) -> float:
    """||g|| / ||f|| in the max-form BV norm."""
    return float(bv_norm_max(g)) / float(bv_norm_max(f))


def d_adapted_verify(f: StepFunction, g: StepFunction, params: ConeParams) -> bool:
    """Check ||g|| <= (2a + 1) ||f|| (max-form norm) for -f <= g <= f."""
    if not (_in_cone_or_zero(f - g, params) and _in_cone_or_zero(f + g, params)):
        raise PreconditionError("d_adapted_verify needs -f <= g <= f in the cone order")
    return bv_norm_max(g) <= params.D * bv_norm_max(f)


def comparability_norm_bound(f: StepFunction, g: StepFunction, params: ConeParams) -> NormBound:
    """||f - g||_BV against D^2 r (exp(theta(f, g)) - 1) for equal-norm cone elements."""
    r_f, r_g = bv_norm(f), bv_norm(g)
    exact = f.is_exact and g.is_exact
    if (r_f != r_g) if exact else abs(float(r_f) - float(r_g)) > 1e-9 * float(r_f):
        raise PreconditionError(f"f and g need equal BV norms, got {r_f} and {r_g}")
    lhs = float(bv_norm(f - g))
    dist = theta(f, g, params)
    if math.isinf(dist):
        return NormBound(lhs=lhs, rhs=math.inf)
    rhs = float(params.D) ** 2 * float(r_f) * math.expm1(dist)
    return NormBound(lhs=lhs, rhs=rhs)


def lift_into_cone(f: StepFunction, params: ConeParams, ratio: Scalar = 1) -> StepFunction:
    """Add the least constant that puts a nonnegative ``f`` inside C_{ratio * a}."""
    aperture = ratio * params.a
    shortfall = variation(f) / aperture - l1_norm(f)
    if shortfall > 0:
        return f + constant(shortfall)
    return f


def random_cone_element(
    rng: np.random.Generator,
    params: ConeParams,
    n_cells: int = 6,
    ratio: Scalar = 1,
    exact: bool = False,
) -> StepFunction:
    """A random element of C_{ratio * a}, normalized to unit L1 norm."""
    f = random_step_function(rng, n_cells=n_cells, exact=exact, low=0.0, high=1.0)
    if f.is_zero():
        f = constant(1)
    f = lift_into_cone(f, params, ratio)
    return scale(f, 1 / l1_norm(f))


def probe_family(
    params: ConeParams,
    n_random: int = 8,
    seed: int = 0,
    grid_cells: Optional[int] = None,
) -> List[StepFunction]:
    """Deterministic probes of C_a with unit L1 norm.

    The family is the constant 1, one bump per cell of a uniform grid (lifted
    onto the cone boundary) and ``n_random`` random cone elements.
    """
    cells = grid_cells if grid_cells is not None else math.ceil(2 * float(params.a))
    probes: List[StepFunction] = [constant(1)]
    edges = [Fraction(2 * k, cells) - 1 for k in range(cells + 1)]
    for lo, hi in zip(edges[:-1], edges[1:]):
        bump = lift_into_cone(indicator(lo, hi), params)
        probes.append(scale(bump, 1 / l1_norm(bump)))
    rng = np.random.default_rng(seed)
    probes.extend(random_cone_element(rng, params) for _ in range(n_random))
    logger.debug(f"probe family of {len(probes)} functions ({cells} grid cells)")
    return probes


def estimate_image_diameter(
    images: Sequence[StepFunction], image_of_one: StepFunction, params: ConeParams
) -> float:
    """2 * max theta(P h, P 1) over probe images; an upper estimate of diam(P C_a)."""
    worst = 0.0
    for image in images:
        if image.is_zero() or min(image.values) < 0:
            return math.inf
        worst = max(worst, theta(image, image_of_one, params))
        if math.isinf(worst):
            break
    return 2 * worst
