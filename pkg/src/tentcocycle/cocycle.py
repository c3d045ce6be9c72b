"""
The transfer operator cocycle of a driven family of paired tent maps.

Every routine advances along the second-iterate cocycle: one step from base
index b applies the transfer operator of T_{b+1} ∘ T_b and moves to b + 2.
Exponents of the first-iterate cocycle are half of the second-iterate ones.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .base.error_handling import NumericalError, PreconditionError
from .cone_metric import ConeParams, hilbert_alpha_beta, probe_family
from .driving import DrivingStream, map_at, step_map
from .interval_maps import Interval, image_of_set
from .logging_config import PipelineLogger, get_logger
from .schemas import SpectrumEstimate
from .step_functions import (
    StepFunction,
    bv_norm,
    constant,
    indicator,
    integral,
    l1_norm,
    pf_apply,
    scale,
    variation,
)

logger = get_logger(__name__)
pipeline_logger = PipelineLogger(__name__)

# Renormalize immediately once the running norm falls below this.
UNDERFLOW_NORM = 1e-200
DEFAULT_CONE = ConeParams(a=120, nu=0.8)


class NormKind(str, Enum):
    BV = "bv"
    L1 = "l1"


def norm_of(f: StepFunction, kind: NormKind = NormKind.BV):
    return bv_norm(f) if NormKind(kind) is NormKind.BV else l1_norm(f)


def _normalize(f: StepFunction, kind: NormKind) -> StepFunction:
    size = norm_of(f, kind)
    if size == 0:
        raise NumericalError("cannot normalize the zero function")
    return scale(f, 1 / size)


def push(stream: DrivingStream, base: int, f: StepFunction) -> StepFunction:
    """One second-iterate step of the cocycle from base index ``base``."""
    return pf_apply(step_map(stream, base), f)


@dataclass(frozen=True)
class EquivariantDensity:
    """Finite-depth estimate of v(omega) with its equivariance diagnostics."""

    omega_index: int
    density: StepFunction
    phi: float
    pullback_depth: int
    residual: float
    increment: float


def _pullback(
    stream: DrivingStream, omega_index: int, depth: int, seed_fn: StepFunction, kind: NormKind
) -> StepFunction:
    v = _normalize(seed_fn, kind)
    for k in range(depth):
        v = _normalize(push(stream, omega_index - 2 * (depth - k), v), kind)
    return v


def pullback_density(
    stream: DrivingStream,
    omega_index: int,
    depth: int,
    seed_fn: Optional[StepFunction] = None,
    norm: NormKind = NormKind.BV,
) -> EquivariantDensity:
    """Pull the seed function forward from omega_index - 2*depth to omega_index.

    ``phi`` is the norm growth of the next step, ``residual`` the equivariance
    defect ||P v - phi v_next|| (v_next is the same construction at the next
    base point) and ``increment`` the Cauchy step ||v_depth - v_(depth-1)||.
    A large residual means the depth was not enough; nothing is raised.
    """
    if depth < 1:
        raise PreconditionError(f"pullback depth must be at least 1, got {depth}")
    seed_fn = seed_fn if seed_fn is not None else constant(1)
    v = _pullback(stream, omega_index, depth, seed_fn, norm)
    v_prev = _pullback(stream, omega_index, depth - 1, seed_fn, norm)

    image = push(stream, omega_index, v)
    phi = norm_of(image, norm)
    v_next = _normalize(push(stream, omega_index, v_prev), norm)
    residual = bv_norm(image - scale(v_next, phi))
    increment = bv_norm(v - v_prev)
    logger.debug(
        f"pullback at {omega_index} depth {depth}: phi={float(phi):.12g} "
        f"residual={float(residual):.3e} increment={float(increment):.3e}"
    )
    return EquivariantDensity(
        omega_index=omega_index,
        density=v,
        phi=float(phi),
        pullback_depth=depth,
        residual=float(residual),
        increment=float(increment),
    )


def pullback_increments(
    stream: DrivingStream,
    omega_index: int,
    max_depth: int,
    seed_fn: Optional[StepFunction] = None,
    norm: NormKind = NormKind.BV,
) -> List[float]:
    """Cauchy increments ||v_d - v_(d-1)||_BV for d = 1, ..., max_depth."""
    seed_fn = seed_fn if seed_fn is not None else constant(1)
    if stream.is_constant:
        # every pullback runs the same map, so depth d is d forward steps
        densities = [_normalize(seed_fn, norm)]
        for _ in range(max_depth):
            densities.append(_normalize(push(stream, omega_index, densities[-1]), norm))
    else:
        densities = [_pullback(stream, omega_index, d, seed_fn, norm) for d in range(max_depth + 1)]
    return [float(bv_norm(b - a)) for a, b in zip(densities[:-1], densities[1:])]


def _log_growth_series(
    stream: DrivingStream, omega_index: int, n_steps: int, start: StepFunction
) -> np.ndarray:
    v = _normalize(start, NormKind.BV)
    logs = np.empty(n_steps)
    for k in range(n_steps):
        image = push(stream, omega_index + 2 * k, v)
        phi = bv_norm(image)
        logs[k] = math.log(phi)
        v = scale(image, 1 / phi)
    return logs


def lambda1_birkhoff(
    stream: DrivingStream, omega_index: int, n_steps: int, depth: int = 20
) -> float:
    """Birkhoff average of log phi along the orbit, halved to the first-iterate exponent."""
    if n_steps < 1:
        raise PreconditionError(f"n_steps must be at least 1, got {n_steps}")
    start = pullback_density(stream, omega_index, depth).density
    logs = _log_growth_series(stream, omega_index, n_steps, start)
    return float(logs.mean() / 2)


def _lambda1_with_error(
    stream: DrivingStream, omega_index: int, n_steps: int, depth: int
) -> Tuple[float, float]:
    start = pullback_density(stream, omega_index, depth).density
    logs = _log_growth_series(stream, omega_index, n_steps, start)
    stderr = float(logs.std(ddof=1) / math.sqrt(n_steps) / 2) if n_steps > 1 else 0.0
    return float(logs.mean() / 2), stderr


def lambda2_power_iteration(
    stream: DrivingStream,
    omega_index: int,
    n_steps: int,
    renorm_every: int = 1,
    iterate: int = 2,
    burn_in: int = 0,
    depth: int = 20,
    lambda1_steps: Optional[int] = None,
) -> SpectrumEstimate:
    """Growth rate of f0 = 1_[-1,0] - 1_[0,1] under the cocycle.

    f0 has zero integral, and the cocycle preserves integrals, so the orbit
    stays in the complement of the top space. In float mode the integral is
    projected out after every step to stop round-off from leaking into it.
    ``iterate=1`` runs the first-iterate cocycle directly.
    """
    if not n_steps >= renorm_every >= 1:
        raise PreconditionError(f"need n_steps >= renorm_every >= 1, got {n_steps}, {renorm_every}")
    if iterate not in (1, 2):
        raise PreconditionError(f"iterate must be 1 or 2, got {iterate}")

    exact = stream.is_exact
    f = indicator(-1, 0) - indicator(0, 1)
    f = scale(f, 1 / bv_norm(f))

    def step(g: StepFunction, k: int) -> StepFunction:
        if iterate == 2:
            g = push(stream, omega_index + 2 * k, g)
        else:
            g = pf_apply(map_at(stream, omega_index + k), g)
        if not exact:
            drift = integral(g)
            if drift != 0:
                g = g - constant(drift)
        return g

    for k in range(burn_in):
        f = step(f, k)
        size = bv_norm(f)
        if size == 0:
            break
        f = scale(f, 1 / size)

    total = 0.0
    growth: List[float] = []
    since_renorm = 0
    collapsed = False
    for k in range(burn_in, burn_in + n_steps):
        f = step(f, k)
        since_renorm += 1
        size = bv_norm(f)
        if size == 0:
            collapsed = True
            break
        if since_renorm >= renorm_every or size < UNDERFLOW_NORM:
            log_size = math.log(size)
            total += log_size
            if since_renorm == 1:
                growth.append(log_size)
            f = scale(f, 1 / size)
            since_renorm = 0
    if collapsed:
        pipeline_logger.warning_skip("power iteration reached the zero function; lambda2 = -inf")
        lambda2 = -math.inf
    else:
        if since_renorm:
            total += math.log(bv_norm(f))
        lambda2 = total / (iterate * n_steps)

    lambda2_stderr = None
    if renorm_every == 1 and len(growth) > 1:
        lambda2_stderr = float(np.std(growth, ddof=1) / math.sqrt(len(growth)) / iterate)

    lambda1, stderr = _lambda1_with_error(stream, omega_index, lambda1_steps or n_steps, depth)
    logger.info(f"lambda1={lambda1:.6g} lambda2={lambda2:.6g} over {n_steps} steps")
    return SpectrumEstimate(
        lambda1=lambda1,
        lambda2=lambda2,
        n_steps=n_steps,
        stderr=stderr,
        lambda2_stderr=lambda2_stderr,
    )


@dataclass(frozen=True)
class EtaBracket:
    """Bracketing sequences for eta(omega, x) = eta(g1) - eta(g2).

    ``alpha_seq[i]`` and ``beta_seq[i]`` belong to g1 (i = 0) and g2 (i = 1).
    """

    alpha_seq: Tuple[Tuple[float, ...], Tuple[float, ...]]
    beta_seq: Tuple[Tuple[float, ...], Tuple[float, ...]]
    eta: float
    shift: float
    normalization: Optional[float]
    closed: bool
    monotone: bool


def ando_shift(x: StepFunction, params: ConeParams) -> float:
    """Constant c with x + c and c both in C_a."""
    return max(0.0, -float(min(x.values))) + float(variation(x)) / float(params.a) + 1.0


def _bracket(
    stream: DrivingStream,
    omega_index: int,
    v: StepFunction,
    g: StepFunction,
    n_steps: int,
    params: ConeParams,
) -> Tuple[List[float], List[float]]:
    alphas, betas = [], []
    geometry = hilbert_alpha_beta(v, g, params)
    alphas.append(geometry.alpha)
    betas.append(geometry.beta)
    for k in range(n_steps):
        image_v = push(stream, omega_index + 2 * k, v)
        phi = bv_norm(image_v)
        v = scale(image_v, 1 / phi)
        g = scale(push(stream, omega_index + 2 * k, g), 1 / phi)
        geometry = hilbert_alpha_beta(v, g, params)
        alphas.append(geometry.alpha)
        betas.append(geometry.beta)
    return alphas, betas


def _is_monotone(alphas: Sequence[float], betas: Sequence[float], slack: float = 1e-9) -> bool:
    for prev, cur in zip(alphas[:-1], alphas[1:]):
        if cur < prev - slack * abs(prev):
            return False
    for prev, cur in zip(betas[:-1], betas[1:]):
        if cur > prev + slack * abs(prev):
            return False
    return True


def _eta_split(
    stream: DrivingStream,
    omega_index: int,
    v: StepFunction,
    x: StepFunction,
    n_steps: int,
    params: ConeParams,
):
    """Bracket both parts of the Ando split of x against v; return (eta, c, (a1, b1), (a2, b2))."""
    c = ando_shift(x, params)
    a1, b1 = _bracket(stream, omega_index, v, x + constant(c), n_steps, params)
    a2, b2 = _bracket(stream, omega_index, v, constant(c), n_steps, params)
    eta = (a1[-1] + b1[-1]) / 2 - (a2[-1] + b2[-1]) / 2
    return eta, c, (a1, b1), (a2, b2)


def eta_bracket(
    stream: DrivingStream,
    omega_index: int,
    x: StepFunction,
    n_steps: int,
    params: ConeParams = DEFAULT_CONE,
    depth: int = 20,
    tol: float = 1e-6,
    density: Optional[StepFunction] = None,
    check_density: bool = True,
) -> EtaBracket:
    """Bracket eta(omega, x) between alpha(v, L g) and beta(v, L g).

    x is split as (x + c) - c with c from ``ando_shift``. Both parts are
    pushed alongside v and divided by the same norm growth, so each bracket
    is monotone and closes on eta of that part.

    v is ``density`` when given, else the pullback of 1 over ``depth`` steps.
    A supplied density is also measured against that pullback: the result is
    ``normalization``, which is 1 only for the equivariant density with unit
    BV norm.
    """
    if n_steps < 1:
        raise PreconditionError(f"n_steps must be at least 1, got {n_steps}")
    reference = None
    if density is None or check_density:
        reference = pullback_density(stream, omega_index, depth).density
    v = density if density is not None else reference

    eta, c, (a1, b1), (a2, b2) = _eta_split(stream, omega_index, v, x, n_steps, params)

    normalization = None
    if density is not None and check_density:
        normalization, _, _, _ = _eta_split(stream, omega_index, reference, density, n_steps, params)
        if abs(normalization - 1) > tol:
            pipeline_logger.warning_skip(
                f"supplied density has eta = {normalization:.6g} against the pullback of depth {depth}"
            )

    closed = all(b[-1] - a[-1] <= tol * max(abs(b[-1]), 1.0) for a, b in ((a1, b1), (a2, b2)))
    monotone = _is_monotone(a1, b1) and _is_monotone(a2, b2)
    if not closed:
        pipeline_logger.warning_skip(
            f"eta bracket did not close to {tol} in {n_steps} steps; try more steps"
        )
    return EtaBracket(
        alpha_seq=(tuple(a1), tuple(a2)),
        beta_seq=(tuple(b1), tuple(b2)),
        eta=eta,
        shift=c,
        normalization=normalization,
        closed=closed,
        monotone=monotone,
    )


def eta_from_integral(x: StepFunction, density: StepFunction) -> float:
    """The closed form eta(omega, x) = int x / int v(omega)."""
    return float(integral(x)) / float(integral(density))


@dataclass(frozen=True)
class ContractionSchedule:
    """Visit counts and the diameter bound along the horizon n = 0..H."""

    k_P: int
    D_P: float
    l_plus: Tuple[int, ...]
    j_plus: Tuple[int, ...]
    l_minus: Tuple[int, ...]
    j_minus: Tuple[int, ...]
    predicted_diam: Tuple[float, ...]
    m_plus: Tuple[int, ...]
    m_minus: Tuple[int, ...]


def _separated(visits: Sequence[int], k_p: int, first: int = 0) -> List[int]:
    """Greedy subsequence of visits >= first with consecutive gaps >= k_p."""
    chosen: List[int] = []
    for i in visits:
        if i < first:
            continue
        if not chosen or i - chosen[-1] >= k_p:
            chosen.append(i)
    return chosen


def contraction_schedule(
    stream: DrivingStream,
    omega_index: int,
    horizon: int,
    g_predicate: Callable[[int], bool],
    k_P: int,
    D_P: float,
) -> ContractionSchedule:
    """Count visits to the good set forward and backward along the orbit.

    Forward visits are the i in [0, n] with G(omega + 2i); backward visits the
    i in [1, n] with G(omega - 2i). The k_P-separated visits bound the number
    of full contractions, giving diam <= tanh(D_P/4)^(j+ - 1) D_P.
    """
    if k_P < 1:
        raise PreconditionError(f"k_P must be positive, got {k_P}")
    if horizon < k_P:
        raise PreconditionError(f"horizon {horizon} must be at least k_P={k_P}")
    forward = [i for i in range(horizon + 1) if g_predicate(omega_index + 2 * i)]
    backward = [i for i in range(1, horizon + 1) if g_predicate(omega_index - 2 * i)]
    m_plus = _separated(forward, k_P)
    m_minus = _separated(backward, k_P, first=k_P)

    factor = math.tanh(D_P / 4)
    fwd = np.zeros(horizon + 1, dtype=np.int64)
    fwd[forward] = 1
    bwd = np.zeros(horizon + 1, dtype=np.int64)
    bwd[backward] = 1
    l_plus = np.cumsum(fwd)
    l_minus = np.cumsum(bwd)
    m_plus_arr = np.array(m_plus, dtype=np.int64)
    m_minus_arr = np.array(m_minus, dtype=np.int64)
    ns = np.arange(horizon + 1)
    j_plus = np.searchsorted(m_plus_arr, ns - k_P, side="right")
    j_minus = np.searchsorted(m_minus_arr, ns, side="right")

    predicted = []
    for n in range(horizon + 1):
        jp = int(j_plus[n])
        predicted.append(factor ** (jp - 1) * D_P if jp >= 1 else math.inf)
        if (jp + 1) * k_P < l_plus[n] or (int(j_minus[n]) + 1) * k_P < l_minus[n] + 1:
            raise NumericalError(f"visit count estimate failed at n={n}")

    return ContractionSchedule(
        k_P=k_P,
        D_P=D_P,
        l_plus=tuple(int(v) for v in l_plus),
        j_plus=tuple(int(v) for v in j_plus),
        l_minus=tuple(int(v) for v in l_minus),
        j_minus=tuple(int(v) for v in j_minus),
        predicted_diam=tuple(predicted),
        m_plus=tuple(m_plus),
        m_minus=tuple(m_minus),
    )


def _strictly_inside(f: StepFunction, params: ConeParams) -> bool:
    return min(f.values) > 0 and variation(f) < params.a * l1_norm(f)


def first_contraction_time(
    stream: DrivingStream,
    omega_index: int,
    max_k: int,
    params: ConeParams = DEFAULT_CONE,
    probes: Optional[Sequence[StepFunction]] = None,
) -> Optional[int]:
    """Least k <= max_k after which every probe image is bounded away from zero.

    A cone element with positive essential infimum has finite distance to 1,
    so the image of the probe family then has finite diameter.
    """
    if max_k < 1:
        raise PreconditionError(f"max_k must be at least 1, got {max_k}")
    images = list(probes) if probes is not None else probe_family(params, n_random=4, grid_cells=32)
    for k in range(1, max_k + 1):
        images = [push(stream, omega_index + 2 * (k - 1), h) for h in images]
        if all(_strictly_inside(h, params) for h in images):
            logger.debug(f"probe images strictly inside the cone after {k} steps")
            return k
    return None


def _covers_a_half(intervals: Sequence[Interval]) -> bool:
    minus, plus = Interval(-1, 0), Interval(0, 1)
    return any(i.contains(minus) or i.contains(plus) for i in intervals)


def expansion_time(
    stream: DrivingStream, omega_index: int, interval: Interval, max_steps: int = 64
) -> Optional[int]:
    """Second-iterate steps until the image of ``interval`` contains [-1, 0] or [0, 1]."""
    current = [interval]
    for k in range(max_steps + 1):
        if _covers_a_half(current):
            return k
        current = image_of_set(step_map(stream, omega_index + 2 * k), current)
    return None


def weight_floor(stream: DrivingStream, omega_index: int, m: int):
    """1/2 times the product of essinf g along m second-iterate steps.

    Lower bound for essinf of the m-step image of a unit-mass cone element once
    the orbit has covered.
    """
    floor = 0.5
    for k in range(m):
        branches = step_map(stream, omega_index + 2 * k).branches
        floor *= float(min(1 / abs(b.slope) for b in branches))
    return floor
