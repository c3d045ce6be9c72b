"""
Explicit constants of the spectral gap bound for a driven paired tent family,
and of its small-kappa refinement.

Leakage sets are defined on the unscaled table, so they do not move when the
family is scaled by kappa:

    G_k(b)   max(eps_k(b), eps_k(b + 1)) >= M          (k = 1, 2)
    pattern  G_1 and G_2 are both visited among b, b + 2, ..., b + 2d,
             so at most d sigma^2 steps apart
    G_P(b)   pattern(b + 2 m1)

For iid drivings the frequency of G_P is estimated along an orbit; for
periodic drivings it is exact over the sigma^2 cycle.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from .base.error_handling import ConfigurationError, DomainError, NumericalError
from .cone_metric import ConeParams
from .driving import DrivingKind, DrivingStream, entry_indices, entry_weights
from .logging_config import PipelineLogger, get_logger
from .schemas import AsymptoticBound, BirkhoffThreshold, BoundReport, CoveringTimes
from .utils import Scalar, ceil_ratio, log_tanh

logger = get_logger(__name__)
pipeline_logger = PipelineLogger(__name__)

LOG_EXPANSION = math.log(1.5)
LOG4 = math.log(4)


@dataclass(frozen=True)
class BasicConstants:
    M: Scalar
    D_eps: Scalar
    B: Scalar


def _unscaled_constants(stream: DrivingStream) -> BasicConstants:
    weights = entry_weights(stream)
    mean1 = sum((w * e.eps1 for w, e in zip(weights, stream.entries)), Fraction(0))
    mean2 = sum((w * e.eps2 for w, e in zip(weights, stream.entries)), Fraction(0))
    M = min(mean1, mean2) / 2
    B = max(max(e.eps1, e.eps2) for e in stream.entries)
    return BasicConstants(M=M, D_eps=4 * (1 + B) ** 2, B=B)


def basic_constants(stream: DrivingStream) -> BasicConstants:
    """M = min(E eps1, E eps2)/2, B = max eps and D_eps = 4(1 + B)^2 for the scaled family."""
    base = _unscaled_constants(stream)
    if base.M == 0:
        raise DomainError("M vanishes: one of eps1, eps2 is almost surely zero")
    kappa = stream.kappa
    B = kappa * base.B
    return BasicConstants(M=kappa * base.M, D_eps=4 * (1 + B) ** 2, B=B)


def interval_expansion_bound(measure: float, anchored: bool = False) -> int:
    """Second-iterate steps after which an interval of this measure covers a half.

    Intervals with an endpoint at -1, 0 or 1 grow by a factor 4 per step;
    general ones by at least 1.5 once the extra step for an interior critical
    point is paid.
    """
    if not 0 < measure <= 1:
        raise DomainError(f"interval measure must lie in (0, 1], got {measure}")
    ratio = -math.log(2 * float(measure))
    if anchored:
        return max(0, ceil_ratio(ratio, LOG4))
    return max(0, ceil_ratio(ratio, LOG_EXPANSION)) + 1


def expansion_time_m1(a: Scalar) -> int:
    """m1 for intervals of measure 1/(2a): ceil(log a / log 1.5) + 1."""
    return ceil_ratio(math.log(float(a)), LOG_EXPANSION) + 1


def covering_time_m3(M: Scalar) -> int:
    """m3 = ceil(-log M / log 4)."""
    return max(0, ceil_ratio(-math.log(float(M)), LOG4))


class LeakageSets:
    """Membership predicates for G_1, G_2, the pattern set and G_P."""

    def __init__(self, stream: DrivingStream, d: int = 1, m1: int = 0):
        self.stream = stream
        self.threshold = _unscaled_constants(stream).M
        self.d = d
        self.m1 = m1
        self._leak1 = np.array([e.eps1 >= self.threshold for e in stream.entries])
        self._leak2 = np.array([e.eps2 >= self.threshold for e in stream.entries])

    def with_window(self, d: int, m1: int) -> "LeakageSets":
        return LeakageSets(self.stream, d=d, m1=m1)

    def _indicator(self, leak: np.ndarray, start: int, count: int) -> np.ndarray:
        rows = entry_indices(self.stream, start, count + 1)
        hits = leak[rows]
        return hits[:-1] | hits[1:]

    def g1(self, b: int) -> bool:
        return bool(self._indicator(self._leak1, b, 1)[0])

    def g2(self, b: int) -> bool:
        return bool(self._indicator(self._leak2, b, 1)[0])

    def pattern(self, b: int) -> bool:
        return bool(self.pattern_array(b, 1)[0])

    def g_p(self, b: int) -> bool:
        return self.pattern(b + 2 * self.m1)

    def leak_arrays(self, start: int, count: int):
        """G_1 and G_2 along the sigma^2 orbit start, start + 2, ... (count points)."""
        span = 2 * count
        g1 = self._indicator(self._leak1, start, span)[0::2]
        g2 = self._indicator(self._leak2, start, span)[0::2]
        return g1, g2

    def pattern_array(self, start: int, count: int) -> np.ndarray:
        g1, g2 = self.leak_arrays(start, count + self.d)
        window = self.d + 1
        seen1 = np.lib.stride_tricks.sliding_window_view(g1, window).any(axis=1)
        seen2 = np.lib.stride_tricks.sliding_window_view(g2, window).any(axis=1)
        return (seen1 & seen2)[:count]

    def g_p_array(self, start: int, count: int) -> np.ndarray:
        return self.pattern_array(start + 2 * self.m1, count)

    def measures(self, orbit_length: int = 100000):
        """Frequencies of G_1 and G_2 on the sigma^2 component of base index 0.

        Exact for iid tables (one minus the squared miss probability) and for
        periodic cycles; ``orbit_length`` is unused for those.
        """
        if self.stream.kind is DrivingKind.IID:
            weights = entry_weights(self.stream)
            miss1 = sum((w for w, hit in zip(weights, self._leak1) if not hit), Fraction(0))
            miss2 = sum((w for w, hit in zip(weights, self._leak2) if not hit), Fraction(0))
            return float(1 - miss1 ** 2), float(1 - miss2 ** 2)
        cycle = self.stream.second_iterate_period
        g1, g2 = self.leak_arrays(0, cycle)
        return float(g1.mean()), float(g2.mean())

    def g_p_frequency(self, orbit_length: int = 100000) -> float:
        if self.stream.kind is DrivingKind.PERIODIC:
            return float(self.g_p_array(0, self.stream.second_iterate_period).mean())
        return float(self.g_p_array(0, orbit_length).mean())


def leakage_sets(stream: DrivingStream, d: Optional[int] = None, m1: int = 0) -> LeakageSets:
    """Leakage predicates; ``d`` defaults to the leakage time of the stream."""
    sets = LeakageSets(stream, m1=m1)
    if d is None:
        d = leakage_time(stream).d
    return sets.with_window(d, m1)


@dataclass(frozen=True)
class LeakageTime:
    d12: int
    d21: int

    @property
    def d(self) -> int:
        return max(self.d12, self.d21)


def _first_gap(first: np.ndarray, second: np.ndarray) -> int:
    """Least d >= 1 with first[b] and second[b + d] for some b on the cycle."""
    period = len(first)
    for d in range(1, period + 1):
        if np.any(first & np.roll(second, -d)):
            return d
    raise DomainError("leakage pattern never occurs on the driving cycle")


def leakage_time(stream: DrivingStream) -> LeakageTime:
    """d12 (resp. d21): least d >= 1 such that G_1 at b and G_2 at b + 2d can co-occur.

    For iid tables both sets have positive probability and the draws are
    independent, so d = 1.
    """
    sets = LeakageSets(stream)
    if stream.kind is DrivingKind.IID:
        g1, g2 = sets.measures()
        if g1 == 0 or g2 == 0:
            raise DomainError("a leakage set has zero probability")
        return LeakageTime(1, 1)
    g1, g2 = sets.leak_arrays(0, stream.second_iterate_period)
    return LeakageTime(d12=_first_gap(g1, g2), d21=_first_gap(g2, g1))


def _check_nu(stream: DrivingStream, cone: ConeParams) -> None:
    nu = float(cone.nu)
    sharp = all(
        max(e.eps1, e.eps2) * stream.kappa <= Fraction(1, 2) for e in stream.entries
    )
    lower = 0.5 if sharp else 0.75
    if not lower < nu < 1:
        raise ConfigurationError(
            f"nu={nu} is outside ({lower}, 1), where the Lasota-Yorke constants give cone invariance"
        )


def covering_times(stream: DrivingStream, cone: ConeParams, orbit_length: int = 100000) -> CoveringTimes:
    """m1, m3, d and the frequency of G_P."""
    _check_nu(stream, cone)
    constants = basic_constants(stream)
    m1 = expansion_time_m1(cone.a)
    m3 = covering_time_m3(constants.M)
    d = leakage_time(stream).d
    freq = leakage_sets(stream, d=d, m1=m1).g_p_frequency(orbit_length)
    logger.debug(f"covering times m1={m1} m3={m3} d={d} G_P frequency={freq:.6g}")
    return CoveringTimes(a=float(cone.a), nu=float(cone.nu), m1=m1, m3=m3, d=d, G_P_freq=freq)


def cone_log_constant(cone: ConeParams) -> float:
    """log(2(1 + nu)/(1 - nu) * (1 + nu a))."""
    nu, a = float(cone.nu), float(cone.a)
    return math.log(2 * (1 + nu) / (1 - nu) * (1 + nu * a))


def spectral_gap_bound(stream: DrivingStream, cone: ConeParams, orbit_length: int = 100000) -> BoundReport:
    """All constants of the bound lambda2 <= C < 0.

    C uses the diameter bound D_P derived in the proof. ``C_statement_literal``
    evaluates the displayed formula with arguments -1/4 log(...) + 1/4 k_P log D_eps;
    it is NaN when that argument is not positive.
    """
    constants = basic_constants(stream)
    times = covering_times(stream, cone, orbit_length)
    k_P = times.m1 + times.d + times.m3
    log_cone = cone_log_constant(cone)
    log_d_eps = math.log(constants.D_eps)
    D_P = 2 * log_cone + 2 * k_P * log_d_eps
    weight = times.G_P_freq / (2 * k_P)
    C = weight * log_tanh(D_P / 4)
    C_literal = weight * log_tanh(-log_cone / 4 + k_P * log_d_eps / 4)
    if not C < 0:
        raise NumericalError(f"bound constant C={C} is not negative (k_P={k_P}, D_P={D_P})")
    pipeline_logger.info_success(f"spectral gap bound C={C:.6g} with k_P={k_P}, D_P={D_P:.6g}", k_P=k_P, D_P=D_P)
    return BoundReport(
        M=float(constants.M),
        D_eps=float(constants.D_eps),
        B=float(constants.B),
        m1=times.m1,
        m3=times.m3,
        d=times.d,
        k_P=k_P,
        D_P=D_P,
        G_P_freq=times.G_P_freq,
        C=C,
        C_statement_literal=C_literal,
    )


def birkhoff_threshold(
    stream: DrivingStream,
    delta: float = 0.5,
    f: Optional[float] = None,
    horizon: int = 2000,
    n_starts: int = 500,
) -> BirkhoffThreshold:
    """Frequency threshold N0 beyond which the running G_1/G_2 frequencies stay >= f.

    For each start b = 0, 2, 4, ... the last window length N <= horizon at
    which min(freq_1(N), freq_2(N)) < f is recorded; N0 is one more than the
    (1 - delta) quantile of these times, so a mass of at least 1 - delta of
    starts is good from N0 on.
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    sets = LeakageSets(stream)
    if f is None:
        mu1, mu2 = sets.measures()
        f = min(mu1, mu2) / 2
    g1, g2 = sets.leak_arrays(0, n_starts + horizon)
    windows1 = np.lib.stride_tricks.sliding_window_view(g1, horizon)[:n_starts]
    windows2 = np.lib.stride_tricks.sliding_window_view(g2, horizon)[:n_starts]
    lengths = np.arange(1, horizon + 1)
    freq1 = np.cumsum(windows1, axis=1) / lengths
    freq2 = np.cumsum(windows2, axis=1) / lengths
    bad = np.minimum(freq1, freq2) < f
    last_bad = np.where(bad.any(axis=1), horizon - np.argmax(bad[:, ::-1], axis=1), 0)
    N0 = int(np.quantile(last_bad, 1 - delta, method="higher")) + 1
    good = float(np.mean(last_bad < N0))
    logger.debug(f"Birkhoff threshold N0={N0}, good fraction {good:.4f}")
    return BirkhoffThreshold(
        N0=N0, good_fraction=good, f=float(f), delta=delta, n_starts=n_starts, horizon=horizon
    )


def asymptotic_bound(
    stream: DrivingStream,
    cone: ConeParams,
    kappa: float,
    threshold: Optional[BirkhoffThreshold] = None,
    delta: float = 0.5,
) -> AsymptoticBound:
    """Small-kappa bound C1(kappa) ~ -c2 kappa for the family scaled by ``kappa``.

    With m3(kappa) = ceil(-log(kappa M)/log 4) and k_P(kappa) = m1 + 2 m3(kappa),
    gamma(kappa) = (1 + kappa B)^(-2 k_P) f m3 / (2 4^m1 4^m3) and the diameter
    bound is D' = c1 - 2 log gamma. The result is flagged outside the regime
    m3(kappa) >= N0 but still returned.
    """
    if not 0 < kappa <= 1:
        raise DomainError(f"kappa must lie in (0, 1], got {kappa}")
    base = stream.with_kappa(1)
    unit = basic_constants(base)
    M1, B1 = float(unit.M), float(unit.B)
    m1 = expansion_time_m1(cone.a)
    if threshold is None:
        threshold = birkhoff_threshold(base, delta=delta)
    f = threshold.f
    freq = threshold.good_fraction

    m3 = max(1, ceil_ratio(-math.log(kappa * M1), LOG4))
    k_P = m1 + 2 * m3
    log_gamma = (
        -2 * k_P * math.log1p(kappa * B1)
        - math.log(2)
        - m1 * LOG4
        + math.log(f)
        + math.log(m3)
        - m3 * LOG4
    )
    c1 = 2 * cone_log_constant(cone)
    D_prime = c1 - 2 * log_gamma
    C1 = freq / k_P * log_tanh(D_prime / 4)
    c2 = math.exp(-c1 / 2) * freq * f * M1 / (2 * 4.0 ** m1)
    in_regime = m3 >= threshold.N0
    if not in_regime:
        pipeline_logger.warning_skip(
            f"kappa={kappa:g} is outside the asymptotic regime (m3={m3} < N0={threshold.N0})"
        )
    return AsymptoticBound(
        kappa=kappa,
        m3_kappa=m3,
        k_P_kappa=k_P,
        log_gamma=log_gamma,
        gamma=math.exp(log_gamma),
        c1=c1,
        D_prime=D_prime,
        C1=C1,
        c2=c2,
        f=f,
        N0=threshold.N0,
        freq=freq,
        in_regime=in_regime,
    )


def kappa_sweep(
    stream: DrivingStream, cone: ConeParams, kappas: Sequence[float], delta: float = 0.5
) -> List[AsymptoticBound]:
    """C1(kappa) along a grid, sharing one Birkhoff threshold."""
    threshold = birkhoff_threshold(stream.with_kappa(1), delta=delta)
    return [asymptotic_bound(stream, cone, k, threshold=threshold) for k in kappas]


def dyadic_kappas(first_exponent: int, last_exponent: int, step: int = 1) -> List[float]:
    """2^-e for e = first_exponent, first_exponent + step, ..., last_exponent."""
    return [2.0 ** -e for e in range(first_exponent, last_exponent + 1, step)]
