"""
Two-sided driving systems selecting the paired tent map at each time.

An iid stream draws table rows with a counter-keyed generator, so the row at
index n depends only on (seed, n) and negative indices are as cheap as
positive ones. A periodic stream walks an explicit cycle.
"""

import math
from bisect import bisect_right
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, Mapping, Tuple, Union

import numpy as np

from .base.error_handling import ConfigurationError
from .configuration import DrivingConfig
from .interval_maps import PairedTentParams, PiecewiseLinearMap, compose_second_iterate, make_paired_tent
from .logging_config import get_logger
from .utils import Scalar, exactify, to_fraction, to_mode

logger = get_logger(__name__)

_UNIT_BITS = 53


class DrivingKind(str, Enum):
    IID = "iid"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class DrivingEntry:
    """One row of a driving table: unscaled leakages and a weight."""
    eps1: Scalar
    eps2: Scalar
    weight: Fraction


@dataclass(frozen=True)
class DrivingStream:
    """Immutable descriptor of omega -> (eps1(sigma^n omega), eps2(sigma^n omega))."""

    kind: DrivingKind
    entries: Tuple[DrivingEntry, ...]
    seed: int = 0
    kappa: Scalar = Fraction(1)

    def __post_init__(self):
        if not self.entries:
            raise ConfigurationError("driving table must not be empty")
        if not 0 < self.kappa <= 1:
            raise ConfigurationError(f"kappa must lie in (0, 1], got {self.kappa}")

    @property
    def period(self) -> int:
        return len(self.entries)

    @property
    def is_constant(self) -> bool:
        return len({(e.eps1, e.eps2) for e in self.entries}) == 1

    @property
    def is_exact(self) -> bool:
        values = [self.kappa] + [e.eps1 for e in self.entries] + [e.eps2 for e in self.entries]
        return all(isinstance(v, Fraction) for v in values)

    @property
    def second_iterate_period(self) -> int:
        """Length of the sigma^2 cycle through the even positions of a periodic table."""
        return self.period // math.gcd(2, self.period)

    def with_kappa(self, kappa) -> "DrivingStream":
        return replace(self, kappa=exactify(kappa))

    def thresholds(self) -> Tuple[int, ...]:
        return _thresholds(self.entries)


@lru_cache(maxsize=64)
def _thresholds(entries: Tuple[DrivingEntry, ...]) -> Tuple[int, ...]:
    total = sum((e.weight for e in entries), Fraction(0))
    cumulative = Fraction(0)
    out = []
    for entry in entries:
        cumulative += entry.weight / total
        out.append(math.floor(cumulative * 2**_UNIT_BITS))
    out[-1] = 2**_UNIT_BITS
    return tuple(out)


def _zigzag(n: int) -> int:
    """Bijection Z -> N: 0, -1, 1, -2, ... -> 0, 1, 2, 3, ..."""
    return 2 * n if n >= 0 else -2 * n - 1


def make_driving(config: Union[DrivingConfig, Mapping[str, Any]], mode: str = "float") -> DrivingStream:
    """Build a stream from a validated driving configuration.

    ``mode`` selects the arithmetic of the eps values and kappa: ``rational``
    keeps them as Fractions, ``float`` converts them.
    """
    if not isinstance(config, DrivingConfig):
        config = DrivingConfig.model_validate(dict(config))
    entries = []
    for eps1, eps2, weight in config.rows():
        entries.append(DrivingEntry(
            eps1=to_mode(eps1, mode),
            eps2=to_mode(eps2, mode),
            weight=to_fraction(weight) if weight is not None else Fraction(1),
        ))
    stream = DrivingStream(
        kind=DrivingKind(config.kind),
        entries=tuple(entries),
        seed=config.seed,
        kappa=to_mode(config.kappa, mode),
    )
    logger.info(f"driving: {stream.kind.value} with {stream.period} rows, kappa={float(stream.kappa)}")
    return stream


def constant_driving(eps1, eps2=None, kappa=1) -> DrivingStream:
    """The constant driving that always selects T_{eps1, eps2}."""
    eps2 = eps1 if eps2 is None else eps2
    return DrivingStream(
        kind=DrivingKind.PERIODIC,
        entries=(DrivingEntry(exactify(eps1), exactify(eps2), Fraction(1)),),
        kappa=exactify(kappa),
    )


def periodic_driving(cycle, kappa=1) -> DrivingStream:
    return DrivingStream(
        kind=DrivingKind.PERIODIC,
        entries=tuple(DrivingEntry(exactify(e1), exactify(e2), Fraction(1)) for e1, e2 in cycle),
        kappa=exactify(kappa),
    )


def iid_driving(rows, seed: int = 0, kappa=1) -> DrivingStream:
    """rows: (eps1, eps2, probability) triples."""
    return DrivingStream(
        kind=DrivingKind.IID,
        entries=tuple(DrivingEntry(exactify(e1), exactify(e2), to_fraction(p)) for e1, e2, p in rows),
        seed=seed,
        kappa=exactify(kappa),
    )


@lru_cache(maxsize=1 << 16)
def _iid_draw(seed: int, n: int) -> int:
    state = np.random.SeedSequence(entropy=seed, spawn_key=(_zigzag(n),)).generate_state(1, np.uint64)
    return int(state[0]) >> (64 - _UNIT_BITS)


def entry_index(stream: DrivingStream, n: int) -> int:
    """Row of the driving table selected at base index n."""
    if stream.kind is DrivingKind.PERIODIC:
        return n % stream.period
    if stream.period == 1:
        return 0
    return bisect_right(stream.thresholds(), _iid_draw(stream.seed, n))


def entry_indices(stream: DrivingStream, start: int, count: int) -> np.ndarray:
    """Rows selected at base indices start, ..., start + count - 1."""
    if stream.kind is DrivingKind.PERIODIC:
        return np.arange(start, start + count) % stream.period
    return np.array([entry_index(stream, n) for n in range(start, start + count)], dtype=np.int64)


def raw_epsilon_at(stream: DrivingStream, n: int) -> Tuple[Scalar, Scalar]:
    """Unscaled leakage pair at base index n."""
    entry = stream.entries[entry_index(stream, n)]
    return entry.eps1, entry.eps2


def epsilon_at(stream: DrivingStream, n: int) -> Tuple[Scalar, Scalar]:
    """Leakage pair (kappa eps1, kappa eps2) at base index n."""
    eps1, eps2 = raw_epsilon_at(stream, n)
    return stream.kappa * eps1, stream.kappa * eps2


@lru_cache(maxsize=4096)
def _tent(stream: DrivingStream, index: int) -> PiecewiseLinearMap:
    entry = stream.entries[index]
    return make_paired_tent(PairedTentParams(entry.eps1, entry.eps2).scaled(stream.kappa))


@lru_cache(maxsize=4096)
def _second_iterate(stream: DrivingStream, first: int, second: int) -> PiecewiseLinearMap:
    return compose_second_iterate(_tent(stream, first), _tent(stream, second))


def map_at(stream: DrivingStream, n: int) -> PiecewiseLinearMap:
    """The paired tent map T at base index n."""
    return _tent(stream, entry_index(stream, n))


def step_map(stream: DrivingStream, base: int) -> PiecewiseLinearMap:
    """The second iterate T_{base+1} ∘ T_{base}."""
    return _second_iterate(stream, entry_index(stream, base), entry_index(stream, base + 1))


def second_iterate_at(stream: DrivingStream, n: int) -> PiecewiseLinearMap:
    """S at base index 2n: the second-iterate cocycle advances the base by two.

    For periodic drivings of even period this only visits the even component
    of the cycle.
    """
    return step_map(stream, 2 * n)


def entry_weights(stream: DrivingStream) -> Tuple[Fraction, ...]:
    """Probability of each row under the stationary measure (uniform over a cycle)."""
    if stream.kind is DrivingKind.PERIODIC:
        return tuple(Fraction(1, stream.period) for _ in stream.entries)
    total = sum((e.weight for e in stream.entries), Fraction(0))
    return tuple(e.weight / total for e in stream.entries)


def describe(stream: DrivingStream) -> str:
    kappa = stream.kappa
    rows = ", ".join(f"({float(e.eps1):g}, {float(e.eps2):g})" for e in stream.entries)
    return f"{stream.kind.value}[{rows}] kappa={float(kappa):g} seed={stream.seed}"
