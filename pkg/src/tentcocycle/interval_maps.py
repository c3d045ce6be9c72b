"""
Piecewise-linear expanding maps on [-1, 1].

The paired tent maps T_{eps1, eps2} and their second iterates are the only
maps the pipelines need, but every operation here works for any finite family
of affine branches tiling [-1, 1].
"""

from bisect import bisect_left
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .base.error_handling import DomainError
from .logging_config import get_logger
from .step_functions import Half, StepFunction
from .utils import FLOAT_MERGE_TOL, Scalar, exactify, is_exact, like

logger = get_logger(__name__)

HALF = Fraction(1, 2)


def _tol(*values) -> float:
    """Comparison slack: zero for exact scalars, FLOAT_MERGE_TOL otherwise."""
    return 0.0 if is_exact(values) else FLOAT_MERGE_TOL


class Side(str, Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True, order=True)
class Interval:
    """Closed interval [lo, hi] inside [-1, 1] with nonempty interior."""

    lo: Scalar
    hi: Scalar

    def __post_init__(self):
        lo, hi = exactify(self.lo), exactify(self.hi)
        if not lo < hi:
            raise DomainError(f"interval needs lo < hi, got [{lo}, {hi}]")
        tol = _tol(lo, hi)
        if lo < -1 - tol or hi > 1 + tol:
            raise DomainError(f"interval [{lo}, {hi}] leaves [-1, 1]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def measure(self) -> Scalar:
        """Normalized Lebesgue measure (hi - lo) / 2."""
        return (self.hi - self.lo) / 2

    def contains(self, other: "Interval") -> bool:
        tol = _tol(self.lo, self.hi, other.lo, other.hi)
        return self.lo <= other.lo + tol and other.hi <= self.hi + tol

    def intersect(self, lo, hi) -> Optional["Interval"]:
        """Intersection with [lo, hi], or None when it has no interior."""
        new_lo = max(self.lo, lo)
        new_hi = min(self.hi, hi)
        if new_hi - new_lo <= _tol(new_lo, new_hi):
            return None
        return Interval(new_lo, new_hi)


@dataclass(frozen=True, order=True)
class OneTailedPoint:
    """A point together with the side from which it is approached."""

    x: Scalar
    side: Side


@dataclass(frozen=True)
class AffineBranch:
    """y = slope * x + intercept on ``domain``."""

    domain: Interval
    slope: Scalar
    intercept: Scalar

    def __call__(self, x) -> Scalar:
        return self.slope * x + self.intercept

    @property
    def image(self) -> Interval:
        a, b = self(self.domain.lo), self(self.domain.hi)
        lo, hi = (a, b) if a <= b else (b, a)
        return Interval(max(lo, lo * 0 - 1), min(hi, hi * 0 + 1))

    def preimage(self, lo, hi) -> Optional[Interval]:
        """Part of the domain mapped into [lo, hi]."""
        a = (lo - self.intercept) / self.slope
        b = (hi - self.intercept) / self.slope
        if a > b:
            a, b = b, a
        return self.domain.intersect(a, b)


@dataclass(frozen=True)
class PairedTentParams:
    """Leakage parameters of a paired tent map."""

    eps1: Scalar
    eps2: Scalar

    def __post_init__(self):
        for name in ("eps1", "eps2"):
            value = exactify(getattr(self, name))
            if not 0 <= value <= 1:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")
            object.__setattr__(self, name, value)

    def scaled(self, kappa) -> "PairedTentParams":
        kappa = exactify(kappa)
        return PairedTentParams(kappa * self.eps1, kappa * self.eps2)


@dataclass(frozen=True)
class PiecewiseLinearMap:
    """Ordered affine branches tiling [-1, 1].

    ``origin`` records the paired tent parameters a map was built from, in
    order of application; it is empty for maps assembled by hand.
    """

    branches: Tuple[AffineBranch, ...]
    origin: Tuple[PairedTentParams, ...] = field(default=(), compare=False)

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise DomainError("a piecewise linear map needs at least one branch")
        first, last = branches[0].domain, branches[-1].domain
        tol = _tol(first.lo, last.hi)
        if abs(first.lo + 1) > tol or abs(last.hi - 1) > tol:
            raise DomainError("branch domains must cover [-1, 1]")
        for left, right in zip(branches[:-1], branches[1:]):
            if abs(left.domain.hi - right.domain.lo) > _tol(left.domain.hi, right.domain.lo):
                raise DomainError(
                    f"branch domains must be contiguous, gap at {left.domain.hi} / {right.domain.lo}"
                )
        for branch in branches:
            if abs(branch.slope) < 2 - _tol(branch.slope):
                raise DomainError(f"branch slope {branch.slope} expands by less than 2")
            for y in (branch(branch.domain.lo), branch(branch.domain.hi)):
                if abs(y) > 1 + _tol(y):
                    raise DomainError(f"branch image leaves [-1, 1] (value {y})")
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "origin", tuple(self.origin))

    @property
    def breakpoints(self) -> Tuple[Scalar, ...]:
        return tuple(b.domain.lo for b in self.branches) + (self.branches[-1].domain.hi,)

    @property
    def is_exact(self) -> bool:
        return all(is_exact((b.slope, b.intercept, b.domain.lo, b.domain.hi)) for b in self.branches)

    def __len__(self) -> int:
        return len(self.branches)

    def __call__(self, x) -> Scalar:
        return evaluate(self, x)


def make_paired_tent(params: PairedTentParams) -> PiecewiseLinearMap:
    """Build T_{eps1, eps2}.

    Slopes are 2(1 + eps1) on [-1, 0] and 2(1 + eps2) on [0, 1]; T(-1/2) = eps1
    and T(1/2) = -eps2. The isolated value T(0) = 0 is not represented.
    """
    e1, e2 = params.eps1, params.eps2
    half = like(e1, HALF)
    one = half * 2
    s1 = 2 * (one + e1)
    s2 = 2 * (one + e2)
    branches = (
        AffineBranch(Interval(-one, -half), s1, s1 - one),
        AffineBranch(Interval(-half, one * 0), -s1, -one),
        AffineBranch(Interval(one * 0, half), -s2, one),
        AffineBranch(Interval(half, one), s2, one - s2),
    )
    return PiecewiseLinearMap(branches, origin=(params,))


def evaluate(transfer_map: PiecewiseLinearMap, x) -> Scalar:
    """Evaluate the map at ``x``; at a shared endpoint the left branch wins."""
    if not -1 <= x <= 1:
        raise DomainError(f"x must lie in [-1, 1], got {x}")
    his = [b.domain.hi for b in transfer_map.branches]
    index = min(bisect_left(his, x), len(his) - 1)
    return transfer_map.branches[index](x)


def compose_second_iterate(first: PiecewiseLinearMap, second: PiecewiseLinearMap) -> PiecewiseLinearMap:
    """Return second ∘ first on the pieces D_i ∩ first⁻¹(D_j).

    ``first`` is applied first. Single-point pieces are dropped.
    """
    pieces: List[AffineBranch] = []
    for outer in first.branches:
        for inner in second.branches:
            piece = outer.preimage(inner.domain.lo, inner.domain.hi)
            if piece is None:
                continue
            pieces.append(AffineBranch(
                piece,
                inner.slope * outer.slope,
                inner.slope * outer.intercept + inner.intercept,
            ))
    pieces.sort(key=lambda b: b.domain.lo)
    snapped = [pieces[0]]
    for branch in pieces[1:]:
        lo = snapped[-1].domain.hi
        snapped.append(AffineBranch(Interval(lo, branch.domain.hi), branch.slope, branch.intercept))
    logger.debug(f"composed {len(first)} x {len(second)} branches into {len(snapped)}")
    return PiecewiseLinearMap(tuple(snapped), origin=first.origin + second.origin)


def weight_function(transfer_map: PiecewiseLinearMap) -> StepFunction:
    """The weight g = 1/|T'| as a step function."""
    values = []
    for branch in transfer_map.branches:
        slope = abs(branch.slope)
        values.append(1 / slope)
    return StepFunction(transfer_map.breakpoints, tuple(values))


def _is_boundary(y) -> bool:
    tol = _tol(y)
    return abs(y - 1) <= tol or abs(y + 1) <= tol


def _in_half(point: OneTailedPoint, within: Interval) -> bool:
    if point.side is Side.PLUS:
        return within.lo <= point.x < within.hi
    return within.lo < point.x <= within.hi


def hanging_points(
    transfer_map: PiecewiseLinearMap, within: Optional[Interval] = None
) -> Set[OneTailedPoint]:
    """One-tailed branch endpoints whose one-sided image is not ±1.

    With ``within`` only the germs lying inside that interval are returned.
    """
    points: Set[OneTailedPoint] = set()
    for branch in transfer_map.branches:
        lo, hi = branch.domain.lo, branch.domain.hi
        if not _is_boundary(branch(lo)):
            points.add(OneTailedPoint(lo, Side.PLUS))
        if not _is_boundary(branch(hi)):
            points.add(OneTailedPoint(hi, Side.MINUS))
    if within is not None:
        points = {p for p in points if _in_half(p, within)}
    return points


def _merge(intervals: Iterable[Tuple[Scalar, Scalar]]) -> List[Interval]:
    ordered = sorted(intervals)
    merged: List[List[Scalar]] = []
    for lo, hi in ordered:
        if merged and lo <= merged[-1][1] + _tol(lo, merged[-1][1]):
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [Interval(lo, hi) for lo, hi in merged]


def _branch_images(transfer_map: PiecewiseLinearMap, interval: Interval) -> List[Tuple[Scalar, Scalar]]:
    images = []
    for branch in transfer_map.branches:
        piece = branch.domain.intersect(interval.lo, interval.hi)
        if piece is None:
            continue
        a, b = branch(piece.lo), branch(piece.hi)
        images.append((min(a, b), max(a, b)))
    return images


def image_of_interval(transfer_map: PiecewiseLinearMap, interval: Interval) -> List[Interval]:
    """T(I) as a minimal sorted union of closed intervals."""
    return _merge(_branch_images(transfer_map, interval))


def image_of_set(transfer_map: PiecewiseLinearMap, intervals: Sequence[Interval]) -> List[Interval]:
    """Image of a finite union of intervals."""
    images: List[Tuple[Scalar, Scalar]] = []
    for interval in intervals:
        images.extend(_branch_images(transfer_map, interval))
    return _merge(images)


def union_measure(intervals: Sequence[Interval]) -> Scalar:
    """Normalized measure of a union of disjoint intervals."""
    return sum((i.measure for i in intervals), Fraction(0) if is_exact([i.lo for i in intervals]) else 0.0)


def branch_count_by_half(transfer_map: PiecewiseLinearMap) -> Dict[Half, int]:
    """Number of branches whose domain lies in each half of [-1, 1]."""
    counts = {Half.MINUS: 0, Half.PLUS: 0}
    for branch in transfer_map.branches:
        midpoint = (branch.domain.lo + branch.domain.hi) / 2
        counts[Half.MINUS if midpoint < 0 else Half.PLUS] += 1
    return counts


def graph_samples(transfer_map: PiecewiseLinearMap, n_points: int = 401) -> List[Tuple[float, float]]:
    """Evenly spaced (x, T(x)) samples for plotting."""
    if n_points < 2:
        raise DomainError(f"graph needs at least 2 samples, got {n_points}")
    xs = np.linspace(-1.0, 1.0, n_points)
    return [(float(x), float(evaluate(transfer_map, float(x)))) for x in xs]
