"""
Piecewise-constant representatives of BV classes on [-1, 1] and the transfer
operator action of piecewise-linear maps on them.

All lengths are measured with normalized Lebesgue measure, so the whole
interval has mass 1 and a cell [x_{i-1}, x_i] has mass (x_i - x_{i-1}) / 2.
"""

from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from operator import itemgetter
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .base.error_handling import DomainError, PreconditionError
from .logging_config import get_logger
from .utils import FLOAT_JUMP_TOL, FLOAT_MERGE_TOL, Scalar, exactify, is_exact, to_fraction

if TYPE_CHECKING:
    from .interval_maps import PiecewiseLinearMap

logger = get_logger(__name__)


class Half(str, Enum):
    """The two halves I- = [-1, 0] and I+ = [0, 1]."""
    MINUS = "minus"
    PLUS = "plus"


def _absorb(target: list, other: list) -> None:
    """Merge cell ``other`` into ``target`` keeping total mass."""
    w1 = target[1] - target[0]
    w2 = other[1] - other[0]
    total = w1 + w2
    if total > 0 and target[2] != other[2]:
        target[2] = (target[2] * w1 + other[2] * w2) / total
    target[0] = min(target[0], other[0])
    target[1] = max(target[1], other[1])


def _canonicalize(breakpoints: Tuple, values: Tuple) -> Tuple[Tuple, Tuple]:
    exact = is_exact(breakpoints) and is_exact(values)

    def negligible(width) -> bool:
        return width == 0 or (not exact and width <= FLOAT_MERGE_TOL)

    merged: List[list] = []
    for lo, hi, v in zip(breakpoints[:-1], breakpoints[1:], values):
        if hi < lo:
            raise DomainError(f"breakpoints must be increasing, got {lo} before {hi}")
        cell = [lo, hi, v]
        if merged and negligible(hi - lo):
            _absorb(merged[-1], cell)
        elif merged and negligible(merged[-1][1] - merged[-1][0]):
            _absorb(cell, merged.pop())
            merged.append(cell)
        else:
            merged.append(cell)

    if exact:
        def same(u, w) -> bool:
            return u == w
    else:
        scale = max(abs(c[2]) for c in merged)
        jump_tol = FLOAT_JUMP_TOL * scale
        for c in merged:
            if abs(c[2]) <= jump_tol:
                c[2] = 0.0

        def same(u, w) -> bool:
            return abs(u - w) <= jump_tol

    cells: List[list] = [merged[0]]
    for cell in merged[1:]:
        if same(cells[-1][2], cell[2]):
            _absorb(cells[-1], cell)
        else:
            cells.append(cell)

    new_breakpoints = tuple(c[0] for c in cells) + (cells[-1][1],)
    return new_breakpoints, tuple(c[2] for c in cells)


@dataclass(frozen=True)
class StepFunction:
    """Step function on [-1, 1] in canonical (minimal variation) form.

    ``values[i]`` is the value on the open cell (breakpoints[i], breakpoints[i+1]).
    Construction canonicalizes: zero-width cells are dropped and equal
    neighbours merged (exactly for rationals, within tolerance for floats).
    """

    breakpoints: Tuple[Scalar, ...]
    values: Tuple[Scalar, ...]

    def __post_init__(self):
        bps = tuple(exactify(b) for b in self.breakpoints)
        vals = tuple(exactify(v) for v in self.values)
        if len(vals) < 1 or len(bps) != len(vals) + 1:
            raise DomainError(
                f"need len(breakpoints) == len(values) + 1 >= 2, got {len(bps)} and {len(vals)}"
            )
        if bps[0] != -1 or bps[-1] != 1:
            raise DomainError(f"breakpoints must run from -1 to 1, got {bps[0]} .. {bps[-1]}")
        bps, vals = _canonicalize(bps, vals)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @property
    def is_exact(self) -> bool:
        return is_exact(self.breakpoints) and is_exact(self.values)

    @property
    def cell_count(self) -> int:
        return len(self.values)

    def masses(self) -> List[Scalar]:
        """Normalized measure of each cell."""
        return [(hi - lo) / 2 for lo, hi in zip(self.breakpoints[:-1], self.breakpoints[1:])]

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return linear_combine([1, 1], [self, other])

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return linear_combine([1, -1], [self, other])

    def __mul__(self, c) -> "StepFunction":
        return scale(self, c)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "StepFunction":
        if c == 0:
            raise ZeroDivisionError("division of a step function by zero")
        inverse = Fraction(1) / c if isinstance(c, (int, Fraction)) else 1.0 / c
        return scale(self, inverse)


@dataclass(frozen=True)
class BVFunctionals:
    """The norms and essential bounds of a step function."""
    l1: Scalar
    integral: Scalar
    essinf: Scalar
    esssup: Scalar
    bv_norm: Scalar


@dataclass(frozen=True)
class LYReport:
    """Both sides of the Lasota-Yorke inequality for one function and map."""
    lhs: Scalar
    rhs_general: Scalar
    rhs_sharp: Optional[Scalar] = None
    tol: float = 0.0

    @property
    def holds_general(self) -> bool:
        return self.lhs <= self.rhs_general + self.tol

    @property
    def holds_sharp(self) -> Optional[bool]:
        if self.rhs_sharp is None:
            return None
        return self.lhs <= self.rhs_sharp + self.tol

    @property
    def holds(self) -> bool:
        return self.holds_general and self.holds_sharp is not False


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def constant(c) -> StepFunction:
    """The constant function c on [-1, 1]."""
    return StepFunction((-1, 1), (c,))


def zero() -> StepFunction:
    return constant(0)


def indicator(lo, hi, value=1) -> StepFunction:
    """``value`` times the indicator of [lo, hi]."""
    if not -1 <= lo < hi <= 1:
        raise DomainError(f"indicator needs -1 <= lo < hi <= 1, got [{lo}, {hi}]")
    bps = [-1]
    vals = []
    if lo > -1:
        bps.append(lo)
        vals.append(0)
    vals.append(value)
    if hi < 1:
        bps.append(hi)
        vals.append(0)
    bps.append(1)
    return StepFunction(tuple(bps), tuple(vals))


def random_step_function(
    rng: np.random.Generator,
    n_cells: int = 6,
    exact: bool = False,
    low: float = -1.0,
    high: float = 1.0,
    denominator: int = 64,
) -> StepFunction:
    """Draw a random step function.

    In exact mode breakpoints lie on the grid k/denominator and values are
    integers scaled by 1/8; in float mode both are uniform draws.
    """
    if exact:
        ticks = rng.choice(np.arange(-denominator + 1, denominator), size=n_cells - 1, replace=False)
        inner = sorted(Fraction(int(t), denominator) for t in ticks)
        vals = [Fraction(int(v), 8) for v in rng.integers(int(8 * low), int(8 * high) + 1, size=n_cells)]
    else:
        inner = sorted(float(x) for x in rng.uniform(-1.0, 1.0, size=n_cells - 1))
        vals = [float(v) for v in rng.uniform(low, high, size=n_cells)]
    return StepFunction(tuple([-1] + inner + [1]), tuple(vals))


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------

def variation(f: StepFunction) -> Scalar:
    """Total variation of the minimal-variation representative."""
    vals = f.values
    return sum((abs(b - a) for a, b in zip(vals[:-1], vals[1:])), vals[0] * 0)


def integral(f: StepFunction) -> Scalar:
    return sum((v * m for v, m in zip(f.values, f.masses())), f.values[0] * 0)


def l1_norm(f: StepFunction) -> Scalar:
    return sum((abs(v) * m for v, m in zip(f.values, f.masses())), f.values[0] * 0)


def bv_norm(f: StepFunction) -> Scalar:
    """The BV norm ||f||_1 + Var(f)."""
    return l1_norm(f) + variation(f)


def bv_norm_max(f: StepFunction) -> Scalar:
    """The max-form BV norm max(||f||_1, Var(f)) used for D-adaptedness."""
    return max(l1_norm(f), variation(f))


def bv_functionals(f: StepFunction) -> BVFunctionals:
    l1 = l1_norm(f)
    return BVFunctionals(
        l1=l1,
        integral=integral(f),
        essinf=min(f.values),
        esssup=max(f.values),
        bv_norm=l1 + variation(f),
    )


def evaluate_at(f: StepFunction, x) -> Scalar:
    """Value of the cell containing ``x`` (cells are closed on the left)."""
    if not -1 <= x <= 1:
        raise DomainError(f"x must lie in [-1, 1], got {x}")
    index = min(bisect_right(f.breakpoints, x) - 1, f.cell_count - 1)
    return f.values[index]


# ---------------------------------------------------------------------------
# Algebra
# ---------------------------------------------------------------------------

def _values_on_grid(f: StepFunction, grid: Sequence) -> List[Scalar]:
    bps = f.breakpoints
    out = []
    for lo, hi in zip(grid[:-1], grid[1:]):
        index = min(bisect_right(bps, (lo + hi) / 2) - 1, f.cell_count - 1)
        out.append(f.values[index])
    return out


def linear_combine(coeffs: Sequence, fs: Sequence[StepFunction]) -> StepFunction:
    """Pointwise linear combination on the merged breakpoint grid."""
    if not fs or len(coeffs) != len(fs):
        raise DomainError("linear_combine needs matching, nonempty coefficient and function lists")
    grid = sorted(set().union(*(f.breakpoints for f in fs)))
    columns = [_values_on_grid(f, grid) for f in fs]
    coeffs = [exactify(c) for c in coeffs]
    values = []
    for cell_values in zip(*columns):
        total = coeffs[0] * cell_values[0]
        for c, v in zip(coeffs[1:], cell_values[1:]):
            total = total + c * v
        values.append(total)
    return StepFunction(tuple(grid), tuple(values))


def scale(f: StepFunction, c) -> StepFunction:
    c = exactify(c)
    return StepFunction(f.breakpoints, tuple(c * v for v in f.values))


def restrict(f: StepFunction, lo, hi) -> StepFunction:
    """Multiply ``f`` by the indicator of [lo, hi]."""
    if not -1 <= lo < hi <= 1:
        raise DomainError(f"restriction interval must satisfy -1 <= lo < hi <= 1, got [{lo}, {hi}]")
    grid = sorted(set(f.breakpoints) | {exactify(lo), exactify(hi)})
    values = []
    for (a, b), v in zip(zip(grid[:-1], grid[1:]), _values_on_grid(f, grid)):
        values.append(v if lo <= a and b <= hi else v * 0)
    return StepFunction(tuple(grid), tuple(values))


def l1_distance(f: StepFunction, g: StepFunction) -> Scalar:
    return l1_norm(f - g)


# ---------------------------------------------------------------------------
# Transfer operator
# ---------------------------------------------------------------------------

def _from_events(events: List[Tuple[Any, Any]]) -> StepFunction:
    """Build a step function from (position, jump) events by a left-to-right sweep."""
    events.sort(key=itemgetter(0))
    breakpoints: List = [-1]
    values: List = []
    level = events[0][1] * 0
    for position, delta in events:
        if position >= 1:
            break
        if position > breakpoints[-1]:
            values.append(level)
            breakpoints.append(position)
        level = level + delta
    values.append(level)
    breakpoints.append(1)
    return StepFunction(tuple(breakpoints), tuple(values))


def _clamp(y):
    if y < -1:
        return y * 0 - 1
    if y > 1:
        return y * 0 + 1
    return y


def pf_apply(transfer_map: "PiecewiseLinearMap", f: StepFunction) -> StepFunction:
    """Exact transfer operator image L(f)(x) = sum over preimages y of f(y)/|T'(y)|.

    Each branch pushes the part of ``f`` on its domain affinely onto its image,
    weighted by 1/|slope|. The contributions are collected as jump events and
    summed in one sweep.
    """
    bps, vals = f.breakpoints, f.values
    events: List[Tuple[Any, Any]] = []
    for branch in transfer_map.branches:
        d_lo, d_hi = branch.domain.lo, branch.domain.hi
        i = bisect_right(bps, d_lo) - 1
        xs = [d_lo]
        cs = []
        while True:
            cs.append(vals[i])
            if bps[i + 1] >= d_hi:
                break
            xs.append(bps[i + 1])
            i += 1
        xs.append(d_hi)

        slope, intercept = branch.slope, branch.intercept
        weight = 1 / abs(slope)
        ys = [_clamp(slope * x + intercept) for x in xs]
        ws = [weight * c for c in cs]
        if slope < 0:
            ys.reverse()
            ws.reverse()
        events.append((ys[0], ws[0]))
        for k in range(1, len(ws)):
            events.append((ys[k], ws[k] - ws[k - 1]))
        events.append((ys[-1], -ws[-1]))
    return _from_events(events)


def pf_restricted(transfer_map: "PiecewiseLinearMap", f: StepFunction, half: Half) -> StepFunction:
    """Q^s(f) = 1_{I^s} * L(f) for s in {minus, plus}."""
    image = pf_apply(transfer_map, f)
    if Half(half) is Half.MINUS:
        return restrict(image, -1, 0)
    return restrict(image, 0, 1)


def ly_check(second_iterate: "PiecewiseLinearMap", f: StepFunction, tol: float = 0.0) -> LYReport:
    """Evaluate Var(P f) against 3/4 Var f + 6 ||f||_1 (and 1/2, 4 when all eps <= 1/2)."""
    origin = getattr(second_iterate, "origin", ())
    if len(origin) != 2:
        raise PreconditionError("ly_check needs a second iterate composed from two paired tent maps")
    var_f = variation(f)
    norm_f = l1_norm(f)
    lhs = variation(pf_apply(second_iterate, f))
    rhs_general = Fraction(3, 4) * var_f + 6 * norm_f
    rhs_sharp = None
    half = Fraction(1, 2)
    if all(p.eps1 <= half and p.eps2 <= half for p in origin):
        rhs_sharp = half * var_f + 4 * norm_f
    return LYReport(lhs=lhs, rhs_general=rhs_general, rhs_sharp=rhs_sharp, tol=tol)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _json_scalar(x, exact: bool):
    if exact and isinstance(x, Fraction):
        return str(x)
    return float(x)


def to_json(f: StepFunction, exact: bool = False) -> Dict[str, list]:
    """Serialize to {"breakpoints": [...], "values": [...]}; exact keeps Fractions as "p/q"."""
    return {
        "breakpoints": [_json_scalar(b, exact) for b in f.breakpoints],
        "values": [_json_scalar(v, exact) for v in f.values],
    }


def from_json(payload: Dict[str, list]) -> StepFunction:
    def parse(x):
        return to_fraction(x) if isinstance(x, str) else x
    return StepFunction(
        tuple(parse(b) for b in payload["breakpoints"]),
        tuple(parse(v) for v in payload["values"]),
    )


def to_csv_rows(f: StepFunction) -> List[Dict[str, float]]:
    """One row per cell: lo, hi, value."""
    return [
        {"lo": float(lo), "hi": float(hi), "value": float(v)}
        for lo, hi, v in zip(f.breakpoints[:-1], f.breakpoints[1:], f.values)
    ]
