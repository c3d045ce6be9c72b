"""Scalar helpers shared by the exact (Fraction) and floating pipelines."""

import math
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

Scalar = Union[Fraction, float]

# Breakpoints closer than this are merged in float mode.
FLOAT_MERGE_TOL = 1e-12
# Jumps smaller than this (relative to the largest magnitude) are merged in float mode.
FLOAT_JUMP_TOL = 1e-13


def is_exact(values: Iterable) -> bool:
    """Return True when every value is an int or a Fraction."""
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


def exactify(value) -> Scalar:
    """Promote ints to Fraction and numpy scalars to Python scalars.

    Other numbers (Fraction, float, mpmath mpf) pass through unchanged.
    """
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans are not scalars")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, np.floating):
        return float(value)
    return value


def to_fraction(value) -> Fraction:
    """Convert a JSON-ish scalar to an exact Fraction.

    Floats go through their shortest repr, so 0.1 becomes 1/10 rather than the
    binary expansion of the double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value))


def to_mode(value, mode: str) -> Scalar:
    """Convert a scalar to the arithmetic of the given mode (``rational`` or ``float``)."""
    if mode == "rational":
        return to_fraction(value)
    return float(to_fraction(value)) if isinstance(value, str) else float(value)


def like(reference, q: Fraction):
    """Express the rational constant ``q`` in the number type of ``reference``."""
    if isinstance(reference, (Fraction, int)):
        return q
    if isinstance(reference, float):
        return float(q)
    return type(reference)(q.numerator) / q.denominator


def ceil_ratio(numerator: float, denominator: float, tol: float = 1e-9) -> int:
    """Ceiling of a ratio of logarithms, robust to round-off at exact integers."""
    return math.ceil(numerator / denominator - tol)


def log_tanh(x: float) -> float:
    """Evaluate log(tanh(x)) without losing the tiny negative value for large x."""
    if x == math.inf:
        return 0.0
    if x < 0 or math.isnan(x):
        return math.nan
    if x == 0:
        return -math.inf
    e = math.exp(-2.0 * x)
    return math.log1p(-e) - math.log1p(e)
