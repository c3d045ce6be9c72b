"""
Shared fixtures for the unit tests.
"""

import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

# Add src to path
package_src = Path(__file__).parent.parent.parent
sys.path.insert(0, str(package_src))

from tentcocycle.cone_metric import ConeParams
from tentcocycle.driving import constant_driving, iid_driving, periodic_driving
from tentcocycle.interval_maps import PairedTentParams, compose_second_iterate, make_paired_tent
from tentcocycle.step_functions import StepFunction


@pytest.fixture
def rng():
    """Deterministic generator for randomized checks."""
    return np.random.default_rng(20240611)


@pytest.fixture
def cone():
    """The default cone C_120 with nu = 0.8."""
    return ConeParams(a=120, nu=0.8)


@pytest.fixture
def tent_exact():
    """T_{1/4, 3/4} in rational arithmetic."""
    return make_paired_tent(PairedTentParams(Fraction(1, 4), Fraction(3, 4)))


@pytest.fixture
def tent_one():
    """T_{1, 1}."""
    return make_paired_tent(PairedTentParams(1, 1))


@pytest.fixture
def second_iterate_exact(tent_exact):
    """T_{1/2, 1/8} ∘ T_{1/4, 3/4}."""
    return compose_second_iterate(tent_exact, make_paired_tent(PairedTentParams(Fraction(1, 2), Fraction(1, 8))))


@pytest.fixture
def staircase():
    """A rational step function with three cells."""
    return StepFunction((-1, Fraction(-1, 2), Fraction(1, 4), 1), (1, 3, 2))


@pytest.fixture
def const_one_stream():
    """The constant driving eps = 1."""
    return constant_driving(1, 1)


@pytest.fixture
def periodic_stream():
    """A period-two cycle in float arithmetic."""
    return periodic_driving([(0.25, 0.5), (0.5, 0.25)], kappa=0.5)


@pytest.fixture
def iid_stream():
    """A two-row iid table."""
    return iid_driving([(0.25, 0.5, 0.5), (0.5, 0.25, 0.5)], seed=7, kappa=0.5)
