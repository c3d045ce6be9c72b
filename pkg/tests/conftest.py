"""
Shared configuration and fixtures for the sweep-scale acceptance suites.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
package_src = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(package_src))

from tentcocycle.cone_metric import ConeParams
from tentcocycle.driving import constant_driving


def pytest_collection_modifyitems(config, items):
    """Every suite in this directory is a slow sweep."""
    for item in items:
        if Path(str(item.fspath)).parent == Path(__file__).parent:
            item.add_marker(pytest.mark.slow)


@pytest.fixture
def cone():
    """C_120 with nu = 0.8."""
    return ConeParams(a=120, nu=0.8)


@pytest.fixture
def const_one_stream():
    return constant_driving(1, 1)


@pytest.fixture
def sweep_rng():
    return np.random.default_rng(8675309)
