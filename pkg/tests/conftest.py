import sys
from pathlib import Path

import numpy as np
import pytest

import folharm as fh

sys.path.insert(0, str(Path(__file__).parent))

TWO_PI = 2 * np.pi


@pytest.fixture(scope="session")
def torus1():
    return fh.FlatTorus([TWO_PI])


@pytest.fixture(scope="session")
def torus2():
    return fh.FlatTorus([TWO_PI, TWO_PI])


@pytest.fixture(scope="session")
def sphere():
    return fh.RoundSphere(radius=1.0, cap_angle=0.4)


@pytest.fixture(scope="session")
def patch():
    return fh.HyperbolicPatch(x_bounds=(-2.0, 2.0), y_bounds=(0.5, 3.0))


@pytest.fixture(scope="session")
def all_geometries(torus1, torus2, sphere, patch):
    return [torus1, torus2, sphere, patch]


def interior_points(geom, rng, count):
    """Random points strictly inside the chart box (10% margin)."""
    bounds = np.asarray(geom.chart_bounds, dtype=float)
    lo = bounds[:, 0] + 0.1 * (bounds[:, 1] - bounds[:, 0])
    hi = bounds[:, 1] - 0.1 * (bounds[:, 1] - bounds[:, 0])
    return rng.uniform(lo, hi, size=(count, geom.dim))
