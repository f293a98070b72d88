"""Shared fixtures for the polar arcs tests."""

import numpy as np
import pytest

from mcp_server_polar_arcs.core.config import RunConfig
from mcp_server_polar_arcs.core.torus_dynamics import model_f0, model_fJ, torus_distance
from mcp_server_polar_arcs.core.unimodular import UnimodularMatrix, shear


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    """Keep user configuration out of the tests."""
    monkeypatch.delenv("POLAR_ARC_THREADS", raising=False)
    monkeypatch.delenv("POLAR_ARC_CONFIG", raising=False)


@pytest.fixture
def config():
    return RunConfig()


@pytest.fixture
def f0():
    return model_f0()


@pytest.fixture
def fJ1():
    return model_fJ(shear(1))


@pytest.fixture
def random_points():
    return np.random.default_rng(0).random((100, 2))


@pytest.fixture
def assert_same_map(random_points):
    """Compare two torus maps on random points, modulo 1."""

    def check(f, g, tol=1e-12):
        d = torus_distance(f(random_points), g(random_points))
        assert float(np.max(d)) <= tol

    return check


@pytest.fixture
def random_unimodular():
    """Seeded draws of integer matrices with det +-1 and entries bounded by ``bound``."""

    def draw(count, bound, seed=0, det=None):
        rng = np.random.default_rng(seed)
        found = []
        while len(found) < count:
            a, b, c, d = (int(v) for v in rng.integers(-bound, bound + 1, size=4))
            if a * d - b * c in ((det,) if det else (1, -1)):
                found.append(UnimodularMatrix(a, b, c, d))
        return found

    return draw
