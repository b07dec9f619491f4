import numpy as np
import pytest


def chord_distance(a, b):
    """Geodesic distance via the chord, 2 asin(|a-b|/2).

    Exact for unit vectors and, unlike arccos of the dot product,
    resolves separations far below 1e-8; used whenever a test asserts
    a small geodesic error.
    """
    c = np.linalg.norm(np.asarray(a, float) - np.asarray(b, float), axis=-1)
    return 2.0 * np.arcsin(np.clip(c / 2.0, 0.0, 1.0))


def random_unit(rng, n=None):
    shape = (3,) if n is None else (n, 3)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def cap_points(rng, n, center, spread):
    """Points scattered around ``center`` within a cap of roughly
    ``spread`` radians."""
    c = np.asarray(center, float)
    pts = c + spread * rng.standard_normal((n, 3))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
