import math

import numpy as np
import pytest


def ball_points(rng, n, dim, c, frac=0.9):
    """Points uniform in volume inside the ball of radius ``frac / sqrt(c)``."""
    v = rng.standard_normal((n, dim))
    r = frac * rng.uniform(size=(n, 1)) ** (1.0 / dim) / math.sqrt(c)
    return r * v / np.linalg.norm(v, axis=1, keepdims=True)


def tangent_vectors(rng, n, dim, max_norm):
    v = rng.standard_normal((n, dim))
    return max_norm * rng.uniform(size=(n, 1)) * v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
