import math

import mpmath as mp
import numpy as np
import pytest

from hyperball.delta import sphere_distances
from hyperball.synthetic import generate_synthetic


def test_tree_two_nodes():
    d = generate_synthetic("tree", n_points=2, seed=0).distances
    np.testing.assert_array_equal(d, [[0, 1], [1, 0]])


def test_tree_is_tree_metric():
    d = generate_synthetic("tree", n_points=30, seed=1).distances
    assert np.all(d == np.round(d))
    # a tree on n nodes has n - 1 unit-distance pairs
    assert np.sum(d == 1) // 2 == 29


def test_sphere_antipodes():
    x = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    assert sphere_distances(x)[0, 1] == pytest.approx(math.pi, rel=1e-15)


def test_sphere_samples_on_surface():
    s = generate_synthetic("sphere", n_points=500, seed=0)
    np.testing.assert_allclose(np.linalg.norm(s.features, axis=1), 1.0, rtol=1e-15)
    h = generate_synthetic("hemisphere", n_points=500, seed=0)
    assert np.all(h.features[:, 2] >= 0)
    assert s.metric == h.metric == "sphere"


def test_disk_clipped_diameter():
    mp.mp.dps = 50
    r = 1 - 1e-5
    s = generate_synthetic("poincare_disk", n_points=5, seed=0)
    assert np.all(np.linalg.norm(s.features, axis=1) <= r)
    from hyperball.delta import poincare_distances

    d = poincare_distances(np.array([[r, 0.0], [-r, 0.0], [0.0, 0.0]]))
    R = mp.mpf(1) - mp.mpf("1e-5")
    expected = mp.acosh(1 + 2 * (2 * R) ** 2 / (1 - R**2) ** 2)
    assert d[0, 1] == pytest.approx(float(expected), rel=1e-10)
    assert d[0, 2] == pytest.approx(float(2 * mp.atanh(R)), rel=1e-10)
    assert float(expected) == pytest.approx(24.412, abs=1e-3)


def test_blobs():
    s = generate_synthetic("blobs", n_points=40, seed=0, n_classes=3, dim=4, separation=6.0, sigma=0.5)
    assert s.features.shape == (120, 4)
    assert np.array_equal(np.bincount(s.labels), [40, 40, 40])
    means = np.stack([s.features[s.labels == k].mean(0) for k in range(3)])
    gap = np.linalg.norm(means[0] - means[1])
    assert gap == pytest.approx(3.0, abs=0.5)


def test_blobs_explicit_centers():
    s = generate_synthetic("blobs", n_points=10, seed=0, n_classes=2, dim=2, sigma=0.3,
                           centers=[[2.0, 0.0], [-2.0, 0.0]])
    assert np.all(s.features[s.labels == 0, 0] > 0)


@pytest.mark.parametrize("kind", ["sphere", "hemisphere", "poincare_disk", "tree", "blobs"])
def test_deterministic(kind):
    a = generate_synthetic(kind, n_points=20, seed=5)
    b = generate_synthetic(kind, n_points=20, seed=5)
    np.testing.assert_array_equal(a.data, b.data)


def test_invalid():
    with pytest.raises(ValueError):
        generate_synthetic("cube")
    with pytest.raises(ValueError):
        generate_synthetic("sphere", n_points=0)
    with pytest.raises(ValueError):
        generate_synthetic("tree", n_points=5, clip=0.1)
    with pytest.raises(ValueError):
        generate_synthetic("blobs", n_points=5, n_classes=4, dim=2)
