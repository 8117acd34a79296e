"""Quick property checks run by ``hyperball selftest``."""

from __future__ import annotations

import math

import numpy as np

from . import delta, fewshot, klein, layers, poincare


def _ball_points(rng, n, dim, c, frac=0.7):
    v = rng.standard_normal((n, dim))
    r = frac * rng.uniform(size=(n, 1)) ** (1.0 / dim) / math.sqrt(c)
    return r * v / np.linalg.norm(v, axis=1, keepdims=True)


def _identity(rng):
    c = 0.05
    x = _ball_points(rng, 50, 4, c)
    zero = np.zeros_like(x)
    return (np.array_equal(poincare.mobius_add(zero, x, c), x)
            and np.array_equal(poincare.mobius_add(x, zero, c), x))


def _left_inverse(rng):
    return all(
        np.max(poincare.norm(poincare.mobius_add(-x, x, c))) < 1e-12
        for c in (1.0, 0.05)
        for x in [_ball_points(rng, 100, 3, c)]
    )


def _exp_log(rng):
    c = 1.0
    x = _ball_points(rng, 100, 3, c, frac=0.5)
    v = rng.standard_normal((100, 3))
    v *= 2.0 * rng.uniform(size=(100, 1)) / np.linalg.norm(v, axis=1, keepdims=True)
    back = poincare.log_map(x, poincare.exp_map(x, v, c), c)
    return np.max(np.abs(back - v)) < 1e-9


def _dist_forms(rng):
    x, y = _ball_points(rng, 2, 3, 1.0)
    d = float(poincare.dist(x, y, 1.0))
    u = poincare.mobius_add(-x, y, 1.0, clip=False)
    return abs(d - 2 * math.atanh(float(poincare.norm(u)))) < 1e-10


def _klein_roundtrip(rng):
    c = 0.05
    x = _ball_points(rng, 100, 3, c)
    return np.max(np.abs(klein.klein_to_poincare(klein.poincare_to_klein(x, c), c) - x)) < 1e-12


def _hyp_ave_symmetry(rng):
    x = _ball_points(rng, 1, 3, 1.0)[0]
    return np.max(np.abs(klein.hyp_ave(np.stack([x, -x]), 1.0))) < 1e-12


def _brute_force(rng):
    for _ in range(5):
        n = int(rng.integers(3, 11))
        m = rng.uniform(0, 1, (n, n))
        d = m + m.T
        np.fill_diagonal(d, 0)
        if delta.delta_from_matrix(d) != delta.delta_brute_force(d):
            return False
    return True


def _tree_zero(rng):
    from .synthetic import random_tree_distances

    return delta.delta_from_matrix(random_tree_distances(10, rng)) == 0.0


def _curvature(rng):
    return delta.estimate_curvature(0.144) == 1.0 and abs(delta.estimate_curvature(0.25) - 0.331776) < 1e-12


def _matvec_identity(rng):
    x = _ball_points(rng, 20, 3, 1.0)
    return np.max(np.abs(layers.mobius_matvec(np.eye(3), x, 1.0) - x)) < 1e-12


def _ks(rng):
    a = rng.standard_normal(30)
    return fewshot.ks_statistic(a, a) == 0.0 and fewshot.ks_statistic(a, a + 100.0) == 1.0


CHECKS = [
    ("mobius identity", _identity),
    ("mobius left inverse", _left_inverse),
    ("exp/log roundtrip", _exp_log),
    ("distance arctanh form", _dist_forms),
    ("klein roundtrip", _klein_roundtrip),
    ("einstein midpoint symmetry", _hyp_ave_symmetry),
    ("delta matrix vs brute force", _brute_force),
    ("tree delta zero", _tree_zero),
    ("curvature estimate", _curvature),
    ("mobius matvec identity", _matvec_identity),
    ("ks statistic bounds", _ks),
]


def run_selftest(seed=0):
    """Run every check; returns a list of ``(name, passed)``."""
    results = []
    for name, check in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            ok = bool(check(rng))
        except Exception:  # a crashing check is a failed check
            ok = False
        results.append((name, ok))
    return results
