"""Gromov delta-hyperbolicity of finite metric spaces.

The delta of a batch is computed for a fixed base point ``w`` as the largest
entry of ``(A (x) A) - A``, where ``A`` holds the Gromov products
``(i, j)_w`` and ``(x)`` is the max-min matrix product.  That equals the
smallest ``delta`` for which ``(x, z)_w >= min((x, y)_w, (y, z)_w) - delta``
holds for every triple, which :func:`delta_brute_force` checks directly.

Relative delta ``2 delta / diam`` is scale invariant and lies in ``[0, 1]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numba
import numpy as np
from scipy.spatial.distance import pdist, squareform

from .poincare import check_curvature

#: Effective relative delta of the unit Poincare disk clipped at norm 1 - 1e-5.
EFFECTIVE_DELTA_REL = 0.144
#: Four-point delta of the hyperbolic plane under the thin-triangle convention.
POINCARE_DELTA = math.log(1.0 + math.sqrt(2.0))
BRUTE_FORCE_MAX_N = 16


def as_distance_matrix(d, rtol=1e-9):
    """Validate a square, finite, non-negative, symmetric, zero-diagonal matrix."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise ValueError("distance matrix has non-finite entries")
    if np.any(d < 0):
        raise ValueError("distance matrix has negative entries")
    if np.any(np.diag(d) != 0):
        raise ValueError("distance matrix diagonal must be zero")
    scale = max(float(np.max(d)), 1.0) if d.size else 1.0
    if not np.allclose(d, d.T, rtol=0, atol=rtol * scale):
        raise ValueError("distance matrix is not symmetric")
    return d


def gromov_product_matrix(d, base=0):
    """``A[i, j] = (d[base, i] + d[base, j] - d[i, j]) / 2``."""
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[0]
    if not 0 <= base < n:
        raise IndexError(f"base point {base} out of range for {n} points")
    row = d[base]
    return 0.5 * (row[:, None] + row[None, :] - d)


@numba.njit(cache=True, fastmath=True)
def _maxmin_kernel(A, B):
    n, m = A.shape
    p = B.shape[1]
    C = np.empty((n, p))
    for i in range(n):
        row = C[i]
        a0 = A[i, 0]
        B0 = B[0]
        for j in range(p):
            row[j] = min(a0, B0[j])
        for k in range(1, m):
            a = A[i, k]
            Bk = B[k]
            for j in range(p):
                row[j] = max(row[j], min(a, Bk[j]))
    return C


def minmax_product(A, B):
    """Max-min product ``C[i, j] = max_k min(A[i, k], B[k, j])``."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ValueError(f"cannot form max-min product of shapes {A.shape} and {B.shape}")
    if A.shape[1] == 0:
        raise ValueError("inner dimension must be positive")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise ValueError("max-min product requires finite entries")
    return _maxmin_kernel(A, B)


def delta_from_matrix(d, base=0):
    """Gromov delta of a distance matrix for base point ``base``."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if d.shape[0] < 3:
        raise ValueError("delta needs at least 3 points")
    A = gromov_product_matrix(d, base)
    return float(np.max(minmax_product(A, A) - A))


def delta_brute_force(d, base=0):
    """Delta by enumerating every triple; only for ``N <= 16``."""
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_N} points, got {n}")
    if not 0 <= base < n:
        raise IndexError(f"base point {base} out of range for {n} points")
    w = base

    def gp(i, j):
        return 0.5 * (d[w, i] + d[w, j] - d[i, j])

    best = -math.inf
    for x in range(n):
        for y in range(n):
            xy = gp(x, y)
            for z in range(n):
                slack = min(xy, gp(y, z)) - gp(x, z)
                if slack > best:
                    best = slack
    return float(best)


def four_point_violation(d, delta, base=0):
    """Largest amount by which any triple violates the condition for ``delta``."""
    A = gromov_product_matrix(d, base)
    lhs = np.minimum(A[:, :, None], A[None, :, :])  # [x, y, z] -> min((x,y),(y,z))
    return float(np.max(lhs - A[:, None, :] - delta))


def delta_over_bases(d, bases):
    """Delta for several base points, to inspect base-point dependence."""
    return [delta_from_matrix(d, b) for b in bases]


def estimate_curvature(delta_rel, effective=None):
    """Ball curvature ``(0.144 / delta_rel)^2`` suited to a dataset.

    Returns ``inf`` for ``delta_rel == 0``: a tree-like dataset puts no bound
    on the curvature.
    """
    if effective is None:
        effective = EFFECTIVE_DELTA_REL
    delta_rel = float(delta_rel)
    if not np.isfinite(delta_rel) or delta_rel < 0:
        raise ValueError(f"delta_rel must be finite and non-negative, got {delta_rel!r}")
    if delta_rel == 0:
        return math.inf
    return (effective / delta_rel) ** 2


def effective_delta_rel(clip=1e-5, delta=POINCARE_DELTA):
    """Relative delta of the clipped unit disk, ``2 delta / R``.

    ``R = 2 artanh(1 - clip)`` is the hyperbolic distance from the centre to
    the clipping circle (about 12.206 for ``clip = 1e-5``).  Dividing by this
    radius, not by the largest pairwise distance ``2R``, is what gives 0.144.
    """
    radius = 2.0 * math.atanh(1.0 - clip)
    return 2.0 * delta / radius


# ---------------------------------------------------------------------------
# batched estimation


def euclidean_distances(x):
    return squareform(pdist(np.asarray(x, dtype=np.float64)))


def sphere_distances(x):
    """Arc-length distances between unit vectors."""
    chord = pdist(np.asarray(x, dtype=np.float64))
    return squareform(2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0)))


def poincare_distances(x, c=1.0):
    """Pairwise hyperbolic distances of ball points."""
    c = check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    sq = pdist(x, "sqeuclidean")
    f = 1.0 - c * np.sum(x * x, axis=1)
    if np.any(f <= 0):
        raise ValueError("points outside the Poincare ball")
    i, j = np.triu_indices(x.shape[0], 1)
    t = 2.0 * c * sq / (f[i] * f[j])
    return squareform(np.log1p(t + np.sqrt(t * (t + 2.0))) / np.sqrt(c))


METRICS = {
    "euclidean": euclidean_distances,
    "sphere": sphere_distances,
    "poincare": poincare_distances,
}


@dataclass(frozen=True)
class BatchDelta:
    delta: float
    diameter: float
    delta_rel: float
    degenerate: bool = False


@dataclass
class GromovReport:
    per_batch: list
    batch_size: int
    seed: int
    metric: str
    mean: float = field(init=False)
    std: float = field(init=False)
    delta: float = field(init=False)
    diameter: float = field(init=False)
    delta_rel: float = field(init=False)
    c_estimate: float = field(init=False)
    degenerate_batches: int = field(init=False)

    def __post_init__(self):
        rels = np.array([b.delta_rel for b in self.per_batch])
        self.mean = float(np.mean(rels))
        self.std = float(np.std(rels))
        self.delta = float(np.mean([b.delta for b in self.per_batch]))
        self.diameter = float(np.mean([b.diameter for b in self.per_batch]))
        self.delta_rel = self.mean
        self.c_estimate = estimate_curvature(self.mean)
        self.degenerate_batches = sum(b.degenerate for b in self.per_batch)

    def to_dict(self):
        unbounded = math.isinf(self.c_estimate)
        return {
            "delta": self.delta,
            "diameter": self.diameter,
            "delta_rel": self.delta_rel,
            "mean": self.mean,
            "std": self.std,
            "c_estimate": None if unbounded else self.c_estimate,
            "curvature_unbounded": unbounded,
            "batch_size": self.batch_size,
            "repeats": len(self.per_batch),
            "seed": self.seed,
            "metric": self.metric,
            "base_point": "row 0 of each batch",
            "degenerate_batches": self.degenerate_batches,
            "per_batch": [asdict(b) for b in self.per_batch],
        }


def batch_delta(d):
    """``BatchDelta`` for one distance matrix, base point 0."""
    delta = delta_from_matrix(d, 0)
    diam = float(np.max(d))
    if diam == 0:
        return BatchDelta(delta, 0.0, 0.0, degenerate=True)
    return BatchDelta(delta, diam, 2.0 * delta / diam)


def delta_rel_batched(data, batch_size=1000, repeats=10, seed=0, metric="euclidean", c=1.0):
    """Mean and spread of relative delta over random subsamples.

    Parameters
    ----------
    data : array_like
        ``(N, D)`` features, or an ``(N, N)`` distance matrix when
        ``metric="precomputed"``.
    batch_size : int
        Points per subsample, drawn without replacement.
    repeats : int
        Number of independent subsamples.
    seed : int
    metric : {"euclidean", "sphere", "poincare", "precomputed"} or callable
        How to turn a batch of features into distances.  ``"poincare"`` uses
        curvature ``c``.

    Returns
    -------
    GromovReport
    """
    data = np.asarray(data, dtype=np.float64)
    if metric == "precomputed":
        data = as_distance_matrix(data)
    elif data.ndim != 2:
        raise ValueError("features must be an (N, D) array")
    elif not np.all(np.isfinite(data)):
        raise ValueError("features must be finite")
    n = data.shape[0]
    if batch_size < 3:
        raise ValueError("batch size must be at least 3")
    if n < batch_size:
        raise ValueError(f"dataset has {n} points, fewer than batch size {batch_size}")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")

    if metric == "precomputed":
        def distances(idx):
            return data[np.ix_(idx, idx)]
    elif callable(metric):
        def distances(idx):
            return np.asarray(metric(data[idx]), dtype=np.float64)
    elif metric == "poincare":
        def distances(idx):
            return poincare_distances(data[idx], c)
    elif metric in METRICS:
        def distances(idx):
            return METRICS[metric](data[idx])
    else:
        raise ValueError(f"unknown metric {metric!r}")

    rng = np.random.default_rng(seed)
    batches = []
    for _ in range(repeats):
        idx = rng.choice(n, size=batch_size, replace=False)
        b = batch_delta(distances(idx))
        if b.degenerate:
            warnings.warn("batch with zero diameter; its relative delta is reported as 0")
        batches.append(b)
    name = metric if isinstance(metric, str) else getattr(metric, "__name__", "custom")
    return GromovReport(batches, batch_size, seed, name)
