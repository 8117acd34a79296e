"""Seeded synthetic datasets with known hyperbolicity behaviour."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .delta import poincare_distances, sphere_distances
from .poincare import DELTA_CLIP

KINDS = ("sphere", "hemisphere", "poincare_disk", "tree", "blobs")


@dataclass(frozen=True)
class SyntheticData:
    """Either feature vectors with a named metric, or a distance matrix.

    ``metric`` is ``"precomputed"`` when only ``distances`` is set.
    """

    kind: str
    metric: str
    features: np.ndarray | None = None
    distances: np.ndarray | None = None
    labels: np.ndarray | None = None

    @property
    def data(self):
        return self.distances if self.metric == "precomputed" else self.features

    def distance_matrix(self):
        if self.distances is not None:
            return self.distances
        if self.metric == "sphere":
            return sphere_distances(self.features)
        if self.metric == "poincare":
            return poincare_distances(self.features, 1.0)
        from .delta import euclidean_distances

        return euclidean_distances(self.features)


def _positive_int(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def sample_sphere(n, rng, upper=False):
    x = rng.standard_normal((n, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    if upper:
        x[:, 2] = np.abs(x[:, 2])
    return x


def sample_poincare_disk(n, rng, clip=DELTA_CLIP):
    """Points uniform in Euclidean area on the disk of radius ``1 - clip``."""
    r = (1.0 - clip) * np.sqrt(rng.uniform(size=n))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def random_tree_distances(n, rng):
    """Shortest-path distances of a random recursive tree with unit edges.

    Node ``i > 0`` attaches to a uniformly chosen earlier node.
    """
    if n == 1:
        return np.zeros((1, 1))
    parents = np.array([rng.integers(0, i) for i in range(1, n)])
    children = np.arange(1, n)
    adj = csr_matrix((np.ones(n - 1), (children, parents)), shape=(n, n))
    d = shortest_path(adj, method="D", directed=False, unweighted=True)
    return d


def sample_blobs(n_classes, per_class, dim, rng, separation=8.0, sigma=1.0, centers=None):
    """Isotropic Gaussian clusters.

    Without explicit ``centers`` the centres sit on scaled coordinate axes
    (``dim >= n_classes``), so every pair is exactly ``separation * sigma``
    apart.
    """
    if centers is None:
        if dim < n_classes:
            raise ValueError("blobs need dim >= n_classes when centres are not given")
        centers = np.zeros((n_classes, dim))
        centers[np.arange(n_classes), np.arange(n_classes)] = separation * sigma / np.sqrt(2.0)
    else:
        centers = np.asarray(centers, dtype=np.float64)
        if centers.shape != (n_classes, dim):
            raise ValueError(f"centers must have shape {(n_classes, dim)}")
    labels = np.repeat(np.arange(n_classes), per_class)
    x = centers[labels] + sigma * rng.standard_normal((labels.size, dim))
    return x, labels


def generate_synthetic(kind, n_points=1000, seed=0, **params):
    """Build one of the synthetic datasets.

    Parameters
    ----------
    kind : {"sphere", "hemisphere", "poincare_disk", "tree", "blobs"}
        ``sphere`` and ``hemisphere`` are uniform samples of the unit sphere
        in R^3 (upper half for the latter) under arc-length distance;
        ``poincare_disk`` is the clipped unit disk under hyperbolic distance
        (param ``clip``); ``tree`` is a random tree with unit edges;
        ``blobs`` are labelled Gaussian clusters (params ``n_classes``,
        ``dim``, ``separation``, ``sigma``, ``centers``), ``n_points`` per
        class.
    n_points : int
    seed : int
    """
    rng = np.random.default_rng(seed)
    if kind not in KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {', '.join(KINDS)}")
    allowed = {
        "sphere": set(),
        "hemisphere": set(),
        "poincare_disk": {"clip"},
        "tree": set(),
        "blobs": {"n_classes", "dim", "separation", "sigma", "centers"},
    }[kind]
    extra = set(params) - allowed
    if extra:
        raise ValueError(f"unexpected parameters for {kind}: {sorted(extra)}")
    n = _positive_int("n_points", n_points)

    if kind in ("sphere", "hemisphere"):
        return SyntheticData(kind, "sphere", features=sample_sphere(n, rng, upper=kind == "hemisphere"))
    if kind == "poincare_disk":
        clip = float(params.get("clip", DELTA_CLIP))
        if not 0 < clip < 1:
            raise ValueError("clip must lie in (0, 1)")
        return SyntheticData(kind, "poincare", features=sample_poincare_disk(n, rng, clip))
    if kind == "tree":
        return SyntheticData(kind, "precomputed", distances=random_tree_distances(n, rng))

    n_classes = _positive_int("n_classes", params.get("n_classes", 5))
    dim = _positive_int("dim", params.get("dim", max(n_classes, 2)))
    sigma = float(params.get("sigma", 1.0))
    separation = float(params.get("separation", 8.0))
    if not sigma > 0 or not separation >= 0:
        raise ValueError("sigma must be positive and separation non-negative")
    x, y = sample_blobs(n_classes, n, dim, rng, separation, sigma, params.get("centers"))
    return SyntheticData(kind, "euclidean", features=x, labels=y)
