"""Prototypical-network episodes in the Poincare ball, and the
distance-to-origin uncertainty statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .klein import hyp_ave
from .poincare import check_curvature, check_in_ball, dist, dist_to_origin, expmap0


@dataclass(frozen=True)
class Episode:
    """One N-way K-shot task.

    Support points are grouped by class in ``classes`` order.  Points are
    ball coordinates for the hyperbolic path and raw vectors for the
    Euclidean one.
    """

    support: np.ndarray
    support_labels: np.ndarray
    query: np.ndarray
    query_labels: np.ndarray

    def __post_init__(self):
        counts = {int(k): int(v) for k, v in zip(*np.unique(self.support_labels, return_counts=True))}
        if len(set(counts.values())) > 1:
            raise ValueError("every class needs the same number of support points")
        if not set(np.unique(self.query_labels).tolist()) <= set(counts):
            raise ValueError("query labels must appear in the support set")

    @property
    def classes(self):
        return np.unique(self.support_labels)

    @property
    def n_way(self):
        return self.classes.size

    @property
    def k_shot(self):
        return self.support_labels.size // self.n_way


@dataclass(frozen=True)
class Classification:
    classes: np.ndarray
    predictions: np.ndarray
    probabilities: np.ndarray
    accuracy: float


def embed(features, c, scale=1.0):
    """Map raw vectors into the ball with the exponential map at the origin."""
    return expmap0(scale * np.asarray(features, dtype=np.float64), c)


def sample_episode(features, labels, n_way, k_shot, n_query, rng):
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if n_way > classes.size:
        raise ValueError(f"{n_way}-way episodes need {n_way} classes, data has {classes.size}")
    chosen = np.sort(rng.choice(classes, size=n_way, replace=False))
    s_idx, q_idx = [], []
    for k in chosen:
        members = np.flatnonzero(labels == k)
        if members.size < k_shot + n_query:
            raise ValueError(f"class {k} has {members.size} points, needs {k_shot + n_query}")
        pick = rng.choice(members, size=k_shot + n_query, replace=False)
        s_idx.append(pick[:k_shot])
        q_idx.append(pick[k_shot:])
    s_idx = np.concatenate(s_idx)
    q_idx = np.concatenate(q_idx)
    return Episode(features[s_idx], labels[s_idx], features[q_idx], labels[q_idx])


def prototypes(episode, c):
    """Einstein-midpoint prototype of each class, as a ``label -> point`` dict."""
    return {
        int(k): hyp_ave(episode.support[episode.support_labels == k], c)
        for k in episode.classes
    }


def _result(classes, scores, query_labels):
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    pred = classes[np.argmax(scores, axis=1)]
    acc = float(np.mean(pred == query_labels)) if query_labels.size else float("nan")
    return Classification(classes, pred, probs, acc)


def classify(episode, c):
    """Nearest-prototype classification under the ball distance.

    Class probabilities are the softmax of negative distances.
    """
    c = check_curvature(c)
    protos = prototypes(episode, c)
    classes = episode.classes
    P = np.stack([protos[int(k)] for k in classes])
    q = check_in_ball(episode.query, c)
    d = dist(q[:, None, :], P[None, :, :], c)
    return _result(classes, -d, episode.query_labels)


def euclidean_classify(episode):
    """Baseline ProtoNet: mean prototypes, negative squared Euclidean scores."""
    classes = episode.classes
    P = np.stack([episode.support[episode.support_labels == k].mean(axis=0) for k in classes])
    d2 = np.sum((episode.query[:, None, :] - P[None, :, :]) ** 2, axis=-1)
    return _result(classes, -d2, episode.query_labels)


@dataclass(frozen=True)
class EpisodeEvaluation:
    accuracies: np.ndarray
    mean: float
    ci95: float
    predictions: list


def evaluate_episodes(features, labels, n_way=5, k_shot=5, n_query=15, episodes=600,
                      c=1.0, seed=0, euclidean=False, scale=1.0):
    """Accuracy over seeded random episodes.

    Both paths draw the same episodes for the same seed; the hyperbolic path
    embeds each episode's raw vectors with :func:`embed`.  The interval is
    ``1.96 * std / sqrt(episodes)``.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if episodes < 1:
        raise ValueError("need at least one episode")
    if not euclidean:
        c = check_curvature(c)
    rng = np.random.default_rng(seed)
    accs, preds = [], []
    for _ in range(episodes):
        ep = sample_episode(features, labels, n_way, k_shot, n_query, rng)
        if euclidean:
            res = euclidean_classify(ep)
        else:
            ball = Episode(embed(ep.support, c, scale), ep.support_labels,
                           embed(ep.query, c, scale), ep.query_labels)
            res = classify(ball, c)
        accs.append(res.accuracy)
        preds.append(res.predictions)
    accs = np.array(accs)
    return EpisodeEvaluation(accs, float(accs.mean()), float(1.96 * accs.std() / np.sqrt(episodes)), preds)


@dataclass(frozen=True)
class UncertaintyProfile:
    distances_to_origin: np.ndarray
    source: str = ""


def distance_to_origin_profile(points, c, source=""):
    return UncertaintyProfile(np.atleast_1d(dist_to_origin(points, c)), source)


def ks_statistic(sample_a, sample_b):
    """Two-sample Kolmogorov-Smirnov distance ``sup |F_a - F_b|``."""
    a = np.sort(np.asarray(sample_a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(sample_b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("KS statistic needs two non-empty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def p_max_profile(prob_vectors, atol=1e-9):
    """Largest class probability of each row."""
    p = np.atleast_2d(np.asarray(prob_vectors, dtype=np.float64))
    if p.ndim != 2 or p.shape[1] == 0:
        raise ValueError("probability vectors must form a non-empty (n, K) array")
    if np.any(p < 0) or not np.all(np.isfinite(p)) or np.any(np.abs(p.sum(axis=1) - 1.0) > atol):
        raise ValueError("malformed probability vector: entries must be >= 0 and sum to 1")
    return p.max(axis=1)
