"""Klein-model coordinates and the Einstein midpoint."""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatchError, DomainError
from .poincare import _as_array, check_curvature, check_in_ball, project_to_ball, sqnorm


def poincare_to_klein(x, c):
    """``x_K = 2 x_D / (1 + c |x_D|^2)``."""
    c = check_curvature(c)
    x = check_in_ball(x, c)
    return 2.0 * x / (1.0 + c * sqnorm(x, keepdims=True))


def klein_to_poincare(k, c):
    """``x_D = x_K / (1 + sqrt(1 - c |x_K|^2))``."""
    c = check_curvature(c)
    k = check_in_ball(k, c)
    return k / (1.0 + np.sqrt(1.0 - c * sqnorm(k, keepdims=True)))


def lorentz_factor(k, c):
    """``gamma = 1 / sqrt(1 - c |k|^2)`` for Klein coordinates ``k``."""
    c = check_curvature(c)
    k = _as_array(k)
    s = 1.0 - c * sqnorm(k)
    if np.any(s <= 0):
        raise DomainError("Lorentz factor undefined on or outside the boundary")
    return 1.0 / np.sqrt(s)


def hyp_ave(points, c, weights=None):
    """Einstein midpoint of Poincare-ball points.

    The points are moved to Klein coordinates, averaged with Lorentz-factor
    weights (optionally multiplied by ``weights``) and moved back.  Sums use
    ``math.fsum`` so the result does not depend on input order.

    Parameters
    ----------
    points : array_like, shape (N, D)
    c : float
    weights : array_like, shape (N,), optional
        Non-negative extra weights; the plain midpoint is ``weights=None``.

    Returns
    -------
    ndarray, shape (D,)
    """
    c = check_curvature(c)
    x = check_in_ball(points, c)
    if x.ndim != 2:
        raise DimensionMismatchError("hyp_ave expects an (N, D) array of points")
    if x.shape[0] == 0:
        raise ValueError("hyp_ave of an empty set of points")
    x2 = c * sqnorm(x)
    k = 2.0 * x / (1.0 + x2)[:, None]
    # 1 - c|k|^2 == ((1 - c|x|^2) / (1 + c|x|^2))^2, so gamma is exact from x
    gamma = (1.0 + x2) / (1.0 - x2)
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != gamma.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite, non-negative and one per point")
        gamma = gamma * w
    total = math.fsum(gamma)
    if total <= 0:
        raise ValueError("weights sum to zero")
    wk = gamma[:, None] * k
    mean_k = np.array([math.fsum(wk[:, j]) for j in range(x.shape[1])]) / total
    return project_to_ball(klein_to_poincare(mean_k, c), c)
