"""Gyrovector primitives on the Poincare ball of curvature ``c``.

The ball is ``{x : c * |x|^2 < 1}``, of radius ``1 / sqrt(c)``.  Every function
works on arrays whose last axis holds the coordinates, so a batch of points is
an ``(..., D)`` array and the curvature is a single scalar shared by the whole
call.  ``PoincarePoint`` wraps a single point together with its curvature for
code that wants the curvature checked on every binary operation.

All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CurvatureMismatchError, DimensionMismatchError, DomainError

#: Relative margin used when clipping points back into the ball.
BALL_EPS = 1e-3
#: Euclidean margin used for the clipped unit disk in hyperbolicity estimates.
DELTA_CLIP = 1e-5
#: Upper clamp for arguments of arctanh.
ATANH_CLAMP = 1.0 - 1e-15


def check_curvature(c, allow_zero=False):
    c = float(c)
    if not np.isfinite(c) or c < 0 or (c == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise DomainError(f"curvature must be finite and {bound}, got {c!r}")
    return c


def _as_array(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        raise DimensionMismatchError("points must have at least one axis")
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite coordinates")
    return x


def _same_dim(x, y):
    if x.shape[-1] != y.shape[-1]:
        raise DimensionMismatchError(
            f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}"
        )


def sqnorm(x, keepdims=False):
    return np.sum(x * x, axis=-1, keepdims=keepdims)


def norm(x, keepdims=False):
    return np.sqrt(sqnorm(x, keepdims=keepdims))


def check_in_ball(x, c):
    """Raise ``DomainError`` unless every point satisfies ``c |x|^2 < 1``."""
    x = _as_array(x)
    if c > 0 and np.any(c * sqnorm(x) >= 1.0):
        raise DomainError("point outside the Poincare ball (c |x|^2 >= 1)")
    return x


def clip_radius(c, eps=BALL_EPS):
    """Largest norm allowed after clipping, ``(1 - eps) / sqrt(c)``."""
    return (1.0 - eps) / np.sqrt(c)


def project_to_ball(raw, c, eps=BALL_EPS):
    """Rescale vectors whose norm exceeds ``(1 - eps)/sqrt(c)`` onto that sphere.

    Vectors already inside the bound are returned unchanged, bit for bit.
    ``c = 0`` is the Euclidean limit and leaves everything unchanged.
    """
    c = check_curvature(c, allow_zero=True)
    raw = _as_array(raw)
    if c == 0:
        return raw.copy()
    bound = clip_radius(c, eps)
    n = norm(raw, keepdims=True)
    over = n > bound
    if not np.any(over):
        return raw.copy()
    scale = np.where(over, bound / np.where(over, n, 1.0), 1.0)
    return np.where(over, raw * scale, raw)


def conformal_factor(x, c):
    """``lambda_x = 2 / (1 - c |x|^2)``."""
    c = check_curvature(c, allow_zero=True)
    x = check_in_ball(x, c)
    return 2.0 / (1.0 - c * sqnorm(x))


def _mobius_add(x, y, c):
    xy = np.sum(x * y, axis=-1, keepdims=True)
    x2 = sqnorm(x, keepdims=True)
    y2 = sqnorm(y, keepdims=True)
    num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
    den = 1.0 + 2.0 * c * xy + c * c * x2 * y2
    return num / den


def mobius_add(x, y, c, clip=True):
    """Mobius addition ``x (+)_c y``.

    Not commutative, but ``|x (+) y| == |y (+) x|``.  ``0`` is a two-sided
    identity and ``-x`` a left inverse.  With ``clip=False`` the raw value is
    returned; distances and log maps use that form because clipping would
    distort points deliberately placed near the boundary.
    """
    c = check_curvature(c, allow_zero=True)
    x = check_in_ball(x, c)
    y = check_in_ball(y, c)
    _same_dim(x, y)
    out = _mobius_add(x, y, c)
    return project_to_ball(out, c) if clip else out


def dist(x, y, c):
    """Geodesic distance ``(2/sqrt(c)) artanh(sqrt(c) |-x (+)_c y|)``.

    Evaluated through the equivalent closed form
    ``arccosh(1 + 2c|x-y|^2 / ((1-c|x|^2)(1-c|y|^2))) / sqrt(c)``, which is
    symmetric in ``x`` and ``y`` to the last bit and keeps full relative
    precision both for nearby points and near the boundary.
    """
    c = check_curvature(c)
    x = check_in_ball(x, c)
    y = check_in_ball(y, c)
    _same_dim(x, y)
    diff2 = sqnorm(x - y)
    t = 2.0 * c * diff2 / ((1.0 - c * sqnorm(x)) * (1.0 - c * sqnorm(y)))
    # arccosh(1 + t) without cancellation for small t
    return np.log1p(t + np.sqrt(t * (t + 2.0))) / np.sqrt(c)


def dist_to_origin(x, c):
    """``(2/sqrt(c)) artanh(sqrt(c) |x|)``."""
    c = check_curvature(c)
    x = check_in_ball(x, c)
    s = np.minimum(np.sqrt(c) * norm(x), ATANH_CLAMP)
    return 2.0 * np.arctanh(s) / np.sqrt(c)


@dataclass(frozen=True)
class EuclideanLimitReport:
    curvatures: np.ndarray
    distances: np.ndarray
    euclidean: float
    errors: np.ndarray
    monotone: bool

    @property
    def final_error(self):
        return float(self.errors[-1])


def dist_euclidean_limit_check(x, y, c_sequence, slack=1e-14):
    """Compare ``dist(x, y, c)`` with ``2 |x - y|`` along a decreasing ``c``.

    ``monotone`` is true when the absolute errors never increase by more than
    ``slack`` from one curvature to the next.
    """
    x = _as_array(x)
    y = _as_array(y)
    cs = np.asarray(c_sequence, dtype=np.float64)
    if cs.ndim != 1 or cs.size == 0 or np.any(cs <= 0) or np.any(np.diff(cs) >= 0):
        raise ValueError("c_sequence must be a non-empty strictly decreasing positive sequence")
    euclid = 2.0 * float(norm(x - y))
    ds = np.array([float(dist(x, y, c)) for c in cs])
    errs = np.abs(ds - euclid)
    monotone = bool(np.all(np.diff(errs) <= slack))
    return EuclideanLimitReport(cs, ds, euclid, errs, monotone)


def exp_map(x, v, c):
    """Exponential map at ``x`` applied to tangent vector ``v``.

    ``v = 0`` returns ``x`` itself.  The result is clipped into the ball.
    """
    c = check_curvature(c)
    x = check_in_ball(x, c)
    v = _as_array(v)
    _same_dim(x, v)
    x, v = np.broadcast_arrays(x, v)
    sc = np.sqrt(c)
    vn = norm(v, keepdims=True)
    nz = vn > 0
    safe = np.where(nz, vn, 1.0)
    lam = 2.0 / (1.0 - c * sqnorm(x, keepdims=True))
    second = np.tanh(sc * lam * safe / 2.0) * v / (sc * safe)
    out = np.where(nz, _mobius_add(x, second, c), x)
    return project_to_ball(out, c)


def log_map(x, y, c):
    """Logarithmic map at ``x``; inverse of :func:`exp_map`.

    Returns the zero vector where ``x == y``.
    """
    c = check_curvature(c)
    x = check_in_ball(x, c)
    y = check_in_ball(y, c)
    _same_dim(x, y)
    sc = np.sqrt(c)
    u = _mobius_add(-x, y, c)
    un = norm(u, keepdims=True)
    nz = un > 0
    safe = np.where(nz, un, 1.0)
    lam = 2.0 / (1.0 - c * sqnorm(x, keepdims=True))
    s = np.minimum(sc * safe, ATANH_CLAMP)
    out = 2.0 / (sc * lam) * np.arctanh(s) * u / safe
    return np.where(nz, out, 0.0)


def expmap0(v, c):
    return exp_map(np.zeros(np.shape(v)[-1]), v, c)


def logmap0(y, c):
    return log_map(np.zeros(np.shape(y)[-1]), y, c)


@dataclass(frozen=True, eq=False)
class PoincarePoint:
    """A single point of the curvature-``c`` ball.

    Binary operations refuse to mix points of different curvature.
    """

    coords: np.ndarray
    c: float

    def __post_init__(self):
        c = check_curvature(self.c)
        coords = check_in_ball(self.coords, c)
        if coords.ndim != 1:
            raise DimensionMismatchError("PoincarePoint holds a single 1-D vector")
        coords = coords.copy()
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "c", c)

    @classmethod
    def origin(cls, dim, c):
        return cls(np.zeros(dim), c)

    @property
    def dim(self):
        return self.coords.shape[0]

    def _check(self, other):
        if not isinstance(other, PoincarePoint):
            raise TypeError(f"expected PoincarePoint, got {type(other).__name__}")
        if other.c != self.c:
            raise CurvatureMismatchError(f"curvature mismatch: {self.c} vs {other.c}")
        _same_dim(self.coords, other.coords)

    def __add__(self, other):
        self._check(other)
        return PoincarePoint(mobius_add(self.coords, other.coords, self.c), self.c)

    def __neg__(self):
        return PoincarePoint(-self.coords, self.c)

    def __eq__(self, other):
        return (
            isinstance(other, PoincarePoint)
            and other.c == self.c
            and np.array_equal(other.coords, self.coords)
        )

    __hash__ = None

    def dist(self, other):
        self._check(other)
        return float(dist(self.coords, other.coords, self.c))

    def conformal_factor(self):
        return float(conformal_factor(self.coords, self.c))

    def exp(self, v):
        return PoincarePoint(exp_map(self.coords, v, self.c), self.c)

    def log(self, other):
        self._check(other)
        return log_map(self.coords, other.coords, self.c)
