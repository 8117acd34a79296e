"""Hyperbolic network layers: Mobius matrix-vector product, linear layer,
concatenation and multiclass logistic regression (MLR), plus a projected
gradient-descent trainer for the MLR layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, DomainError, TrainingDivergedError
from .poincare import (
    ATANH_CLAMP,
    _as_array,
    _mobius_add,
    check_curvature,
    check_in_ball,
    mobius_add,
    norm,
    project_to_ball,
    sqnorm,
)

#: Below this input norm the Mobius product is evaluated by its linear limit.
SERIES_GUARD = 1e-8


def mobius_matvec(M, x, c):
    """Mobius matrix-vector product ``M (x)_c x``.

    ``x`` may be a batch ``(..., D)``; ``M`` has shape ``(K, D)``.  Returns 0
    where ``Mx = 0``.
    """
    c = check_curvature(c)
    M = _as_array(M)
    x = check_in_ball(x, c)
    if M.ndim != 2 or M.shape[1] != x.shape[-1]:
        raise DimensionMismatchError(
            f"matrix of shape {M.shape} cannot act on vectors of dimension {x.shape[-1]}"
        )
    sc = np.sqrt(c)
    mx = x @ M.T
    xn = norm(x, keepdims=True)
    mxn = norm(mx, keepdims=True)
    small = xn < SERIES_GUARD
    zero = mxn == 0
    safe_xn = np.where(small, 1.0, xn)
    safe_mxn = np.where(zero, 1.0, mxn)
    ratio = mxn / safe_xn
    s = np.minimum(sc * safe_xn, ATANH_CLAMP)
    full = np.tanh(ratio * np.arctanh(s)) * mx / (safe_mxn * sc)
    out = np.where(small, mx, full)
    out = np.where(zero, 0.0, out)
    return project_to_ball(out, c)


@dataclass(frozen=True)
class MobiusLinear:
    """Hyperbolic linear layer ``x -> (M (x)_c x) (+)_c b``."""

    M: np.ndarray
    b: np.ndarray
    c: float

    def __post_init__(self):
        c = check_curvature(self.c)
        M = _as_array(self.M)
        b = check_in_ball(self.b, c)
        if M.ndim != 2 or b.shape != (M.shape[0],):
            raise DimensionMismatchError("bias must have one entry per output row of M")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    def __call__(self, x):
        return mobius_linear(self, x)


def mobius_linear(layer, x):
    return mobius_add(mobius_matvec(layer.M, x, layer.c), layer.b, layer.c)


def mobius_concat(x, y, M1, M2, c):
    """Hyperbolic concatenation ``(M1 (x) x) (+)_c (M2 (x) y)``."""
    M1 = _as_array(M1)
    M2 = _as_array(M2)
    if M1.shape[0] != M2.shape[0]:
        raise DimensionMismatchError("M1 and M2 must have the same number of rows")
    return mobius_add(mobius_matvec(M1, x, c), mobius_matvec(M2, y, c), c)


@dataclass(frozen=True)
class MlrModel:
    """Hyperbolic MLR parameters: one offset point ``p_k`` and normal ``a_k`` per class."""

    p: np.ndarray
    a: np.ndarray
    c: float

    def __post_init__(self):
        c = check_curvature(self.c)
        p = check_in_ball(self.p, c)
        a = _as_array(self.a)
        if p.ndim != 2 or p.shape != a.shape:
            raise DimensionMismatchError("p and a must both have shape (K, D)")
        if np.any(norm(a) == 0):
            raise DomainError("every normal vector a_k must be non-zero")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)

    @property
    def n_classes(self):
        return self.p.shape[0]

    @property
    def dim(self):
        return self.p.shape[1]

    def to_dict(self):
        return {
            "c": self.c,
            "K": self.n_classes,
            "D": self.dim,
            "p": self.p.tolist(),
            "a": self.a.tolist(),
        }

    @classmethod
    def from_dict(cls, obj):
        try:
            model = cls(np.array(obj["p"], dtype=float), np.array(obj["a"], dtype=float), obj["c"])
        except KeyError as exc:
            raise ValueError(f"model JSON is missing key {exc.args[0]!r}") from None
        if model.n_classes != obj.get("K", model.n_classes) or model.dim != obj.get("D", model.dim):
            raise ValueError("model JSON K/D do not match the parameter arrays")
        return model

    def dumps(self):
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


def init_mlr(n_classes, dim, c, seed=0, scale=0.01):
    rng = np.random.default_rng(seed)
    return MlrModel(np.zeros((n_classes, dim)), scale * rng.standard_normal((n_classes, dim)), c)


def mlr_logits(model, x):
    """MLR logits, one per class, for points ``x`` of shape ``(..., D)``."""
    c = model.c
    x = check_in_ball(x, c)
    if x.shape[-1] != model.dim:
        raise DimensionMismatchError(f"model dimension {model.dim}, points {x.shape[-1]}")
    sc = np.sqrt(c)
    z = _mobius_add(-model.p, x[..., None, :], c)
    an = norm(model.a)
    za = np.sum(z * model.a, axis=-1)
    lam = 2.0 / (1.0 - c * sqnorm(model.p))
    arg = 2.0 * sc * za / ((1.0 - c * sqnorm(z)) * an)
    return lam * an / sc * np.arcsinh(arg)


def softmax(logits, axis=-1):
    z = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def mlr_probabilities(model, x):
    return softmax(mlr_logits(model, x))


def mlr_predict(model, x):
    return np.argmax(mlr_logits(model, x), axis=-1)


@dataclass(frozen=True)
class MlrGrad:
    p: np.ndarray
    a: np.ndarray


def _check_batch(model, points, labels):
    x = check_in_ball(points, model.c)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("batch must be a non-empty (B, D) array")
    if y.shape != (x.shape[0],) or not np.issubdtype(y.dtype, np.integer):
        raise ValueError("labels must be one integer per point")
    if np.any(y < 0) or np.any(y >= model.n_classes):
        raise ValueError(f"labels must lie in [0, {model.n_classes})")
    if x.shape[1] != model.dim:
        raise DimensionMismatchError(f"model dimension {model.dim}, points {x.shape[1]}")
    return x, y


def mlr_loss(model, points, labels):
    x, y = _check_batch(model, points, labels)
    logits = mlr_logits(model, x)
    m = np.max(logits, axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.sum(np.exp(logits - m), axis=1))
    return float(np.mean(lse - logits[np.arange(len(y)), y]))


def mlr_loss_and_grad(model, points, labels):
    """Mean cross-entropy of the MLR layer and its gradient.

    ``p_k`` and ``a_k`` are treated as free Euclidean parameters.  The
    gradient is derived by hand through the Mobius addition ``-p_k (+) x``.
    """
    x, y = _check_batch(model, points, labels)
    c = model.c
    sc = np.sqrt(c)
    B = x.shape[0]
    P = model.p[None, :, :]
    A = model.a[None, :, :]
    X = x[:, None, :]

    px = np.sum(P * X, axis=-1)  # (B, K)
    x2 = sqnorm(X)  # (B, 1)
    p2 = sqnorm(P)  # (1, K)
    alpha = 1.0 - 2.0 * c * px + c * x2
    beta = 1.0 - c * p2
    den = 1.0 - 2.0 * c * px + c * c * p2 * x2
    Z = (-alpha[..., None] * P + beta[..., None] * X) / den[..., None]

    an = norm(A)  # (1, K)
    w = np.sum(Z * A, axis=-1)
    omq = 1.0 - c * sqnorm(Z)
    u = 2.0 * sc * w / (omq * an)
    ash = np.arcsinh(u)
    logits = 2.0 * an * ash / (beta * sc)

    m = np.max(logits, axis=1, keepdims=True)
    ex = np.exp(logits - m)
    lse = m[:, 0] + np.log(np.sum(ex, axis=1))
    loss = float(np.mean(lse - logits[np.arange(B), y]))
    G = ex / np.sum(ex, axis=1, keepdims=True)
    G[np.arange(B), y] -= 1.0
    G /= B

    root = np.sqrt(1.0 + u * u)
    # d logit / d a
    dA = (2.0 / (beta * sc))[..., None] * (
        ash[..., None] * A / an[..., None]
        + (2.0 * sc / (root * omq))[..., None] * (Z - (w / an**2)[..., None] * A)
    )
    grad_a = np.sum(G[..., None] * dA, axis=0)

    # vector-Jacobian product through z = -p (+) x
    dl_du = 2.0 * an / (beta * sc * root)
    du_dz = (2.0 * sc / an)[..., None] * (
        A / omq[..., None] + (2.0 * c * w / omq**2)[..., None] * Z
    )
    g = (G * dl_du)[..., None] * du_dz
    gp = np.sum(g * P, axis=-1)
    gx = np.sum(g * X, axis=-1)
    gz = np.sum(g * Z, axis=-1)
    dnum = 2.0 * c * gp[..., None] * X - alpha[..., None] * g - 2.0 * c * gx[..., None] * P
    dden = -2.0 * c * X + 2.0 * c * c * x2[..., None] * P
    dp_z = (dnum - gz[..., None] * dden) / den[..., None]
    dp_beta = (G * 2.0 * c * logits / beta)[..., None] * P
    grad_p = np.sum(dp_z + dp_beta, axis=0)
    return loss, MlrGrad(grad_p, grad_a)


def numerical_gradient(f, theta, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at array ``theta``."""
    theta = np.array(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    flat = theta.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(theta)
        flat[i] = orig - h
        fm = f(theta)
        flat[i] = orig
        g[i] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic, numeric):
    """``max|a - n| / max(max|a|, max|n|)``; 0 when both vanish."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric)) / scale)


def mlr_gradient_check(model, points, labels, h=1e-5):
    """Relative errors ``(p, a)`` between analytic and finite-difference gradients."""
    _, grad = mlr_loss_and_grad(model, points, labels)
    num_p = numerical_gradient(lambda p: mlr_loss(MlrModel(p, model.a, model.c), points, labels), model.p, h)
    num_a = numerical_gradient(lambda a: mlr_loss(MlrModel(model.p, a, model.c), points, labels), model.a, h)
    return relative_error(grad.p, num_p), relative_error(grad.a, num_a)


@dataclass
class TrainResult:
    model: MlrModel
    losses: np.ndarray
    initial: MlrModel
    smoothed: np.ndarray = field(init=False)

    def __post_init__(self):
        # running minimum: a monotone view of the raw trace
        self.smoothed = np.minimum.accumulate(self.losses) if self.losses.size else self.losses.copy()


def mlr_train(points, labels, n_classes, c, steps=2000, lr=0.1, seed=0, init_scale=0.01):
    """Fit an MLR layer by projected gradient descent.

    ``p_k`` start at the origin and ``a_k`` at ``init_scale`` times a standard
    normal draw from ``seed``.  After every step ``p_k`` is projected back into
    the ball.  ``losses[t]`` is the loss before update ``t``.

    Raises
    ------
    TrainingDivergedError
        If the loss becomes non-finite.
    """
    if not lr > 0:
        raise ValueError("learning rate must be positive")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    x = check_in_ball(points, c)
    y = np.asarray(labels)
    init = init_mlr(n_classes, x.shape[1], c, seed=seed, scale=init_scale)
    model = init
    losses = np.empty(steps)
    # overflow is detected below and reported as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(steps):
            loss, grad = mlr_loss_and_grad(model, x, y)
            if not np.isfinite(loss) or not (np.all(np.isfinite(grad.p)) and np.all(np.isfinite(grad.a))):
                raise TrainingDivergedError(t, loss)
            losses[t] = loss
            p = project_to_ball(model.p - lr * grad.p, model.c)
            a = model.a - lr * grad.a
            model = MlrModel(p, a, model.c)
    return TrainResult(model, losses, init)


def accuracy(model, points, labels):
    return float(np.mean(mlr_predict(model, points) == np.asarray(labels)))
