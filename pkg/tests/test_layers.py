import math

import mpmath as mp
import numpy as np
import pytest

from hyperball.errors import DimensionMismatchError, DomainError, TrainingDivergedError
from hyperball.layers import (
    MlrModel,
    MobiusLinear,
    accuracy,
    init_mlr,
    mlr_gradient_check,
    mlr_logits,
    mlr_loss,
    mlr_loss_and_grad,
    mlr_probabilities,
    mlr_train,
    mobius_concat,
    mobius_linear,
    mobius_matvec,
    numerical_gradient,
    relative_error,
)
from hyperball.poincare import clip_radius, expmap0, mobius_add, norm, project_to_ball

from conftest import ball_points

CURVATURES = [1.0, 0.05, 0.001]


class TestMobiusMatvec:
    @pytest.mark.parametrize("c", CURVATURES)
    def test_identity(self, rng, c):
        x = ball_points(rng, 1000, 4, c, frac=0.99)
        assert np.max(np.abs(mobius_matvec(np.eye(4), x, c) - x)) < 1e-12

    def test_zero_input(self, rng):
        M = rng.standard_normal((3, 4))
        assert np.array_equal(mobius_matvec(M, np.zeros(4), 1.0), np.zeros(3))

    def test_zero_image(self):
        M = np.array([[1.0, -1.0]])
        assert np.array_equal(mobius_matvec(M, np.array([0.2, 0.2]), 1.0), [0.0])

    def test_doubling(self):
        out = mobius_matvec(2 * np.eye(2), np.array([0.3, 0.0]), 1.0)
        expected = float(mp.tanh(2 * mp.atanh(mp.mpf("0.3"))))
        assert out[0] == pytest.approx(expected, rel=1e-15)
        assert out[1] == 0.0

    def test_tiny_input_series(self, rng):
        M = rng.standard_normal((3, 2))
        x = np.array([1e-12, -3e-13])
        np.testing.assert_allclose(mobius_matvec(M, x, 1.0), M @ x, rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            mobius_matvec(np.eye(3), np.zeros(2), 1.0)

    def test_output_in_ball(self, rng):
        x = ball_points(rng, 500, 3, 1.0, frac=0.999)
        out = mobius_matvec(10 * rng.standard_normal((3, 3)), x, 1.0)
        assert np.all(norm(out) <= clip_radius(1.0) * (1 + 1e-15))


class TestMobiusLinear:
    def test_identity_layer(self, rng):
        x = ball_points(rng, 100, 3, 1.0)
        layer = MobiusLinear(np.eye(3), np.zeros(3), 1.0)
        np.testing.assert_allclose(layer(x), x, atol=1e-12)

    def test_zero_input_gives_bias(self, rng):
        b = ball_points(rng, 1, 3, 1.0)[0]
        layer = MobiusLinear(np.eye(3), b, 1.0)
        np.testing.assert_array_equal(mobius_linear(layer, np.zeros(3)), b)

    def test_euclidean_limit(self, rng):
        for _ in range(100):
            M = rng.standard_normal((3, 4))
            b = rng.standard_normal(3)
            x = rng.standard_normal(4)
            target = M @ x + b
            out = MobiusLinear(M, b, 1e-10)(x)
            assert np.max(np.abs(out - target)) <= 1e-6 * (1 + norm(target))

    def test_bad_bias_shape(self):
        with pytest.raises(DimensionMismatchError):
            MobiusLinear(np.eye(3), np.zeros(2), 1.0)


class TestConcat:
    def test_zero(self, rng):
        M1, M2 = rng.standard_normal((2, 3, 3))
        assert np.array_equal(mobius_concat(np.zeros(3), np.zeros(3), M1, M2, 1.0), np.zeros(3))

    def test_right_zero(self, rng):
        M1 = rng.standard_normal((4, 2))
        M2 = rng.standard_normal((4, 3))
        x = ball_points(rng, 1, 2, 1.0)[0]
        np.testing.assert_array_equal(mobius_concat(x, np.zeros(3), M1, M2, 1.0), mobius_matvec(M1, x, 1.0))

    def test_euclidean_limit(self, rng):
        M1 = rng.standard_normal((4, 2))
        M2 = rng.standard_normal((4, 3))
        x, y = rng.standard_normal(2), rng.standard_normal(3)
        target = M1 @ x + M2 @ y
        out = mobius_concat(x, y, M1, M2, 1e-10)
        np.testing.assert_allclose(out, target, rtol=1e-6, atol=1e-6 * norm(target))

    def test_row_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            mobius_concat(np.zeros(2), np.zeros(2), np.eye(2), np.eye(3)[:, :2], 1.0)


def random_problem(rng, c, K=3, D=4, B=8):
    """Model and batch kept 0.1/sqrt(c) away from the boundary."""
    p = ball_points(rng, K, D, c, frac=0.8)
    a = rng.standard_normal((K, D))
    x = ball_points(rng, B, D, c, frac=0.8)
    y = rng.integers(0, K, B)
    return MlrModel(p, a, c), x, y


class TestMlr:
    def test_zero_normal_rejected(self):
        with pytest.raises(DomainError):
            MlrModel(np.zeros((2, 2)), np.array([[1.0, 0.0], [0.0, 0.0]]), 1.0)

    def test_logit_vanishes_at_offset(self, rng):
        model, _, _ = random_problem(rng, 1.0)
        logits = mlr_logits(model, model.p)
        np.testing.assert_allclose(np.diag(logits), 0.0, atol=1e-12)

    def test_common_scaling_keeps_argmax(self, rng):
        model, x, _ = random_problem(rng, 0.05, B=200)
        scaled = MlrModel(model.p, 3.7 * model.a, model.c)
        np.testing.assert_array_equal(np.argmax(mlr_logits(model, x), 1), np.argmax(mlr_logits(scaled, x), 1))

    def test_probabilities_sum_to_one(self, rng):
        model, x, _ = random_problem(rng, 1.0)
        np.testing.assert_allclose(mlr_probabilities(model, x).sum(axis=1), 1.0, atol=1e-12)

    def test_euclidean_limit_argmax(self, rng):
        c = 1e-8
        K, D = 4, 3
        model = MlrModel(0.5 * rng.standard_normal((K, D)), rng.standard_normal((K, D)), c)
        x = rng.standard_normal((10_000, D))
        hyp = np.argmax(mlr_logits(model, x), axis=1)
        euc = np.argmax(4 * np.einsum("bkd,kd->bk", x[:, None, :] - model.p[None], model.a), axis=1)
        assert np.mean(hyp == euc) >= 0.99

    def test_serialization_roundtrip(self, rng):
        model, _, _ = random_problem(rng, 0.05)
        obj = model.to_dict()
        assert set(obj) == {"c", "K", "D", "p", "a"}
        back = MlrModel.loads(model.dumps())
        np.testing.assert_array_equal(back.p, model.p)
        np.testing.assert_array_equal(back.a, model.a)
        assert back.c == model.c


class TestMlrGradient:
    def test_symmetric_model(self, rng):
        c = 1.0
        a0 = np.array([0.7, -0.2])
        model = MlrModel(np.zeros((2, 2)), np.stack([a0, -a0]), c)
        x = ball_points(rng, 5, 2, c, frac=0.7)
        pts = np.concatenate([x, -x])
        labels = np.array([0] * 5 + [1] * 5)
        _, grad = mlr_loss_and_grad(model, pts, labels)
        np.testing.assert_allclose(grad.a[0], -grad.a[1], atol=1e-14)
        # points on the hyperplane through the origin orthogonal to a0
        ortho = np.array([[0.2, 0.7], [-0.2, -0.7]]) * 0.5
        loss, _ = mlr_loss_and_grad(model, ortho, np.array([0, 1]))
        assert loss == pytest.approx(math.log(2), abs=1e-15)

    def test_correct_class_favoured(self):
        c = 1.0
        p0 = np.array([0.3, 0.1])
        model = MlrModel(np.stack([p0, np.zeros(2)]), np.array([[1.0, 0.0], [0.0, -1.0]]), c)
        assert mlr_logits(model, p0)[1] < 0
        assert mlr_loss(model, p0[None], np.array([0])) < math.log(2)

    @pytest.mark.parametrize("trial", range(20))
    def test_against_finite_differences(self, trial):
        rng = np.random.default_rng(1000 + trial)
        c = CURVATURES[trial % 3]
        model, x, y = random_problem(rng, c)
        err_p, err_a = mlr_gradient_check(model, x, y, h=1e-5)
        assert err_p < 1e-4
        assert err_a < 1e-4

    def test_loss_matches(self, rng):
        model, x, y = random_problem(rng, 0.05)
        loss, _ = mlr_loss_and_grad(model, x, y)
        assert loss == pytest.approx(mlr_loss(model, x, y), rel=1e-14)

    def test_empty_batch(self, rng):
        model, _, _ = random_problem(rng, 1.0)
        with pytest.raises(ValueError):
            mlr_loss_and_grad(model, np.zeros((0, 4)), np.zeros(0, dtype=int))

    def test_bad_labels(self, rng):
        model, x, _ = random_problem(rng, 1.0)
        with pytest.raises(ValueError):
            mlr_loss_and_grad(model, x, np.full(len(x), 3))

    def test_numerical_gradient_helper(self):
        g = numerical_gradient(lambda t: float(np.sum(t**3)), np.array([1.0, -2.0]))
        np.testing.assert_allclose(g, [3.0, 12.0], rtol=1e-9)
        assert relative_error(np.zeros(2), np.zeros(2)) == 0.0


def separable_blobs(rng, c, n=200):
    centers = np.array([[2.0, 0.0], [-2.0, 0.0]])
    y = np.repeat([0, 1], n // 2)
    raw = centers[y] + 0.3 * rng.standard_normal((n, 2))
    return expmap0(raw, c), y


class TestMlrTrain:
    def test_separable_blobs(self, rng):
        c = 0.05
        x, y = separable_blobs(rng, c)
        res = mlr_train(x, y, 2, c, steps=2000, lr=0.1, seed=0)
        assert accuracy(res.model, x, y) >= 0.98
        assert res.losses[-1] < res.losses[0]
        assert np.all(np.diff(res.smoothed) <= 0)

    def test_zero_steps(self, rng):
        x, y = separable_blobs(rng, 1.0)
        res = mlr_train(x, y, 2, 1.0, steps=0, seed=4)
        init = init_mlr(2, 2, 1.0, seed=4)
        np.testing.assert_array_equal(res.model.p, init.p)
        np.testing.assert_array_equal(res.model.a, init.a)
        assert res.losses.size == 0

    def test_deterministic(self, rng):
        x, y = separable_blobs(rng, 1.0)
        r1 = mlr_train(x, y, 2, 1.0, steps=50, seed=7)
        r2 = mlr_train(x, y, 2, 1.0, steps=50, seed=7)
        assert r1.losses.tobytes() == r2.losses.tobytes()

    def test_offsets_stay_in_ball(self, rng):
        x, y = separable_blobs(rng, 1.0)
        res = mlr_train(x, y, 2, 1.0, steps=200, lr=5.0, seed=0)
        assert np.all(norm(res.model.p) <= clip_radius(1.0) * (1 + 1e-15))

    def test_divergence(self, rng):
        x, y = separable_blobs(rng, 1.0)
        with pytest.raises(TrainingDivergedError) as info:
            mlr_train(x, y, 2, 1.0, steps=50, lr=1e200, seed=0)
        assert info.value.step >= 0
