import math

import numpy as np
import pytest

from conftest import rel_err

from depl.errors import ArgumentError, ConfigError
from depl.nn import ops

H_STEP = 1e-5
GRAD_TOL = 1e-4


def numeric_grad(f, arr, h=H_STEP):
    """Central finite differences of scalar f w.r.t. every element of arr."""
    g = np.zeros_like(arr, dtype=np.float64)
    flat = arr.ravel()
    gflat = g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return g


def assert_grads_close(analytic, numeric, tol=GRAD_TOL):
    assert np.max(rel_err(analytic, numeric)) <= tol


class TestActivations:
    def test_swish_at_zero(self):
        assert ops.swish(np.array([0.0]))[0] == 0.0

    def test_swish_saturates(self):
        assert abs(ops.swish(np.array([20.0]))[0] - 20.0) < 1e-7

    def test_sigmoid_at_zero(self):
        assert ops.sigmoid(np.array([0.0]))[0] == 0.5

    def test_sigmoid_stable_at_extremes(self):
        out = ops.sigmoid(np.array([-1000.0, 1000.0]))
        assert out[0] == 0.0 and out[1] == 1.0

    def test_swish_gradient(self):
        rng = np.random.default_rng(0)
        for seed in range(20):
            x = np.random.default_rng(seed).normal(size=(3, 7))
            r = rng.normal(size=x.shape)
            analytic = ops.swish_grad(x) * r
            numeric = numeric_grad(lambda: float(np.sum(ops.swish(x) * r)), x)
            assert_grads_close(analytic, numeric)

    def test_relu_gradient(self):
        x = np.random.default_rng(1).normal(size=(4, 5)) + 0.1
        r = np.random.default_rng(2).normal(size=x.shape)
        analytic = ops.relu_grad(x) * r
        numeric = numeric_grad(lambda: float(np.sum(ops.relu(x) * r)), x)
        assert_grads_close(analytic, numeric)


class TestSoftmax:
    def test_uniform(self):
        np.testing.assert_allclose(ops.softmax(np.array([[0.0, 0.0]])),
                                   [[0.5, 0.5]])

    def test_known_ratio(self):
        out = ops.softmax(np.log(np.array([[1.0, 3.0]])))
        np.testing.assert_allclose(out, [[0.25, 0.75]], rtol=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(3)
        z = rng.normal(size=(5, 4))
        np.testing.assert_allclose(ops.softmax(z + 123.0), ops.softmax(z),
                                   atol=1e-12)

    def test_rows_sum_to_one(self):
        z = np.random.default_rng(4).normal(size=(10, 3)) * 5.0
        p = ops.softmax(z)
        np.testing.assert_allclose(p.sum(axis=1), np.ones(10), atol=1e-12)
        assert np.all(p > 0.0) and np.all(p < 1.0)


class TestConv2d:
    def test_identity_kernel(self):
        x = np.random.default_rng(5).normal(size=(2, 6, 6, 1))
        w = np.zeros((3, 3, 1, 1))
        w[1, 1, 0, 0] = 1.0
        y, _ = ops.conv2d_forward(x, w, np.zeros(1), padding="same")
        np.testing.assert_allclose(y, x, atol=1e-15)

    def test_all_ones_valid(self):
        x = np.ones((1, 2, 2, 1))
        w = np.ones((2, 2, 1, 1))
        with pytest.raises(ConfigError):
            # 2x2 kernel cannot use same padding (even size)
            ops.conv2d_forward(x, w, np.zeros(1), padding="same")
        y, _ = ops.conv2d_forward(x, w, np.zeros(1), padding="valid")
        assert y.shape == (1, 1, 1, 1)
        assert y[0, 0, 0, 0] == 4.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(1, 9, 9, 1))
        w = rng.normal(size=(3, 3, 1, 5))
        b = rng.normal(size=5)
        y, _ = ops.conv2d_forward(x, w, b, padding="valid")
        # quadruple-loop direct sum
        for i in range(7):
            for j in range(7):
                for k in range(5):
                    acc = b[k]
                    for di in range(3):
                        for dj in range(3):
                            acc += x[0, i + di, j + dj, 0] * w[di, dj, 0, k]
                    assert abs(y[0, i, j, k] - acc) < 1e-12

    def test_channel_mismatch(self):
        with pytest.raises(ConfigError):
            ops.conv2d_forward(np.zeros((1, 5, 5, 2)),
                               np.zeros((3, 3, 3, 4)), np.zeros(4))

    @pytest.mark.parametrize("padding", ["same", "valid"])
    def test_gradients(self, padding):
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            x = rng.normal(size=(2, 5, 5, 3))
            w = rng.normal(size=(3, 3, 3, 4))
            b = rng.normal(size=4)
            r_holder = {}

            def loss():
                y, _ = ops.conv2d_forward(x, w, b, padding=padding)
                if "r" not in r_holder:
                    r_holder["r"] = np.random.default_rng(7).normal(size=y.shape)
                return float(np.sum(y * r_holder["r"]))

            loss()
            y, cache = ops.conv2d_forward(x, w, b, padding=padding)
            dx, dw, db = ops.conv2d_backward(r_holder["r"], cache)
            assert_grads_close(dx, numeric_grad(loss, x))
            assert_grads_close(dw, numeric_grad(loss, w))
            assert_grads_close(db, numeric_grad(loss, b))


class TestMaxPool:
    def test_constant_input(self):
        x = np.full((2, 4, 4, 3), 2.5)
        y, _ = ops.maxpool_forward(x)
        np.testing.assert_array_equal(y, np.full((2, 2, 2, 3), 2.5))

    def test_nine_to_four(self):
        x = np.random.default_rng(8).normal(size=(1, 9, 9, 2))
        y, _ = ops.maxpool_forward(x, size=2, stride=2)
        assert y.shape == (1, 4, 4, 2)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(2, 6, 7, 3))
        y, _ = ops.maxpool_forward(x, size=2, stride=2)
        for n in range(2):
            for i in range(3):
                for j in range(3):
                    for c in range(3):
                        window = x[n, 2 * i:2 * i + 2, 2 * j:2 * j + 2, c]
                        assert y[n, i, j, c] == window.max()

    def test_gradient(self):
        for seed in range(10):
            rng = np.random.default_rng(200 + seed)
            x = rng.normal(size=(2, 6, 6, 2))
            r = rng.normal(size=(2, 3, 3, 2))

            def loss():
                y, _ = ops.maxpool_forward(x)
                return float(np.sum(y * r))

            _, cache = ops.maxpool_forward(x)
            dx = ops.maxpool_backward(r, cache)
            assert_grads_close(dx, numeric_grad(loss, x))


class TestBatchNorm:
    def _forward_train(self, x, scale, shift):
        rm, rv = np.zeros(x.shape[-1]), np.ones(x.shape[-1])
        return ops.batchnorm_forward(x, scale, shift, rm, rv, mode="train")

    def test_train_standardizes(self):
        # batch variance must exceed 10 x eps(=1e-5) for output variance
        # to land within 1e-6 of 1
        x = np.random.default_rng(10).normal(3.0, 4.0, size=(16, 4, 4, 5))
        y, _ = self._forward_train(x, np.ones(5), np.zeros(5))
        means = y.mean(axis=(0, 1, 2))
        variances = y.var(axis=(0, 1, 2))
        assert np.all(np.abs(means) < 1e-9)
        assert np.all(np.abs(variances - 1.0) < 1e-6)

    def test_infer_identity_with_unit_stats(self):
        x = np.random.default_rng(11).normal(size=(4, 6))
        y, _ = ops.batchnorm_forward(x, np.ones(6), np.zeros(6),
                                     np.zeros(6), np.ones(6), mode="infer")
        np.testing.assert_allclose(y, x, atol=1e-4)  # eps shifts variance

    def test_shift_moves_mean(self):
        x = np.random.default_rng(12).normal(size=(32, 3))
        y, _ = self._forward_train(x, np.ones(3), np.full(3, 1.5))
        np.testing.assert_allclose(y.mean(axis=0), np.full(3, 1.5), atol=1e-9)

    def test_single_sample_batch_rejected(self):
        with pytest.raises(ArgumentError):
            self._forward_train(np.zeros((1, 3)), np.ones(3), np.zeros(3))

    def test_running_stats_updated(self):
        x = np.random.default_rng(13).normal(5.0, 1.0, size=(64, 2))
        rm, rv = np.zeros(2), np.ones(2)
        ops.batchnorm_forward(x, np.ones(2), np.zeros(2), rm, rv, mode="train")
        np.testing.assert_allclose(rm, 0.1 * x.mean(axis=0), rtol=1e-12)

    def test_gradients(self):
        for seed in range(20):
            rng = np.random.default_rng(300 + seed)
            x = rng.normal(size=(6, 3, 3, 4))
            scale = rng.normal(size=4) + 1.5
            shift = rng.normal(size=4)
            r = rng.normal(size=x.shape)

            def loss():
                y, _ = self._forward_train(x, scale, shift)
                return float(np.sum(y * r))

            _, cache = self._forward_train(x, scale, shift)
            dx, dscale, dshift = ops.batchnorm_backward(r, cache)
            assert_grads_close(dx, numeric_grad(loss, x))
            assert_grads_close(dscale, numeric_grad(loss, scale))
            assert_grads_close(dshift, numeric_grad(loss, shift))


class TestSeBlock:
    def test_constant_channels_squeeze_exactly(self):
        c_vals = np.array([1.0, -2.0, 0.5, 3.0])
        u = np.broadcast_to(c_vals, (2, 5, 5, 4)).copy()
        _, cache = ops.se_forward(u, np.zeros((2, 4)), np.zeros((4, 2)))
        z = cache[1]
        np.testing.assert_array_equal(z, np.tile(c_vals, (2, 1)))

    def test_zero_weights_half_gate(self):
        u = np.random.default_rng(14).normal(size=(3, 4, 4, 6))
        y, _ = ops.se_forward(u, np.zeros((3, 6)), np.zeros((6, 3)))
        np.testing.assert_allclose(y, 0.5 * u, rtol=1e-15)

    def test_gate_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(15)
        u = rng.normal(size=(4, 5, 5, 8))
        y, cache = ops.se_forward(u, rng.normal(size=(2, 8)),
                                  rng.normal(size=(8, 2)))
        s = cache[4]
        assert np.all(s > 0.0) and np.all(s < 1.0)
        assert np.all(np.abs(y) <= np.abs(u) + 1e-15)

    def test_incompatible_shapes(self):
        with pytest.raises(ConfigError):
            ops.se_forward(np.zeros((1, 3, 3, 6)), np.zeros((2, 5)),
                           np.zeros((6, 2)))

    def test_gradients(self):
        for seed in range(20):
            rng = np.random.default_rng(400 + seed)
            u = rng.normal(size=(3, 4, 4, 6))
            w1 = rng.normal(size=(2, 6))
            w2 = rng.normal(size=(6, 2))
            r = rng.normal(size=u.shape)

            def loss():
                y, _ = ops.se_forward(u, w1, w2)
                return float(np.sum(y * r))

            _, cache = ops.se_forward(u, w1, w2)
            du, dw1, dw2 = ops.se_backward(r, cache)
            assert_grads_close(du, numeric_grad(loss, u))
            assert_grads_close(dw1, numeric_grad(loss, w1))
            assert_grads_close(dw2, numeric_grad(loss, w2))


class TestDense:
    def test_identity(self):
        x = np.random.default_rng(16).normal(size=(4, 5))
        y, _ = ops.dense_forward(x, np.eye(5), np.zeros(5))
        np.testing.assert_array_equal(y, x)

    def test_bias_only(self):
        x = np.random.default_rng(17).normal(size=(3, 4))
        b = np.array([1.0, -2.0])
        y, _ = ops.dense_forward(x, np.zeros((4, 2)), b)
        np.testing.assert_array_equal(y, np.tile(b, (3, 1)))

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(18)
        x = rng.normal(size=(3, 4))
        w = rng.normal(size=(4, 2))
        b = rng.normal(size=2)
        y, _ = ops.dense_forward(x, w, b)
        for n in range(3):
            for k in range(2):
                acc = b[k]
                for d in range(4):
                    acc += x[n, d] * w[d, k]
                assert abs(y[n, k] - acc) < 1e-12

    def test_gradients(self):
        for seed in range(20):
            rng = np.random.default_rng(500 + seed)
            x = rng.normal(size=(4, 6))
            w = rng.normal(size=(6, 3))
            b = rng.normal(size=3)
            r = rng.normal(size=(4, 3))

            def loss():
                y, _ = ops.dense_forward(x, w, b)
                return float(np.sum(y * r))

            _, cache = ops.dense_forward(x, w, b)
            dx, dw, db = ops.dense_backward(r, cache)
            assert_grads_close(dx, numeric_grad(loss, x))
            assert_grads_close(dw, numeric_grad(loss, w))
            assert_grads_close(db, numeric_grad(loss, b))


class TestDropout:
    def test_infer_identity(self):
        x = np.random.default_rng(19).normal(size=(5, 5))
        y, mask = ops.dropout_forward(x, 0.6, mode="infer")
        assert mask is None
        np.testing.assert_array_equal(y, x)

    def test_keep_all_identity(self):
        x = np.random.default_rng(20).normal(size=(5, 5))
        for mode in ("train", "infer"):
            y, mask = ops.dropout_forward(x, 1.0, mode=mode)
            np.testing.assert_array_equal(y, x)

    def test_expectation_preserved(self):
        x = np.ones((10, 10))
        rng = np.random.default_rng(21)
        acc = np.zeros_like(x)
        n = 10_000
        for _ in range(n):
            y, _ = ops.dropout_forward(x, 0.6, mode="train", rng=rng)
            acc += y
        np.testing.assert_allclose(acc / n, x, atol=0.02 * np.max(x) * 2)

    def test_bad_keep_probability(self):
        with pytest.raises(ArgumentError):
            ops.dropout_forward(np.zeros((2, 2)), 0.0, mode="train",
                                rng=np.random.default_rng(0))


class TestCrossEntropy:
    def test_perfect_prediction(self):
        probs = np.array([[1.0, 0.0], [0.0, 1.0]])
        targets = probs.copy()
        assert ops.cross_entropy_loss(probs, targets) < 1e-9

    def test_uniform_is_ln2(self):
        probs = np.array([[0.5, 0.5]])
        targets = np.array([[1.0, 0.0]])
        assert abs(ops.cross_entropy_loss(probs, targets) - math.log(2.0)) < 1e-12

    def test_batch_mean_of_rows(self):
        p1 = np.array([[0.8, 0.2]])
        p2 = np.array([[0.3, 0.7]])
        t1 = np.array([[1.0, 0.0]])
        t2 = np.array([[0.0, 1.0]])
        both = ops.cross_entropy_loss(np.vstack([p1, p2]), np.vstack([t1, t2]))
        single = 0.5 * (ops.cross_entropy_loss(p1, t1)
                        + ops.cross_entropy_loss(p2, t2))
        assert abs(both - single) < 1e-12

    def test_l2_term(self):
        probs = np.array([[1.0, 0.0]])
        targets = probs.copy()
        w = np.full((2, 2), 3.0)
        loss = ops.cross_entropy_loss(probs, targets, conv_weights=[w], l2=0.5)
        assert abs(loss - 0.5 * 0.5 * 36.0) < 1e-12

    def test_zero_prob_clamped(self):
        probs = np.array([[0.0, 1.0]])
        targets = np.array([[1.0, 0.0]])
        loss = ops.cross_entropy_loss(probs, targets)
        assert np.isfinite(loss)
        assert abs(loss - (-math.log(1e-12))) < 1e-9

    def test_softmax_cross_entropy_composite_gradient(self):
        for seed in range(20):
            rng = np.random.default_rng(600 + seed)
            logits = rng.normal(size=(4, 3))
            labels = rng.integers(0, 3, size=4)
            targets = np.eye(3)[labels]

            def loss():
                return ops.cross_entropy_loss(ops.softmax(logits), targets)

            analytic = ops.softmax_cross_entropy_grad(ops.softmax(logits), targets)
            assert_grads_close(analytic, numeric_grad(loss, logits))
