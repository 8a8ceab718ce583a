import math

import numpy as np
import pytest

from oracles import naive_conv, naive_maxpool
from patchgarb.errors import InvalidBatchError, LabelError, ShapeError
from patchgarb.nn import layers as L


def rnd(seed, *shape):
    return np.random.default_rng(seed).standard_normal(shape).astype(np.float32)


class TestConv:
    def test_delta_kernel(self):
        x = rnd(0, 1, 5, 6, 1)
        w = np.zeros((3, 3, 1, 1), np.float32)
        w[1, 1] = 1
        np.testing.assert_array_equal(L.conv2d_forward(x, w, np.zeros(1, np.float32)), x)

    def test_box_sum(self):
        x = np.ones((1, 4, 4, 1), np.float32)
        y = L.conv2d_forward(x, np.ones((3, 3, 1, 1), np.float32), np.zeros(1, np.float32))[0, :, :, 0]
        assert y[1, 1] == 9 and y[2, 2] == 9
        assert y[0, 0] == 4 and y[0, 1] == 6

    def test_against_naive(self):
        x, w, b = rnd(11, 2, 5, 5, 3), rnd(12, 3, 3, 3, 4), rnd(13, 4)
        np.testing.assert_allclose(L.conv2d_forward(x, w, b), naive_conv(x, w, b), atol=1e-5, rtol=0)

    @pytest.mark.parametrize("seed", range(5))
    def test_odd_shapes(self, seed):
        r = np.random.default_rng(seed)
        n, h, wd, ci, co = (int(v) for v in r.integers(1, 6, size=5))
        x, w, b = rnd(seed, n, h, wd, ci), rnd(seed + 1, 3, 3, ci, co), rnd(seed + 2, co)
        np.testing.assert_allclose(L.conv2d_forward(x, w, b), naive_conv(x, w, b), atol=1e-5, rtol=0)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            L.conv2d_forward(rnd(0, 1, 4, 4, 2), rnd(0, 3, 3, 3, 1), rnd(0, 1))
        with pytest.raises(ShapeError):
            L.conv2d_forward(rnd(0, 1, 4, 4, 3), rnd(0, 3, 3, 3, 2), rnd(0, 3))

    def test_zero_upstream(self):
        x, w = rnd(1, 2, 4, 4, 2), rnd(2, 3, 3, 2, 3)
        for g in L.conv2d_backward(x, w, np.zeros((2, 4, 4, 3), np.float32)):
            assert not g.any()

    def test_identity_kernel_passthrough(self):
        x = rnd(3, 1, 5, 5, 1)
        w = np.zeros((3, 3, 1, 1), np.float32)
        w[1, 1] = 1
        dx, _, db = L.conv2d_backward(x, w, np.ones((1, 5, 5, 1), np.float32))
        np.testing.assert_array_equal(dx, np.ones_like(x))
        assert db[0] == 25

    def test_backward_shape_error(self):
        with pytest.raises(ShapeError):
            L.conv2d_backward(rnd(0, 1, 4, 4, 2), rnd(0, 3, 3, 2, 3), rnd(0, 1, 4, 4, 2))


class TestBatchNorm:
    def params(self, c):
        return (np.ones(c, np.float32), np.zeros(c, np.float32),
                np.zeros(c, np.float32), np.ones(c, np.float32))

    def test_normalises(self):
        x = rnd(0, 8, 4, 4, 3) * 5 + 2
        y, _, _, _ = L.batchnorm_forward(x, *self.params(3), train=True)
        np.testing.assert_allclose(y.mean(axis=(0, 1, 2)), 0, atol=1e-5)
        var = x.var(axis=(0, 1, 2))
        np.testing.assert_allclose(y.var(axis=(0, 1, 2)), var / (var + L.BN_EPSILON), rtol=1e-4)

    def test_constant_channel(self):
        x = np.full((4, 2, 2, 2), 3.0, np.float32)
        g, b, mm, mv = self.params(2)
        b = np.array([0.5, -1.0], np.float32)
        y, _, _, _ = L.batchnorm_forward(x, g, b, mm, mv, train=True)
        np.testing.assert_allclose(y[0, 0, 0], b, atol=1e-6)

    def test_moving_statistics(self):
        x = rnd(1, 16, 3) + 4
        g, b, mm, mv = self.params(3)
        _, _, nm, nv = L.batchnorm_forward(x, g, b, mm, mv, train=True)
        np.testing.assert_allclose(nm, 0.01 * x.mean(0), rtol=1e-5)
        np.testing.assert_allclose(nv, 0.99 + 0.01 * x.var(0), rtol=1e-5)

    def test_inference_uses_moving(self):
        x = rnd(2, 5, 2)
        g, b = np.array([2.0, 1.0], np.float32), np.array([0.0, 1.0], np.float32)
        mm, mv = np.array([1.0, -1.0], np.float32), np.array([4.0, 0.25], np.float32)
        y, _, nm, nv = L.batchnorm_forward(x, g, b, mm, mv, train=False)
        expected = g * (x - mm) / np.sqrt(mv + 1e-3) + b
        np.testing.assert_allclose(y, expected, rtol=1e-5)
        assert nm is mm and nv is mv

    def test_empty_batch(self):
        with pytest.raises(InvalidBatchError):
            L.batchnorm_forward(np.zeros((0, 3), np.float32), *self.params(3), train=True)

    def test_zero_upstream(self):
        x = rnd(3, 4, 3, 3, 2)
        _, cache, _, _ = L.batchnorm_forward(x, *self.params(2), train=True)
        for g in L.batchnorm_backward(np.zeros_like(x), cache):
            assert not g.any()

    def test_table_non_trainable_budget(self):
        widths = [32, 32, 32, 32, 64, 64, 128, 128]
        assert sum(2 * c for c in widths) == 1024


class TestMaxPool:
    def test_single_window(self):
        x = np.array([1, 2, 3, 4], np.float32).reshape(1, 2, 2, 1)
        y, arg = L.maxpool_forward(x)
        assert y.item() == 4 and arg.item() == 3

    def test_floor_mode(self):
        y, _ = L.maxpool_forward(rnd(0, 1, 7, 7, 2))
        assert y.shape == (1, 3, 3, 2)

    def test_against_scan(self):
        x = rnd(5, 1, 6, 6, 2)
        y, _ = L.maxpool_forward(x)
        np.testing.assert_array_equal(y, naive_maxpool(x))

    def test_too_small(self):
        with pytest.raises(ShapeError):
            L.maxpool_forward(rnd(0, 1, 1, 4, 1))

    def test_distinct_window_gradient(self):
        x = np.array([1, 7, 3, 4], np.float32).reshape(1, 2, 2, 1)
        _, arg = L.maxpool_forward(x)
        dx = L.maxpool_backward(arg, np.ones((1, 1, 1, 1), np.float32), x.shape)
        assert np.count_nonzero(dx) == 1 and dx[0, 0, 1, 0] == 1

    def test_tie_goes_to_first(self):
        x = np.full((1, 2, 2, 1), 5, np.float32)
        _, arg = L.maxpool_forward(x)
        dx = L.maxpool_backward(arg, np.ones((1, 1, 1, 1), np.float32), x.shape)
        assert dx[0, 0, 0, 0] == 1 and dx.sum() == 1

    def test_dropped_border_gets_no_gradient(self):
        x = rnd(1, 1, 5, 5, 1)
        _, arg = L.maxpool_forward(x)
        dx = L.maxpool_backward(arg, np.ones((1, 2, 2, 1), np.float32), x.shape)
        assert not dx[0, 4].any() and not dx[0, :, 4].any()


class TestDense:
    def test_table_budget(self):
        assert 1152 * 128 + 128 == 147584

    def test_identity(self):
        x = rnd(0, 3, 4)
        np.testing.assert_array_equal(
            L.dense_forward(x, np.eye(4, dtype=np.float32), np.zeros(4, np.float32)), x)

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            L.dense_forward(rnd(0, 2, 3), rnd(0, 4, 2), rnd(0, 2))


class TestReLU:
    def test_forward_backward(self):
        x = np.array([-1.0, 0.0, 2.0], np.float32)
        np.testing.assert_array_equal(L.relu_forward(x), [0, 0, 2])
        np.testing.assert_array_equal(L.relu_backward(x, np.ones(3, np.float32)), [0, 0, 1])


class TestSoftmaxCE:
    def test_uniform(self):
        loss, _ = L.softmax_cross_entropy(np.zeros((2, 6), np.float32), [0, 3])
        assert float(loss) == pytest.approx(math.log(6), abs=1e-6)

    def test_stability(self):
        logits = np.zeros((1, 6), np.float32)
        logits[0, 2] = 1000
        loss, grad = L.softmax_cross_entropy(logits, [2])
        assert np.isfinite(loss) and float(loss) < 1e-6 and np.all(np.isfinite(grad))

    def test_gradient_rows_sum_to_zero(self):
        _, grad = L.softmax_cross_entropy(rnd(0, 5, 6), [0, 1, 2, 3, 4])
        np.testing.assert_allclose(grad.sum(axis=1), 0, atol=1e-7)

    @pytest.mark.parametrize("labels", [[0, 6], [-1, 0]])
    def test_label_range(self, labels):
        with pytest.raises(LabelError):
            L.softmax_cross_entropy(np.zeros((2, 6), np.float32), labels)

    def test_softmax_sums_to_one(self):
        np.testing.assert_allclose(L.softmax(rnd(1, 4, 6) * 50).sum(axis=1), 1, rtol=1e-6)
