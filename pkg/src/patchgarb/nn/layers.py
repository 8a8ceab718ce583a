"""Forward and backward kernels for the layers used by the network.

All functions are dtype-preserving: the network runs in float32, while the
gradient checker re-evaluates the same code in float64.
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import InvalidBatchError, LabelError, ShapeError

BN_EPSILON = 1e-3
BN_MOMENTUM = 0.99


def _expect(cond, msg):
    if not cond:
        raise ShapeError(msg)


# -- conv2d ---------------------------------------------------------------

def conv2d_forward(x, w, b):
    """3x3 stride-1 same-padding convolution via im2col + matmul.

    x: [N, H, W, Cin], w: [3, 3, Cin, Cout], b: [Cout] -> [N, H, W, Cout]
    """
    _expect(x.ndim == 4, f"conv input must be [N,H,W,C], got {x.shape}")
    _expect(w.ndim == 4 and w.shape[:2] == (3, 3) and w.shape[2] == x.shape[3],
            f"kernel {w.shape} does not fit input {x.shape}")
    _expect(b.shape == (w.shape[3],), f"bias {b.shape} does not fit kernel {w.shape}")
    n, h, wd, cin = x.shape
    cols = kernels.im2col3x3(x).reshape(n * h * wd, 9 * cin)
    y = cols @ w.reshape(9 * cin, -1) + b
    return y.reshape(n, h, wd, -1)


def conv2d_backward(x, w, dy):
    """Returns (dx, dw, db) for :func:`conv2d_forward`."""
    _expect(x.ndim == 4 and dy.shape == x.shape[:3] + (w.shape[3],),
            f"upstream {dy.shape} does not match conv output for {x.shape}")
    n, h, wd, cin = x.shape
    cout = w.shape[3]
    cols = kernels.im2col3x3(x).reshape(n * h * wd, 9 * cin)
    dy2 = dy.reshape(n * h * wd, cout)
    dw = (cols.T @ dy2).reshape(w.shape)
    db = dy2.sum(axis=0)
    dcols = (dy2 @ w.reshape(9 * cin, cout).T).reshape(n, h, wd, 9 * cin)
    dx = kernels.col2im3x3(dcols, cin)
    return dx, dw, db


# -- batch norm -----------------------------------------------------------

def batchnorm_forward(x, gamma, beta, moving_mean, moving_var, train,
                      eps=BN_EPSILON, momentum=BN_MOMENTUM):
    """Normalise over every axis but the last (channel) one.

    Returns ``(y, cache, new_moving_mean, new_moving_var)``. In inference
    mode the moving statistics are used and returned unchanged.
    """
    _expect(x.shape[-1] == gamma.shape[0], f"BN width {gamma.shape[0]} vs input {x.shape}")
    axes = tuple(range(x.ndim - 1))
    if train:
        count = int(np.prod(x.shape[:-1]))
        if count == 0:
            raise InvalidBatchError("empty batch in train mode")
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        new_mean = momentum * moving_mean + (1.0 - momentum) * mean
        new_var = momentum * moving_var + (1.0 - momentum) * var
        new_mean = new_mean.astype(moving_mean.dtype)
        new_var = new_var.astype(moving_var.dtype)
    else:
        mean, var = moving_mean, moving_var
        new_mean, new_var = moving_mean, moving_var
    inv_std = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
    xhat = (x - mean) * inv_std
    y = gamma * xhat + beta
    return y, (xhat, inv_std, gamma), new_mean, new_var


def batchnorm_backward(dy, cache):
    """Exact train-mode gradient, including the batch statistics' dependence on x."""
    xhat, inv_std, gamma = cache
    axes = tuple(range(dy.ndim - 1))
    m = int(np.prod(dy.shape[:-1]))
    dbeta = dy.sum(axis=axes)
    dgamma = (dy * xhat).sum(axis=axes)
    dx = (gamma * inv_std / m) * (m * dy - dbeta - xhat * dgamma)
    return dx, dgamma, dbeta


# -- pooling / activations --------------------------------------------------

def maxpool_forward(x):
    """2x2 stride-2 floor-mode pool; returns (y, argmax) with argmax in 0..3."""
    _expect(x.ndim == 4 and x.shape[1] >= 2 and x.shape[2] >= 2,
            f"max pool needs H, W >= 2, got {x.shape}")
    return kernels.maxpool2x2(x)


def maxpool_backward(argmax, dy, in_shape):
    _expect(argmax.shape == dy.shape, "argmax and upstream gradient shapes differ")
    return kernels.maxpool2x2_backward(argmax, dy, in_shape[1], in_shape[2])


def relu_forward(x):
    return np.maximum(x, 0)


def relu_backward(x, dy):
    return dy * (x > 0)


# -- dense ------------------------------------------------------------------

def dense_forward(x, w, b):
    _expect(x.ndim == 2 and w.ndim == 2 and x.shape[1] == w.shape[0],
            f"dense input {x.shape} does not fit weights {w.shape}")
    return x @ w + b


def dense_backward(x, w, dy):
    """Returns (dx, dw, db)."""
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


# -- loss -------------------------------------------------------------------

def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood and its gradient w.r.t. the logits."""
    labels = np.asarray(labels, dtype=np.int64)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels {labels.shape} do not match logits {logits.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise LabelError(f"labels must lie in 0..{k - 1}")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_p = z - log_norm
    rows = np.arange(n)
    loss = -log_p[rows, labels].mean()
    grad = np.exp(log_p)
    grad[rows, labels] -= 1
    grad /= n
    return loss.astype(logits.dtype), grad.astype(logits.dtype)
