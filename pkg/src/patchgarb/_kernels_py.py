"""Pure numpy implementations of the hot kernels.

These are the fallback used when the compiled ``_kernels`` extension is not
available, and the reference the extension is tested against. Every kernel
is dtype-preserving (float32 or float64).
"""
import numpy as np


def im2col3x3(x):
    """[N, H, W, C] -> [N, H, W, 9*C] windows of a zero-padded 3x3 same conv.

    Column order is (di, dj, c), matching a [3, 3, Cin, Cout] kernel reshaped
    to [9*Cin, Cout].
    """
    n, h, w, c = x.shape
    xp = np.zeros((n, h + 2, w + 2, c), dtype=x.dtype)
    xp[:, 1:h + 1, 1:w + 1, :] = x
    cols = np.empty((n, h, w, 9, c), dtype=x.dtype)
    for di in range(3):
        for dj in range(3):
            cols[:, :, :, di * 3 + dj, :] = xp[:, di:di + h, dj:dj + w, :]
    return cols.reshape(n, h, w, 9 * c)


def col2im3x3(cols, c):
    """Adjoint of :func:`im2col3x3`; accumulates in (di, dj) order."""
    n, h, w, _ = cols.shape
    cols = cols.reshape(n, h, w, 9, c)
    xp = np.zeros((n, h + 2, w + 2, c), dtype=cols.dtype)
    for di in range(3):
        for dj in range(3):
            xp[:, di:di + h, dj:dj + w, :] += cols[:, :, :, di * 3 + dj, :]
    return np.ascontiguousarray(xp[:, 1:h + 1, 1:w + 1, :])


def maxpool2x2(x):
    """2x2 stride-2 floor-mode max pool. Returns (y, argmax in 0..3)."""
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    win = x[:, :2 * ho, :2 * wo, :].reshape(n, ho, 2, wo, 2, c)
    win = win.transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, 4)
    arg = np.argmax(win, axis=-1)
    y = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(y), arg.astype(np.int8)


def maxpool2x2_backward(arg, dy, h, w):
    n, ho, wo, c = dy.shape
    win = np.zeros((n, ho, wo, c, 4), dtype=dy.dtype)
    np.put_along_axis(win, arg.astype(np.intp)[..., None], dy[..., None], axis=-1)
    win = win.reshape(n, ho, wo, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    dx = np.zeros((n, h, w, c), dtype=dy.dtype)
    dx[:, :2 * ho, :2 * wo, :] = win.reshape(n, 2 * ho, 2 * wo, c)
    return dx


def _reflect(t, n):
    if n == 1:
        return np.zeros_like(t)
    period = 2.0 * (n - 1)
    t = np.mod(np.abs(t), period)
    return np.where(t > n - 1, period - t, t)


def affine_warp(img, matrix):
    """Bilinear, reflect-padded, center-anchored warp of an [H, W, C] image.

    ``matrix`` is the 2x2 map from output offsets (dx, dy) about the image
    center to source offsets. Arithmetic is done in float64.
    """
    h, w, c = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    m = np.asarray(matrix, dtype=np.float64)
    oy, ox = np.meshgrid(np.arange(h, dtype=np.float64) - cy,
                         np.arange(w, dtype=np.float64) - cx, indexing="ij")
    sx = _reflect(cx + m[0, 0] * ox + m[0, 1] * oy, w)
    sy = _reflect(cy + m[1, 0] * ox + m[1, 1] * oy, h)
    x0 = np.minimum(np.floor(sx).astype(np.intp), w - 1)
    y0 = np.minimum(np.floor(sy).astype(np.intp), h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    src = img.astype(np.float64)
    top = src[y0, x0] + (src[y0, x1] - src[y0, x0]) * fx
    bot = src[y1, x0] + (src[y1, x1] - src[y1, x0]) * fx
    return (top + (bot - top) * fy).astype(img.dtype)
