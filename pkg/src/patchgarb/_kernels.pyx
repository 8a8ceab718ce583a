# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_kernels_py``.

Same signatures, same accumulation order, float32 and float64 via fused
types. Single threaded.
"""
import numpy as np
cimport numpy as cnp
from cython cimport floating
from libc.math cimport floor, fabs, fmod

cnp.import_array()


def im2col3x3(floating[:, :, :, ::1] x):
    cdef Py_ssize_t n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3]
    dtype = np.float32 if floating is float else np.float64
    out = np.zeros((n, h, w, 9 * c), dtype=dtype)
    cdef floating[:, :, :, ::1] cols = out
    cdef Py_ssize_t b, i, j, di, dj, k, si, sj, base
    for b in range(n):
        for i in range(h):
            for j in range(w):
                for di in range(3):
                    si = i + di - 1
                    if si < 0 or si >= h:
                        continue
                    for dj in range(3):
                        sj = j + dj - 1
                        if sj < 0 or sj >= w:
                            continue
                        base = (di * 3 + dj) * c
                        for k in range(c):
                            cols[b, i, j, base + k] = x[b, si, sj, k]
    return out


def col2im3x3(floating[:, :, :, ::1] cols, Py_ssize_t c):
    cdef Py_ssize_t n = cols.shape[0], h = cols.shape[1], w = cols.shape[2]
    dtype = np.float32 if floating is float else np.float64
    out = np.zeros((n, h, w, c), dtype=dtype)
    cdef floating[:, :, :, ::1] dx = out
    cdef Py_ssize_t b, i, j, di, dj, k, si, sj, base
    # (di, dj) outermost so each element sums its 9 terms in the same order
    # as the numpy fallback.
    for di in range(3):
        for dj in range(3):
            base = (di * 3 + dj) * c
            for b in range(n):
                for i in range(h):
                    si = i + di - 1
                    if si < 0 or si >= h:
                        continue
                    for j in range(w):
                        sj = j + dj - 1
                        if sj < 0 or sj >= w:
                            continue
                        for k in range(c):
                            dx[b, si, sj, k] += cols[b, i, j, base + k]
    return out


def maxpool2x2(floating[:, :, :, ::1] x):
    cdef Py_ssize_t n = x.shape[0], ho = x.shape[1] // 2, wo = x.shape[2] // 2, c = x.shape[3]
    dtype = np.float32 if floating is float else np.float64
    y_arr = np.empty((n, ho, wo, c), dtype=dtype)
    a_arr = np.empty((n, ho, wo, c), dtype=np.int8)
    cdef floating[:, :, :, ::1] y = y_arr
    cdef cnp.int8_t[:, :, :, ::1] arg = a_arr
    cdef Py_ssize_t b, i, j, k
    cdef floating best, v
    cdef cnp.int8_t idx
    for b in range(n):
        for i in range(ho):
            for j in range(wo):
                for k in range(c):
                    best = x[b, 2 * i, 2 * j, k]
                    idx = 0
                    v = x[b, 2 * i, 2 * j + 1, k]
                    if v > best:
                        best = v
                        idx = 1
                    v = x[b, 2 * i + 1, 2 * j, k]
                    if v > best:
                        best = v
                        idx = 2
                    v = x[b, 2 * i + 1, 2 * j + 1, k]
                    if v > best:
                        best = v
                        idx = 3
                    y[b, i, j, k] = best
                    arg[b, i, j, k] = idx
    return y_arr, a_arr


def maxpool2x2_backward(cnp.int8_t[:, :, :, ::1] arg, floating[:, :, :, ::1] dy,
                        Py_ssize_t h, Py_ssize_t w):
    cdef Py_ssize_t n = dy.shape[0], ho = dy.shape[1], wo = dy.shape[2], c = dy.shape[3]
    dtype = np.float32 if floating is float else np.float64
    out = np.zeros((n, h, w, c), dtype=dtype)
    cdef floating[:, :, :, ::1] dx = out
    cdef Py_ssize_t b, i, j, k
    cdef int a
    for b in range(n):
        for i in range(ho):
            for j in range(wo):
                for k in range(c):
                    a = arg[b, i, j, k]
                    dx[b, 2 * i + (a >> 1), 2 * j + (a & 1), k] = dy[b, i, j, k]
    return out


cdef inline double _reflect(double t, Py_ssize_t n) nogil:
    cdef double period
    if n == 1:
        return 0.0
    period = 2.0 * (n - 1)
    t = fmod(fabs(t), period)
    if t > n - 1:
        t = period - t
    return t


def affine_warp(floating[:, :, ::1] img, matrix):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1], c = img.shape[2]
    m = np.asarray(matrix, dtype=np.float64)
    cdef double m00 = m[0, 0], m01 = m[0, 1], m10 = m[1, 0], m11 = m[1, 1]
    cdef double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.empty((h, w, c), dtype=dtype)
    cdef floating[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, x0, y0, x1, y1
    cdef double ox, oy, sx, sy, fx, fy, a, b, cc, d, top, bot
    with nogil:
        for i in range(h):
            oy = i - cy
            for j in range(w):
                ox = j - cx
                sx = _reflect(cx + m00 * ox + m01 * oy, w)
                sy = _reflect(cy + m10 * ox + m11 * oy, h)
                x0 = <Py_ssize_t>floor(sx)
                y0 = <Py_ssize_t>floor(sy)
                if x0 > w - 1:
                    x0 = w - 1
                if y0 > h - 1:
                    y0 = h - 1
                x1 = x0 + 1 if x0 + 1 < w else w - 1
                y1 = y0 + 1 if y0 + 1 < h else h - 1
                fx = sx - x0
                fy = sy - y0
                for k in range(c):
                    a = img[y0, x0, k]
                    b = img[y0, x1, k]
                    cc = img[y1, x0, k]
                    d = img[y1, x1, k]
                    top = a + (b - a) * fx
                    bot = cc + (d - cc) * fx
                    out[i, j, k] = <floating>(top + (bot - top) * fy)
    return out_arr
