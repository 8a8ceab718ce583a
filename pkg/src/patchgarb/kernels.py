"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. ``PG_BACKEND=python`` forces the fallback.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("PG_BACKEND", "").lower() == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def _c(a):
    return np.ascontiguousarray(a)


def im2col3x3(x):
    return _impl.im2col3x3(_c(x))


def col2im3x3(cols, c):
    return _impl.col2im3x3(_c(cols), c)


def maxpool2x2(x):
    return _impl.maxpool2x2(_c(x))


def maxpool2x2_backward(arg, dy, h, w):
    return _impl.maxpool2x2_backward(_c(arg), _c(dy), h, w)


def affine_warp(img, matrix):
    return _impl.affine_warp(_c(img), matrix)
