"""Dense float32 tensors and the small set of numeric kernels built on them.

Tensors are plain ``numpy.ndarray`` objects of dtype float32, row-major,
rank 1 to 4. The helpers here validate that contract and never mutate
their inputs.
"""
from __future__ import annotations

import contextlib
import os
from typing import Sequence

import numpy as np

from .errors import NumericError, ShapeError

DTYPE = np.float32

_ELEMENTWISE = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
}
_REDUCE = {"sum": np.sum, "mean": np.mean, "max": np.max}


def check_tensor(a: np.ndarray, name: str = "tensor") -> np.ndarray:
    if not isinstance(a, np.ndarray) or a.dtype != DTYPE:
        raise ShapeError(f"{name} must be a float32 ndarray")
    if not 1 <= a.ndim <= 4:
        raise ShapeError(f"{name} rank {a.ndim} outside 1..4")
    return a


def check_finite(a: np.ndarray, name: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{name} contains NaN or Inf")
    return a


def tensor_new(shape: Sequence[int], fill: float = 0.0) -> np.ndarray:
    shape = tuple(int(d) for d in shape)
    if not shape or len(shape) > 4 or any(d < 1 for d in shape):
        raise ShapeError(f"invalid shape {list(shape)}")
    return np.full(shape, fill, dtype=DTYPE)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a @ b`` for rank-2 tensors, accumulated in float64 and rounded once."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("matmul expects rank-2 operands")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return np.matmul(a.astype(np.float64), b.astype(np.float64)).astype(DTYPE)


def elementwise(a: np.ndarray, b: np.ndarray, op: str) -> np.ndarray:
    """Apply ``op`` elementwise.

    ``b`` may have the same shape as ``a`` or be a vector matching the last
    (channel) axis of ``a``.
    """
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}") from None
    if a.shape != b.shape and not (b.ndim == 1 and b.shape[0] == a.shape[-1]):
        raise ShapeError(f"incompatible shapes {a.shape} and {b.shape}")
    if op == "div" and np.any(b == 0):
        raise NumericError("division by zero")
    return fn(a, b).astype(DTYPE, copy=False)


def reduce(a: np.ndarray, axis: int, op: str) -> np.ndarray:
    try:
        fn = _REDUCE[op]
    except KeyError:
        raise ValueError(f"unknown reduction {op!r}") from None
    if not -a.ndim <= axis < a.ndim:
        raise ShapeError(f"axis {axis} out of range for rank {a.ndim}")
    out = fn(a, axis=axis)
    return np.atleast_1d(out).astype(DTYPE, copy=False)


def configured_threads() -> int:
    """Worker-thread cap from PG_THREADS; 0 (the default) means deterministic."""
    try:
        return max(0, int(os.environ.get("PG_THREADS", "0")))
    except ValueError:
        return 0


@contextlib.contextmanager
def thread_limits(threads: int | None = None):
    """Cap BLAS threads; ``0`` pins execution to one thread."""
    threads = configured_threads() if threads is None else threads
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        yield
        return
    with threadpool_limits(limits=1 if threads == 0 else threads):
        yield
