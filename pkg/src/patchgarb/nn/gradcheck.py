"""Finite-difference verification of every backward pass.

Analytic gradients come from the float32 code path. The numeric side
evaluates the same forward definitions in float64 with central
differences, which keeps rounding noise far below the tolerances.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..rng import SplitMix64, derive_seed
from . import layers as L
from .model import ArchConfig, build_model

FD_EPS = 1e-6
# Gradients below this magnitude are compared absolutely (float32 noise is ~1e-7).
ABS_FLOOR = 1e-3


@dataclass
class CheckResult:
    name: str
    max_rel_error: float
    worst: str
    coords: int

    def passed(self, tol: float) -> bool:
        return self.max_rel_error < tol


def rel_error(analytic, numeric, floor=ABS_FLOOR):
    a = np.asarray(analytic, np.float64)
    n = np.asarray(numeric, np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def numeric_grad(loss: Callable[[], float], arr: np.ndarray, eps: float = FD_EPS) -> np.ndarray:
    """Central differences of ``loss()`` w.r.t. every entry of ``arr`` (mutated in place)."""
    grad = np.zeros(arr.shape, np.float64)
    for idx in np.ndindex(arr.shape):
        old = arr[idx]
        h = eps * max(1.0, abs(old))
        arr[idx] = old + h
        up = loss()
        arr[idx] = old - h
        down = loss()
        arr[idx] = old
        grad[idx] = (up - down) / (2 * h)
    return grad


def compare(name: str, pairs: dict[str, tuple[np.ndarray, np.ndarray]]) -> CheckResult:
    worst_err, worst, coords = 0.0, "", 0
    for key, (analytic, numeric) in pairs.items():
        err = rel_error(analytic, numeric)
        coords += err.size
        i = np.unravel_index(int(np.argmax(err)), err.shape)
        if err[i] >= worst_err:
            worst_err = float(err[i])
            worst = f"{key}{list(i)} analytic={float(analytic[i]):.6g} numeric={float(numeric[i]):.6g}"
    return CheckResult(name, worst_err, worst, coords)


class _Rand:
    def __init__(self, seed):
        self.rng = SplitMix64(seed)

    def normal(self, *shape):
        n = int(np.prod(shape))
        u1 = self.rng.random_array(n)
        u2 = self.rng.random_array(n)
        z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2 * np.pi * u2)
        return z.reshape(shape).astype(np.float32)


def _projection_loss(y, r):
    return float(np.sum(np.asarray(y, np.float64) * r))


def check_conv(seed: int, corrupt: bool = False) -> CheckResult:
    rnd = _Rand(derive_seed(seed, "conv"))
    x, w, b = rnd.normal(2, 5, 5, 3), rnd.normal(3, 3, 3, 4) * 0.5, rnd.normal(4)
    r = rnd.normal(2, 5, 5, 4).astype(np.float64)
    dx, dw, db = L.conv2d_backward(x, w, r.astype(np.float32))
    if corrupt:
        dw = dw.copy()
        dw[1, 1, 0, 0] += 0.5 * (abs(dw[1, 1, 0, 0]) + 1.0)
    x64, w64, b64 = (a.astype(np.float64) for a in (x, w, b))
    f = lambda: _projection_loss(L.conv2d_forward(x64, w64, b64), r)
    return compare("conv2d", {"dx": (dx, numeric_grad(f, x64)),
                              "dw": (dw, numeric_grad(f, w64)),
                              "db": (db, numeric_grad(f, b64))})


def check_batchnorm(seed: int) -> CheckResult:
    rnd = _Rand(derive_seed(seed, "bn"))
    x = rnd.normal(4, 3, 3, 2) * 2 + 0.5
    gamma, beta = rnd.normal(2) + 1.0, rnd.normal(2)
    r = rnd.normal(4, 3, 3, 2).astype(np.float64)
    zeros, ones = np.zeros(2, np.float32), np.ones(2, np.float32)
    _, cache, _, _ = L.batchnorm_forward(x, gamma, beta, zeros, ones, train=True)
    dx, dgamma, dbeta = L.batchnorm_backward(r.astype(np.float32), cache)
    x64, g64, b64 = (a.astype(np.float64) for a in (x, gamma, beta))
    z64, o64 = zeros.astype(np.float64), ones.astype(np.float64)
    f = lambda: _projection_loss(L.batchnorm_forward(x64, g64, b64, z64, o64, True)[0], r)
    return compare("batch_norm", {"dx": (dx, numeric_grad(f, x64)),
                                  "dgamma": (dgamma, numeric_grad(f, g64)),
                                  "dbeta": (dbeta, numeric_grad(f, b64))})


def check_maxpool(seed: int) -> CheckResult:
    """Inputs are a shuffled ramp, so every window has well separated values."""
    rng = SplitMix64(derive_seed(seed, "pool"))
    shape = (2, 7, 6, 3)
    n = int(np.prod(shape))
    x = (rng.permutation(n).astype(np.float32) / n).reshape(shape)
    r = _Rand(derive_seed(seed, "pool-proj")).normal(2, 3, 3, 3).astype(np.float64)
    _, arg = L.maxpool_forward(x)
    dx = L.maxpool_backward(arg, r.astype(np.float32), x.shape)
    x64 = x.astype(np.float64)
    f = lambda: _projection_loss(L.maxpool_forward(x64)[0], r)
    return compare("max_pool", {"dx": (dx, numeric_grad(f, x64, eps=1e-3 / n))})


def check_dense(seed: int) -> CheckResult:
    rnd = _Rand(derive_seed(seed, "dense"))
    x, w, b = rnd.normal(4, 7), rnd.normal(7, 5), rnd.normal(5)
    r = rnd.normal(4, 5).astype(np.float64)
    dx, dw, db = L.dense_backward(x, w, r.astype(np.float32))
    x64, w64, b64 = (a.astype(np.float64) for a in (x, w, b))
    f = lambda: _projection_loss(L.dense_forward(x64, w64, b64), r)
    return compare("dense", {"dx": (dx, numeric_grad(f, x64)),
                             "dw": (dw, numeric_grad(f, w64)),
                             "db": (db, numeric_grad(f, b64))})


def check_softmax_ce(seed: int) -> CheckResult:
    rnd = _Rand(derive_seed(seed, "softmax"))
    logits = rnd.normal(5, 6) * 2
    labels = (SplitMix64(derive_seed(seed, "labels")).u64_array(5) % np.uint64(6)).astype(np.int64)
    _, dlogits = L.softmax_cross_entropy(logits, labels)
    z64 = logits.astype(np.float64)
    f = lambda: float(L.softmax_cross_entropy(z64, labels)[0])
    return compare("softmax_ce", {"dlogits": (dlogits, numeric_grad(f, z64))})


def toy_arch() -> ArchConfig:
    return ArchConfig.toy(num_classes=3, input_hw=16, conv_widths=(4, 8))


def check_model(seed: int, arch: ArchConfig | None = None) -> CheckResult:
    """Whole-network check over every trainable parameter on a 2-sample batch."""
    arch = arch or toy_arch()
    model = build_model(arch, seed=seed)
    # Non-zero biases and BN affine params so their gradients are exercised.
    rnd = _Rand(derive_seed(seed, "model-params"))
    for key, value in model.trainable_parameters().items():
        if not key.endswith("/kernel"):
            model.set_parameter(key, (value + 0.1 * rnd.normal(*value.shape)).astype(np.float32))
    x = _Rand(derive_seed(seed, "model-x")).normal(2, arch.input_hw, arch.input_hw, arch.channels)
    labels = np.arange(2) % arch.num_classes
    model.set_mode("train")
    _, dlogits = L.softmax_cross_entropy(model.forward(x), labels)
    grads = model.backward(dlogits)

    m64 = model.astype(np.float64).set_mode("train")
    x64 = x.astype(np.float64)
    f = lambda: float(L.softmax_cross_entropy(m64.forward(x64), labels)[0])
    pairs = {key: (grads[key], numeric_grad(f, arr))
             for key, arr in m64.trainable_parameters().items()}
    return compare("toy_model", pairs)


LAYER_CHECKS = {
    "conv2d": check_conv,
    "batch_norm": check_batchnorm,
    "max_pool": check_maxpool,
    "dense": check_dense,
    "softmax_ce": check_softmax_ce,
}


def run_suite(seed: int = 0, corrupt_conv: bool = False) -> list[CheckResult]:
    results = []
    for name, fn in LAYER_CHECKS.items():
        results.append(fn(seed, corrupt=True) if name == "conv2d" and corrupt_conv else fn(seed))
    results.append(check_model(seed))
    return results
