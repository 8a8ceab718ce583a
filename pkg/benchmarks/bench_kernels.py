"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Times im2col/col2im, 2x2 max-pool forward/backward, the bilinear affine
warp, and one full training step of the reference network on a small batch.
"""
from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from patchgarb import _kernels_py, kernels
from patchgarb.nn import ArchConfig, OptimizerState, build_model, optimizer_step
from patchgarb.nn.layers import softmax_cross_entropy
from patchgarb.numeric import thread_limits


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def train_step(model, state, x, y):
    logits = model.forward(x)
    _, d = softmax_cross_entropy(logits, y)
    optimizer_step(model, model.backward(d), state)


def cases():
    r = np.random.default_rng(0)
    x = r.standard_normal((8, 112, 112, 32)).astype(np.float32)
    cols = r.standard_normal((8, 112, 112, 288)).astype(np.float32)
    img = r.random((224, 224, 3), dtype=np.float32)
    m = np.array([[0.9, -0.35], [0.3, 1.05]])
    _, arg = _kernels_py.maxpool2x2(x)
    dy = r.standard_normal(arg.shape).astype(np.float32)
    return {
        "im2col 8x112x112x32": lambda k: k.im2col3x3(x),
        "col2im 8x112x112x32": lambda k: k.col2im3x3(cols, 32),
        "maxpool fwd": lambda k: k.maxpool2x2(x),
        "maxpool bwd": lambda k: k.maxpool2x2_backward(arg, dy, 112, 112),
        "affine warp 224x224x3": lambda k: k.affine_warp(img, m),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats (default: 5)")
    args = parser.parse_args(argv)
    try:
        compiled = importlib.import_module("patchgarb._kernels")
    except ImportError:
        compiled = None
        print("compiled extension not built; timing the numpy fallback only")
    backends = {"python": _kernels_py}
    if compiled is not None:
        backends["cython"] = compiled

    print(f"{'kernel':<26}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    with thread_limits(1):
        for name, fn in cases().items():
            t = {b: best_of(lambda: fn(k), args.repeat) for b, k in backends.items()}
            speed = f"{t['python'] / t['cython']:.1f}x" if "cython" in t else "-"
            print(f"{name:<26}" + "".join(f"{v * 1e3:>10.2f}ms" for v in t.values()) + f"{speed:>10}")

        arch = ArchConfig()
        x = np.random.default_rng(1).random((4, 224, 224, 3), dtype=np.float32)
        y = np.arange(4) % 6
        t = {}
        for b, k in backends.items():
            kernels._impl = k
            model, state = build_model(arch, 0), OptimizerState()
            t[b] = best_of(lambda: train_step(model, state, x, y), max(1, args.repeat // 2))
        kernels._impl = compiled or _kernels_py
        speed = f"{t['python'] / t['cython']:.1f}x" if "cython" in t else "-"
        print(f"{'train step (ref net, N=4)':<26}"
              + "".join(f"{v * 1e3:>10.0f}ms" for v in t.values()) + f"{speed:>10}")


if __name__ == "__main__":
    main()
