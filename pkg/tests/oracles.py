"""Slow, obviously-correct reference implementations used as test oracles."""
import numpy as np


def naive_conv(x, w, b):
    """Direct 6-loop 3x3 same-padding convolution in float64."""
    n, h, wd, cin = x.shape
    cout = w.shape[3]
    y = np.zeros((n, h, wd, cout))
    for i in range(n):
        for r in range(h):
            for c in range(wd):
                for o in range(cout):
                    s = float(b[o])
                    for di in range(3):
                        for dj in range(3):
                            rr, cc = r + di - 1, c + dj - 1
                            if 0 <= rr < h and 0 <= cc < wd:
                                s += float(np.dot(x[i, rr, cc, :].astype(np.float64),
                                                  w[di, dj, :, o]))
                    y[i, r, c, o] = s
    return y


def naive_maxpool(x):
    n, h, w, c = x.shape
    y = np.zeros((n, h // 2, w // 2, c), x.dtype)
    for i in range(n):
        for r in range(h // 2):
            for col in range(w // 2):
                for ch in range(c):
                    best = x[i, 2 * r, 2 * col, ch]
                    for di, dj in ((0, 1), (1, 0), (1, 1)):
                        v = x[i, 2 * r + di, 2 * col + dj, ch]
                        if v > best:
                            best = v
                    y[i, r, col, ch] = best
    return y


def naive_matmul(a, b):
    m, k = a.shape
    out = np.zeros((m, b.shape[1]))
    for i in range(m):
        for j in range(b.shape[1]):
            s = 0.0
            for t in range(k):
                s += float(a[i, t]) * float(b[t, j])
            out[i, j] = s
    return out
