"""Numba-jitted implementations of the hot numeric kernels.

Same association order as the numpy fallback: adjacent-pair tree
reductions, multiply-then-add accumulation, no fastmath (so LLVM cannot
contract to FMA and reorder). Transcendentals may differ from numpy's
SIMD routines in the last ulp; cross-backend agreement is tested at
1e-12 relative, within-backend results are bit-stable.
"""

import numpy as np
from numba import njit

NAME = "numba"

PHI_SQUARE = 0
PHI_XLOGX = 1
PHI_POWER = 2

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def _tree_sum_inplace(buf):
    m = buf.size
    if m == 0:
        return 0.0
    while m > 1:
        half = m // 2
        for i in range(half):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if m & 1:
            buf[half] = buf[m - 1]
            m = half + 1
        else:
            m = half
    return buf[0]


@njit(**_JIT)
def tree_sum(x):
    buf = x.copy().ravel()
    return _tree_sum_inplace(buf)


@njit(**_JIT)
def weighted_sum(w, v):
    buf = w * v
    return _tree_sum_inplace(buf)


@njit(**_JIT)
def mean(x):
    return tree_sum(x) / x.size


@njit(**_JIT)
def second_moment(x):
    buf = x * x
    return _tree_sum_inplace(buf.ravel()) / x.size


@njit(**_JIT)
def variance(x):
    m = tree_sum(x) / x.size
    buf = (x - m) * (x - m)
    return _tree_sum_inplace(buf.ravel()) / x.size


@njit(**_JIT)
def log_mean_exp(x):
    s = x[0]
    for i in range(1, x.size):
        if x[i] > s:
            s = x[i]
    buf = np.exp(x - s)
    return s + np.log(_tree_sum_inplace(buf) / x.size)


@njit(**_JIT)
def phi_values(kind, p, t):
    out = np.empty_like(t)
    if kind == PHI_SQUARE:
        for i in range(t.size):
            out[i] = t[i] * t[i]
    elif kind == PHI_XLOGX:
        for i in range(t.size):
            out[i] = t[i] * np.log(t[i])
    else:
        for i in range(t.size):
            out[i] = (t[i] ** p - 1.0) / (p - 1.0)
    return out


@njit(**_JIT)
def phi_entropy_core(kind, p, w, v):
    ev = weighted_sum(w, v)
    ephi = weighted_sum(w, phi_values(kind, p, v))
    if kind == PHI_SQUARE:
        at_mean = ev * ev
    elif kind == PHI_XLOGX:
        at_mean = ev * np.log(ev)
    else:
        at_mean = (ev ** p - 1.0) / (p - 1.0)
    return ephi - at_mean


@njit(**_JIT)
def entropy_core(v):
    n = v.size
    ev = tree_sum(v) / n
    buf = v * np.log(v)
    evlogv = _tree_sum_inplace(buf) / n
    return evlogv - ev * np.log(ev)


@njit(**_JIT)
def affine_apply(x, a):
    n, d = x.shape
    k = a.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        for r in range(k):
            acc = x[i, 0] * a[r, 0]
            for j in range(1, d):
                acc = acc + x[i, j] * a[r, j]
            out[i, r] = acc
    return out


@njit(**_JIT)
def affine_chain(x0, a, noise, out):
    x = x0.copy()
    k_max = noise.shape[0]
    n, d = x.shape
    for k in range(k_max):
        x = affine_apply(x, a)
        for i in range(n):
            for j in range(d):
                x[i, j] = x[i, j] + noise[k, i, j]
                out[k, i, j] = x[i, j]
    return x
