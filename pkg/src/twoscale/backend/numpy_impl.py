"""Pure-numpy implementations of the hot numeric kernels.

Every reduction uses a fixed binary-tree association order (adjacent
pairs, odd leftover carried to the next round) so results are bit-stable
across runs and thread counts, and so the numba backend can reproduce
the same order. Tree summation keeps rounding error at O(eps * log n),
which is what makes the 1e-12 identity tolerances reachable at 1e6 atoms.
"""

import numpy as np

NAME = "numpy"

PHI_SQUARE = 0
PHI_XLOGX = 1
PHI_POWER = 2


def tree_sum(x):
    """Sum of a 1-d float64 array in fixed pairwise order."""
    buf = np.ascontiguousarray(x, dtype=np.float64).ravel().copy()
    m = buf.size
    if m == 0:
        return 0.0
    while m > 1:
        half = m // 2
        buf[:half] = buf[0:2 * half:2] + buf[1:2 * half:2]
        if m & 1:
            buf[half] = buf[m - 1]
            m = half + 1
        else:
            m = half
    return float(buf[0])


def weighted_sum(w, v):
    """sum_i w_i * v_i in fixed pairwise order."""
    return tree_sum(np.asarray(w, dtype=np.float64) * np.asarray(v, dtype=np.float64))


def mean(x):
    n = np.asarray(x).size
    return tree_sum(x) / n


def second_moment(x):
    """mean(x^2) in fixed pairwise order."""
    x = np.asarray(x, dtype=np.float64)
    return tree_sum(x * x) / x.size


def variance(x):
    """Two-pass population variance, mean and residuals both tree-reduced."""
    x = np.asarray(x, dtype=np.float64)
    m = tree_sum(x) / x.size
    r = x - m
    return tree_sum(r * r) / x.size


def log_mean_exp(x):
    """log(mean(exp(x))) with max shift; tree-reduced."""
    x = np.asarray(x, dtype=np.float64)
    s = float(np.max(x))
    return s + np.log(tree_sum(np.exp(x - s)) / x.size)


def phi_values(kind, p, t):
    """Elementwise Phi(t) for kind in {square, xlogx, power(p)}."""
    t = np.asarray(t, dtype=np.float64)
    if kind == PHI_SQUARE:
        return t * t
    if kind == PHI_XLOGX:
        return t * np.log(t)
    return (np.power(t, p) - 1.0) / (p - 1.0)


def phi_entropy_core(kind, p, w, v):
    """E_w[Phi(v)] - Phi(E_w[v]) over a finite distribution."""
    ev = weighted_sum(w, v)
    ephi = weighted_sum(w, phi_values(kind, p, v))
    if kind == PHI_SQUARE:
        at_mean = ev * ev
    elif kind == PHI_XLOGX:
        at_mean = ev * np.log(ev)
    else:
        at_mean = (ev ** p - 1.0) / (p - 1.0)
    return ephi - at_mean


def entropy_core(v):
    """ent(v) = mean(v log v) - mean(v) log(mean(v)) for positive v."""
    v = np.asarray(v, dtype=np.float64)
    n = v.size
    ev = tree_sum(v) / n
    evlogv = tree_sum(v * np.log(v)) / n
    return evlogv - ev * np.log(ev)


def affine_apply(x, a):
    """x @ a.T for small trailing dimension, fixed accumulation order.

    Avoids BLAS so elementwise op order matches the numba backend
    (column j accumulated in increasing j, multiply then add, no FMA).
    """
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    n, d = x.shape
    k = a.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    for r in range(k):
        acc = x[:, 0] * a[r, 0]
        for j in range(1, d):
            acc = acc + x[:, j] * a[r, j]
        out[:, r] = acc
    return out


def affine_chain(x0, a, noise, out):
    """Iterate x_{k+1} = x_k @ a.T + noise[k], storing every iterate.

    x0:    (n, d) initial points (not written to out)
    noise: (k_max, n, d) pre-scaled noise increments
    out:   (k_max, n, d) output buffer, out[k] receives x_{k+1}
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    k_max = noise.shape[0]
    for k in range(k_max):
        x = affine_apply(x, a) + noise[k]
        out[k] = x
    return x
