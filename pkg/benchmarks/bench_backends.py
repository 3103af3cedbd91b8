"""Time the numba backend against the pure-numpy fallback.

Runs each hot kernel on both implementations, reports wall time and the
worst relative disagreement. Invoke from the repo root:

    python3 benchmarks/bench_backends.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from twoscale.backend import numpy_impl

try:
    from twoscale.backend import numba_impl
except ImportError:
    numba_impl = None


def _timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _rel_diff(a, b):
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    scale = np.maximum(np.abs(a), 1e-300)
    return float(np.max(np.abs(a - b) / scale))


def make_cases(rng):
    x_big = rng.standard_normal(1_000_000)
    w = rng.random(1_000_000)
    w /= w.sum()
    v = rng.uniform(0.1, 5.0, 1_000_000)
    small_w = rng.random(64)
    small_w /= small_w.sum()
    small_v = rng.uniform(0.1, 5.0, 64)
    x0 = rng.standard_normal((10_000, 2))
    a = np.array([[0.9, 0.05], [0.0, 0.85]])
    noise = rng.standard_normal((200, 10_000, 2))
    probes = rng.standard_normal(100_000)

    def chain(impl):
        out = np.empty_like(noise)
        impl.affine_chain(x0, a, noise, out)
        return out[-1]

    def small_entropy(impl):
        # 10^4 tiny reductions: models the randomized identity suites
        acc = 0.0
        for _ in range(10_000):
            acc += impl.phi_entropy_core(impl.PHI_XLOGX, 0.0, small_w, small_v)
        return acc

    return [
        ("tree_sum 1e6", lambda impl: impl.tree_sum(x_big)),
        ("variance 1e6", lambda impl: impl.variance(x_big)),
        ("xlogx entropy 1e6 atoms",
         lambda impl: impl.phi_entropy_core(impl.PHI_XLOGX, 0.0, w, v)),
        ("entropy_core 1e6", lambda impl: impl.entropy_core(v)),
        ("log_mean_exp 1e5", lambda impl: impl.log_mean_exp(probes)),
        ("affine_chain 1e4x200x2", chain),
        ("1e4 small entropies (64 atoms)", small_entropy),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = make_cases(rng)

    if numba_impl is not None:
        for name, fn in cases:
            fn(numba_impl)  # compile outside the timed region

    header = f"{'kernel':32s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>9s} {'max rel diff':>14s}"
    print(header)
    print("-" * len(header))
    for name, fn in cases:
        t_np, out_np = _timeit(lambda: fn(numpy_impl), args.repeat)
        if numba_impl is None:
            print(f"{name:32s} {1e3 * t_np:12.3f} {'n/a':>12s} {'n/a':>9s} {'n/a':>14s}")
            continue
        t_nb, out_nb = _timeit(lambda: fn(numba_impl), args.repeat)
        print(f"{name:32s} {1e3 * t_np:12.3f} {1e3 * t_nb:12.3f} "
              f"{t_np / t_nb:8.1f}x {_rel_diff(out_np, out_nb):14.2e}")
    if numba_impl is None:
        print("\nnumba unavailable; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
