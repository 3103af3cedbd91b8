"""Iterated sampling chains producing per-iteration point clouds.

Each of the three algorithms advances N independent chains; the cloud
at iteration k therefore holds N i.i.d. draws from the k-th iterate
law. Chain i draws exclusively from the counter-based stream
(seed, chains, i), so output is a pure function of (seed, config):
identical across runs and across worker-thread counts. Chains are
processed in fixed-size blocks; worker threads write disjoint slices
of preallocated arrays, and assembly order never depends on
scheduling.

For quadratic potentials every algorithm is an affine-Gaussian map

    x' = A x + noise,     noise ~ N(0, S_noise),

so the exact iterate law is available by covariance propagation
(``analytic_law``) and is attached to each cloud.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import backend as be
from . import kernels, linalg, rng as rngmod
from .errors import BadConfigError, LawUnavailableError

BLOCK = 1024


@dataclass(frozen=True)
class ULA:
    eta: float

    def __post_init__(self):
        if self.eta <= 0:
            raise BadConfigError("eta must be positive")


@dataclass(frozen=True)
class Proximal:
    eta: float

    def __post_init__(self):
        if self.eta <= 0:
            raise BadConfigError("eta must be positive")


@dataclass(frozen=True)
class EHMC:
    c: float

    def __post_init__(self):
        if self.c < 2.0:
            raise BadConfigError("need c >= 2")


@dataclass(frozen=True)
class GaussianInit:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=np.float64)))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        linalg.spd_eigh(cov)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class DiracInit:
    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.atleast_1d(np.asarray(self.point, dtype=np.float64)))


@dataclass(frozen=True)
class ChainConfig:
    algorithm: object            # ULA | Proximal | EHMC
    target: object               # potential from .kernels
    n_chains: int
    n_iters: int
    init: object                 # GaussianInit | DiracInit

    def __post_init__(self):
        if self.n_chains < 1:
            raise BadConfigError("n_chains must be >= 1")
        if self.n_iters < 0:
            raise BadConfigError("n_iters must be >= 0")
        d = self.target.dim
        if isinstance(self.init, GaussianInit):
            if self.init.mean.shape != (d,) or self.init.cov.shape != (d, d):
                raise BadConfigError("init moments must match the target dimension")
        elif isinstance(self.init, DiracInit):
            if self.init.point.shape != (d,):
                raise BadConfigError("init point must match the target dimension")
        else:
            raise BadConfigError("init must be GaussianInit or DiracInit")
        if isinstance(self.algorithm, EHMC) and not isinstance(self.target, kernels.Quadratic):
            raise BadConfigError("the exact HMC flow is closed-form for quadratic targets only")


@dataclass(frozen=True)
class SampleCloud:
    """N points in R^d at one iteration, with RNG provenance."""

    points: np.ndarray
    iteration: int
    seed: int
    stream_count: int
    law: Optional[tuple] = None    # (mean, cov) when closed form exists

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


# ---------------------------------------------------------------------------
# Affine step structure for quadratic targets


@dataclass(frozen=True)
class _AffineStep:
    a: np.ndarray                     # x' = a x + sum_j b_j g_j
    noise_mats: tuple                 # each (d, d)

    @property
    def noise_cov(self):
        d = self.a.shape[0]
        s = np.zeros((d, d))
        for b in self.noise_mats:
            s = s + b @ b.T
        return s


def _affine_step(config):
    target, alg = config.target, config.algorithm
    if not isinstance(target, kernels.Quadratic):
        return None
    d = target.dim
    eye = np.eye(d)
    if isinstance(alg, ULA):
        a = eye - alg.eta * target.matrix
        return _AffineStep(a, (np.sqrt(2.0 * alg.eta) * eye,))
    if isinstance(alg, Proximal):
        lam_mat = target.matrix + eye / alg.eta
        w, q = linalg.spd_eigh(lam_mat)
        post_cov = linalg.sym_apply(w, q, lambda t: 1.0 / t)
        sqrt_post = linalg.sym_apply(w, q, lambda t: 1.0 / np.sqrt(t))
        a = post_cov / alg.eta
        return _AffineStep(a, (np.sqrt(alg.eta) * a, sqrt_post))
    if isinstance(alg, EHMC):
        t = 1.0 / (alg.c * np.sqrt(target.lam))
        w, q = target.eigvals, target.eigvecs
        z = np.sqrt(w) * t
        a = linalg.sym_apply(w, q, lambda _: np.cos(z))
        flow = linalg.sym_apply(w, q, lambda _: t * linalg.sinc(z))
        return _AffineStep(a, (flow,))
    raise BadConfigError(f"unknown algorithm {type(alg).__name__}")


def ehmc_time(config):
    """Integration time implied by the c parameter and the target."""
    if not isinstance(config.algorithm, EHMC):
        raise BadConfigError("not an exact-HMC configuration")
    return 1.0 / (config.algorithm.c * np.sqrt(config.target.lam))


def analytic_law(config, k):
    """Exact (mean, cov) of iterate k for quadratic targets, else None."""
    step = _affine_step(config)
    if step is None:
        return None
    if isinstance(config.init, DiracInit):
        mean = config.init.point.copy()
        cov = np.zeros((config.target.dim, config.target.dim))
    else:
        mean = config.init.mean.copy()
        cov = config.init.cov.copy()
    a, s_noise = step.a, step.noise_cov
    for _ in range(int(k)):
        mean = a @ mean
        cov = a @ cov @ a.T + s_noise
    return mean, cov


def stationary_covariance(config):
    """Limit covariance: geometric series sum_j A^j S (A^j)^T (commuting case)."""
    step = _affine_step(config)
    if step is None:
        raise LawUnavailableError("no closed-form law for this target")
    w, q = config.target.eigvals, config.target.eigvecs
    a_eigs = np.diag(q.T @ step.a @ q)
    if np.max(np.abs(a_eigs)) >= 1.0:
        raise LawUnavailableError("step map is not a contraction; no stationary law")
    s_eigs = np.diag(q.T @ step.noise_cov @ q)
    return linalg.sym_apply(w, q, lambda _: s_eigs / (1.0 - a_eigs * a_eigs))


# ---------------------------------------------------------------------------
# Chain execution


def _run_block_affine(config, step, seed, lo, hi, out):
    """Advance chains [lo, hi); writes iterates into out[k][lo:hi]."""
    factory = rngmod.StreamFactory(seed, rngmod.DOMAIN_CHAINS)
    d = config.target.dim
    n_iters = config.n_iters
    ids = range(lo, hi)
    bn = hi - lo
    n_noise = len(step.noise_mats)

    # Per-chain draws in a fixed order: init first, then per iteration
    # one vector per noise matrix. All draws for a chain come from its
    # own stream in one pass.
    raw = np.empty((bn, n_iters, n_noise, d))
    if isinstance(config.init, DiracInit):
        x = np.tile(config.init.point, (bn, 1))
        for i, cid in enumerate(ids):
            raw[i] = factory.normals(cid, (n_iters, n_noise, d))
    else:
        sqrt_cov = linalg.sym_apply(*linalg.spd_eigh(config.init.cov), np.sqrt)
        g0 = np.empty((bn, d))
        for i, cid in enumerate(ids):
            gen = factory.generator(cid)
            g0[i] = gen.standard_normal(d)
            raw[i] = gen.standard_normal((n_iters, n_noise, d))
        x = config.init.mean[None, :] + be.affine_apply(g0, sqrt_cov)

    out[0][lo:hi] = x
    if n_iters == 0:
        return
    noise = np.zeros((n_iters, bn, d))
    for j, b in enumerate(step.noise_mats):
        for k in range(n_iters):
            noise[k] += be.affine_apply(np.ascontiguousarray(raw[:, k, j, :]), b)
    stacked = np.empty((n_iters, bn, d))
    be.affine_chain(x, step.a, noise, stacked)
    for k in range(n_iters):
        out[k + 1][lo:hi] = stacked[k]


def _run_block_generic(config, seed, lo, hi, out):
    """Python-level path for targets without an affine step (rejection etc.)."""
    factory = rngmod.StreamFactory(seed, rngmod.DOMAIN_CHAINS)
    alg = config.algorithm
    target = config.target
    d = target.dim
    if isinstance(alg, Proximal):
        _, backward = kernels.make_proximal_kernels(target, alg.eta)
        if backward.sampler is None:
            raise BadConfigError("backward kernel has no exact sampler for this target")
    for i, cid in enumerate(range(lo, hi)):
        gen = factory.generator(cid)
        if isinstance(config.init, DiracInit):
            x = config.init.point.copy()
        else:
            sqrt_cov = linalg.sym_apply(*linalg.spd_eigh(config.init.cov), np.sqrt)
            x = config.init.mean + sqrt_cov @ gen.standard_normal(d)
        out[0][cid] = x
        for k in range(config.n_iters):
            if isinstance(alg, ULA):
                g = gen.standard_normal(d)
                x = x - alg.eta * target.grad(x) + np.sqrt(2.0 * alg.eta) * g
            else:
                y = x + np.sqrt(alg.eta) * gen.standard_normal(d)
                x = backward.sample(y, gen, 1)[0]
            out[k + 1][cid] = x


def run_chains(config, seed, n_threads=1):
    """Run all chains; returns one SampleCloud per iteration (0..n_iters).

    Same (seed, config) gives bit-identical clouds for any n_threads.
    """
    n, d = config.n_chains, config.target.dim
    out = [np.empty((n, d)) for _ in range(config.n_iters + 1)]
    step = _affine_step(config)

    blocks = [(lo, min(lo + BLOCK, n)) for lo in range(0, n, BLOCK)]
    if step is not None:
        def work(blk):
            _run_block_affine(config, step, seed, blk[0], blk[1], out)
    else:
        def work(blk):
            _run_block_generic(config, seed, blk[0], blk[1], out)

    if n_threads <= 1 or len(blocks) == 1:
        for blk in blocks:
            work(blk)
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(work, blocks))

    clouds = []
    for k in range(config.n_iters + 1):
        law = analytic_law(config, k) if step is not None else None
        clouds.append(SampleCloud(out[k], k, int(seed), n, law))
    return clouds


def export_clouds_csv(clouds, path):
    """Write clouds as RFC-4180 CSV: iter,chain,dim0..dimK."""
    if not clouds:
        raise BadConfigError("nothing to export")
    d = clouds[0].dim
    header = ["iter", "chain"] + [f"dim{j}" for j in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for cloud in clouds:
            for i in range(cloud.n):
                row = [cloud.iteration, i] + [format(x, ".17g") for x in cloud.points[i]]
                w.writerow(row)
