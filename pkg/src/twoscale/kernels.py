"""Conditional kernels of sampling algorithms and their score identities.

A conditional family is the collection {P_{X|Y=y}} with densities
proportional to exp(-G(x, y)). Its y-score

    score(x, y) = grad_y log p_{X|Y=y}(x) = E_{P_y}[grad_y G] - grad_y G(x, y)

has mean zero under P_y, and for Gaussian kernels with mean map m(y)
and constant covariance S it reduces to the affine form

    score(x, y) = J(y)^T S^{-1} (x - m(y)),        J = dm/dy,

so its covariance J^T S^{-1} J is available in closed form. Three
concrete kernels are provided:

* one step of the unadjusted Langevin algorithm:
      N(y - eta * grad V(y), 2 eta I)
* the proximal sampler's Gaussian coupling (forward) and its posterior
  (backward), exact for quadratic potentials and exact-by-rejection for
  bounded perturbations of a quadratic
* the Gaussian-flow kernel of exact Hamiltonian Monte Carlo on a
  quadratic potential: N(cos(sqrt(M) T) y, T^2 phi(sqrt(M) T)) with
  phi(z) = (sin(z)/z)^2.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import backend as be
from . import linalg
from .errors import (
    BadStepError,
    DomainError,
    RejectionInfeasibleError,
    SamplerUnavailableError,
)

# ---------------------------------------------------------------------------
# Target potentials


@dataclass(frozen=True)
class Quadratic:
    """V(x) = x^T M x / 2 with M symmetric positive-definite."""

    matrix: np.ndarray
    eigvals: np.ndarray = field(init=False, repr=False)
    eigvecs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=np.float64))
        w, q = linalg.spd_eigh(m)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "eigvals", w)
        object.__setattr__(self, "eigvecs", q)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def mu(self):
        """Strong-convexity constant (smallest eigenvalue)."""
        return float(self.eigvals[0])

    @property
    def lam(self):
        """Smoothness constant (largest eigenvalue)."""
        return float(self.eigvals[-1])

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        mx = x @ self.matrix.T
        return 0.5 * np.sum(x * mx, axis=-1)

    def grad(self, x):
        return np.asarray(x, dtype=np.float64) @ self.matrix.T

    def hessian(self, x):
        return self.matrix


@dataclass(frozen=True)
class QuadraticPlusBounded:
    """V = quadratic + bounded perturbation with osc(perturbation) <= bound.

    ``inf_value`` (a certified lower bound of the perturbation) enables
    the exact rejection sampler for the proximal backward kernel; without
    it the envelope cannot be certified.
    """

    base: Quadratic
    perturbation: Callable
    perturbation_grad: Callable
    bound: float
    inf_value: Optional[float] = None
    perturbation_hess: Optional[Callable] = None

    def __post_init__(self):
        if self.bound < 0:
            raise DomainError("oscillation bound must be nonnegative")

    @property
    def dim(self):
        return self.base.dim

    @property
    def mu(self):
        return self.base.mu

    def value(self, x):
        return self.base.value(x) + self.perturbation(np.asarray(x, dtype=np.float64))

    def grad(self, x):
        return self.base.grad(x) + self.perturbation_grad(np.asarray(x, dtype=np.float64))

    def hessian(self, x):
        if self.perturbation_hess is None:
            raise SamplerUnavailableError("no Hessian declared for the perturbation")
        return self.base.matrix + self.perturbation_hess(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class QuadraticPlusLipschitz:
    """V = quadratic + L-Lipschitz perturbation."""

    base: Quadratic
    perturbation: Callable
    perturbation_grad: Callable
    lipschitz: float
    perturbation_hess: Optional[Callable] = None

    def __post_init__(self):
        if self.lipschitz < 0:
            raise DomainError("Lipschitz constant must be nonnegative")

    @property
    def dim(self):
        return self.base.dim

    @property
    def mu(self):
        return self.base.mu

    def value(self, x):
        return self.base.value(x) + self.perturbation(np.asarray(x, dtype=np.float64))

    def grad(self, x):
        return self.base.grad(x) + self.perturbation_grad(np.asarray(x, dtype=np.float64))

    def hessian(self, x):
        if self.perturbation_hess is None:
            raise SamplerUnavailableError("no Hessian declared for the perturbation")
        return self.base.matrix + self.perturbation_hess(np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# Conditional families


@dataclass(frozen=True)
class GaussianKernelSpec:
    """x | y ~ N(mean_map(y), covariance), covariance constant in y."""

    mean_map: Callable
    mean_jacobian: Callable
    covariance: np.ndarray
    constant_jacobian: bool = False

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        w, q = linalg.spd_eigh(cov)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "sqrt_cov", linalg.sym_apply(w, q, np.sqrt))
        object.__setattr__(self, "precision", linalg.sym_apply(w, q, lambda t: 1.0 / t))
        object.__setattr__(self, "_logdet", float(np.sum(np.log(w))))

    @property
    def dim(self):
        return self.covariance.shape[0]

    def sample(self, y, rng, n):
        g = rng.standard_normal((n, self.dim))
        return self.mean_map(y)[None, :] + g @ self.sqrt_cov.T

    def log_density(self, x, y):
        """Normalised log density; the normaliser does not depend on y."""
        r = np.atleast_2d(x) - self.mean_map(y)[None, :]
        quad = np.sum((r @ self.precision) * r, axis=-1)
        out = -0.5 * quad - 0.5 * (self.dim * np.log(2 * np.pi) + self._logdet)
        return out if np.asarray(x).ndim > 1 else float(out[0])

    def score(self, x, y):
        """grad_y log p(x | y) = J(y)^T S^{-1} (x - m(y))."""
        r = np.atleast_2d(x) - self.mean_map(y)[None, :]
        out = (r @ self.precision) @ self.mean_jacobian(y)
        return out if np.asarray(x).ndim > 1 else out[0]

    def score_cov(self, y):
        j = self.mean_jacobian(y)
        return j.T @ self.precision @ j


@dataclass(frozen=True)
class KernelMeta:
    """Closed-form constants attached to a kernel when known."""

    beta: Optional[float] = None          # Phi-Sobolev constant of each P_y
    beta_kind: Optional[str] = None       # 'PI' or 'LSI'
    grad_lipschitz: Optional[float] = None  # Lipschitz const of x -> grad_y G
    var_L_bar: Optional[float] = None
    mgf_L_bar: Optional[float] = None
    contraction: Optional[float] = None   # c_ULA, beta/eta, or max |cos|
    mean_score_zero: bool = True


@dataclass(frozen=True)
class ConditionalFamily:
    """A kernel y -> P_{X|Y=y} with density ~ exp(-G(x, y)).

    ``g`` and ``grad_y_g`` evaluate G and its gradient in the
    conditioning variable at single points. ``sampler(y, rng, n)``
    returns (n, dim_x) exact draws when available. ``grad_y_g_mean``
    is the analytic E_{P_y}[grad_y G(., y)] when known, which makes
    the score exact; ``gaussian`` carries the affine structure when
    the kernel is Gaussian with constant covariance.
    """

    dim_x: int
    dim_y: int
    g: Callable
    grad_y_g: Callable
    sampler: Optional[Callable] = None
    gaussian: Optional[GaussianKernelSpec] = None
    grad_y_g_mean: Optional[Callable] = None
    meta: KernelMeta = field(default_factory=KernelMeta)

    def sample(self, y, rng, n):
        if self.sampler is None:
            raise SamplerUnavailableError("this family has no exact sampler")
        return self.sampler(np.asarray(y, dtype=np.float64), rng, int(n))

    def score_cov(self, y):
        if self.gaussian is None:
            raise SamplerUnavailableError("score covariance needs a Gaussian kernel")
        return self.gaussian.score_cov(np.asarray(y, dtype=np.float64))


def score_in_y(family, x, y, n_mc=10_000, rng=None, force_mc=False):
    """y-score at (x, y): E_{P_y}[grad_y G] - grad_y G(x, y).

    Uses the family's analytic expectation when declared; otherwise (or
    when force_mc is set) a Monte Carlo mean over n_mc exact draws.
    grad_y G supports batches of x (leading axis), so the MC mean is
    one vectorised call.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if family.grad_y_g_mean is not None and not force_mc:
        m = family.grad_y_g_mean(y)
    else:
        if family.sampler is None:
            raise SamplerUnavailableError(
                "score needs either an analytic mean or an exact sampler"
            )
        if rng is None:
            raise SamplerUnavailableError("Monte Carlo score needs an rng")
        draws = family.sample(y, rng, n_mc)
        vals = family.grad_y_g(draws, y)
        m = np.array([be.mean(np.ascontiguousarray(vals[:, j]))
                      for j in range(vals.shape[1])])
    return m - family.grad_y_g(x, y)


def expectation_gradient(family, psi, y, n_mc=10_000, rng=None):
    """Monte Carlo estimate of grad_y E_{P_y}[psi(x, y)].

    Uses the two-term identity

        grad M(y) = E[score(x, y) psi(x, y)] + E[grad_y psi(x, y)]

    with both expectations estimated from the same n_mc draws. ``psi``
    must provide vectorised ``value(x, y)`` and ``grad_y(x, y)``.
    """
    y = np.asarray(y, dtype=np.float64)
    if family.sampler is None:
        raise SamplerUnavailableError("expectation_gradient needs an exact sampler")
    if rng is None:
        raise SamplerUnavailableError("expectation_gradient needs an rng")
    draws = family.sample(y, rng, n_mc)
    if family.grad_y_g_mean is not None:
        mean_grad_g = family.grad_y_g_mean(y)
    else:
        vals = family.grad_y_g(draws, y)
        mean_grad_g = np.array([be.mean(np.ascontiguousarray(vals[:, j]))
                                for j in range(vals.shape[1])])
    scores = mean_grad_g[None, :] - family.grad_y_g(draws, y)
    psi_vals = psi.value(draws, y)
    term1 = np.array([be.mean(np.ascontiguousarray(scores[:, j] * psi_vals))
                      for j in range(scores.shape[1])])
    grads = psi.grad_y(draws, y)
    term2 = np.array([be.mean(np.ascontiguousarray(grads[:, j]))
                      for j in range(grads.shape[1])])
    return term1 + term2


# ---------------------------------------------------------------------------
# Kernel constructors


def make_ula_kernel(target, eta):
    """One Langevin step from y: N(y - eta * grad V(y), 2 eta I)."""
    if eta <= 0:
        raise BadStepError(f"step size must be positive, got {eta}")
    d = target.dim
    eye = np.eye(d)

    def mean_map(y):
        return y - eta * target.grad(y)

    if isinstance(target, Quadratic):
        jac_const = eye - eta * target.matrix

        def mean_jacobian(y):
            return jac_const

        constant_jac = True
        c_ula = ula_contraction(target.mu, target.lam, eta)
        l_bar = c_ula / np.sqrt(2.0 * eta)
        meta = KernelMeta(
            beta=2.0 * eta,
            beta_kind="LSI",
            grad_lipschitz=c_ula / (2.0 * eta),
            var_L_bar=l_bar,
            mgf_L_bar=l_bar,
            contraction=c_ula,
        )
    else:
        def mean_jacobian(y):
            return eye - eta * np.atleast_2d(target.hessian(y))

        constant_jac = False
        meta = KernelMeta(beta=2.0 * eta, beta_kind="LSI")

    spec = GaussianKernelSpec(mean_map, mean_jacobian, 2.0 * eta * eye,
                              constant_jacobian=constant_jac)

    def g(x, y):
        r = np.atleast_2d(x) - mean_map(y)[None, :]
        out = np.sum(r * r, axis=-1) / (4.0 * eta)
        return out if np.asarray(x).ndim > 1 else float(out[0])

    def grad_y_g(x, y):
        r = np.atleast_2d(x) - mean_map(y)[None, :]
        out = -(r @ mean_jacobian(y)) / (2.0 * eta)
        return out if np.asarray(x).ndim > 1 else out[0]

    return ConditionalFamily(
        dim_x=d, dim_y=d, g=g, grad_y_g=grad_y_g,
        sampler=spec.sample, gaussian=spec,
        grad_y_g_mean=lambda y: np.zeros(d), meta=meta,
    )


def ula_contraction(mu, lam, eta):
    """c = max{|1 - eta*lam|, |1 - eta*mu|} for mu I <= hess V <= lam I."""
    if eta <= 0:
        raise BadStepError(f"step size must be positive, got {eta}")
    if not 0 < mu <= lam:
        raise DomainError("need 0 < mu <= lam")
    return max(abs(1.0 - eta * lam), abs(1.0 - eta * mu))


def make_proximal_kernels(target, eta):
    """(forward, backward) kernels of the proximal sampler at step eta.

    forward:  y' | x  ~ N(x, eta I)
    backward: x | y'  with density ~ exp(-(V(x) + ||y' - x||^2 / (2 eta)))

    The backward sampler is the exact Gaussian posterior for quadratic V
    and an exact rejection sampler for bounded perturbations (envelope
    certified by the perturbation's inf_value); for Lipschitz
    perturbations no exact oracle exists, so backward has no sampler.
    """
    if eta <= 0:
        raise BadStepError(f"step size must be positive, got {eta}")
    d = target.dim
    eye = np.eye(d)

    fwd_spec = GaussianKernelSpec(lambda y: y.astype(np.float64),
                                  lambda y: eye, eta * eye,
                                  constant_jacobian=True)

    def fwd_g(x, y):
        r = np.atleast_2d(x) - np.asarray(y, dtype=np.float64)[None, :]
        out = np.sum(r * r, axis=-1) / (2.0 * eta)
        return out if np.asarray(x).ndim > 1 else float(out[0])

    def fwd_grad_y_g(x, y):
        r = np.asarray(y, dtype=np.float64)[None, :] - np.atleast_2d(x)
        out = r / eta
        return out if np.asarray(x).ndim > 1 else out[0]

    forward = ConditionalFamily(
        dim_x=d, dim_y=d, g=fwd_g, grad_y_g=fwd_grad_y_g,
        sampler=fwd_spec.sample, gaussian=fwd_spec,
        grad_y_g_mean=lambda y: np.zeros(d),
        meta=KernelMeta(beta=eta, beta_kind="LSI",
                        grad_lipschitz=1.0 / eta,
                        var_L_bar=eta ** -0.5, mgf_L_bar=eta ** -0.5),
    )

    def bwd_g(x, y):
        r = np.asarray(y, dtype=np.float64)[None, :] - np.atleast_2d(x)
        out = target.value(np.atleast_2d(x)) + np.sum(r * r, axis=-1) / (2.0 * eta)
        return out if np.asarray(x).ndim > 1 else float(out[0])

    def bwd_grad_y_g(x, y):
        r = np.asarray(y, dtype=np.float64)[None, :] - np.atleast_2d(x)
        out = r / eta
        return out if np.asarray(x).ndim > 1 else out[0]

    if isinstance(target, Quadratic):
        lam_mat = target.matrix + eye / eta  # posterior precision
        w, q = linalg.spd_eigh(lam_mat)
        post_cov = linalg.sym_apply(w, q, lambda t: 1.0 / t)
        jac = post_cov / eta

        bwd_spec = GaussianKernelSpec(
            lambda y: (y @ post_cov.T) / eta, lambda y: jac, post_cov,
            constant_jacobian=True,
        )
        beta = 1.0 / (target.mu + 1.0 / eta)
        backward = ConditionalFamily(
            dim_x=d, dim_y=d, g=bwd_g, grad_y_g=bwd_grad_y_g,
            sampler=bwd_spec.sample, gaussian=bwd_spec,
            grad_y_g_mean=lambda y: (y - (y @ post_cov.T) / eta) / eta,
            meta=KernelMeta(beta=beta, beta_kind="LSI",
                            grad_lipschitz=1.0 / eta,
                            mgf_L_bar=np.sqrt(beta) / eta,
                            contraction=beta / eta),
        )
        return forward, backward

    if isinstance(target, QuadraticPlusBounded):
        if target.inf_value is None:
            raise RejectionInfeasibleError(
                "rejection envelope needs inf_value of the bounded perturbation"
            )
        base_fwd, base_bwd = make_proximal_kernels(target.base, eta)
        base_spec = base_bwd.gaussian
        inf_value = float(target.inf_value)

        def rejection_sampler(y, rng, n):
            out = np.empty((n, d))
            for i in range(n):
                while True:
                    prop = base_spec.sample(y, rng, 1)[0]
                    log_acc = -(float(target.perturbation(prop)) - inf_value)
                    if log_acc > 0:
                        raise RejectionInfeasibleError(
                            "perturbation dips below its declared inf_value"
                        )
                    if rng.random() <= np.exp(log_acc):
                        out[i] = prop
                        break
            return out

        beta = np.exp(target.bound) / (target.mu + 1.0 / eta)
        backward = ConditionalFamily(
            dim_x=d, dim_y=d, g=bwd_g, grad_y_g=bwd_grad_y_g,
            sampler=rejection_sampler, gaussian=None,
            grad_y_g_mean=None,
            meta=KernelMeta(beta=beta, beta_kind="LSI",
                            grad_lipschitz=1.0 / eta,
                            mgf_L_bar=np.sqrt(beta) / eta,
                            contraction=beta / eta),
        )
        return forward, backward

    if isinstance(target, QuadraticPlusLipschitz):
        mu_eff = target.mu + 1.0 / eta
        lip = target.lipschitz
        beta = (1.0 / mu_eff) * np.exp(lip ** 2 / mu_eff + 4.0 * lip / np.sqrt(mu_eff))
        backward = ConditionalFamily(
            dim_x=d, dim_y=d, g=bwd_g, grad_y_g=bwd_grad_y_g,
            sampler=None, gaussian=None, grad_y_g_mean=None,
            meta=KernelMeta(beta=beta, beta_kind="LSI",
                            grad_lipschitz=1.0 / eta,
                            mgf_L_bar=np.sqrt(beta) / eta,
                            contraction=beta / eta),
        )
        return forward, backward

    raise DomainError(f"unsupported target type {type(target).__name__}")


def make_ehmc_kernel(m, t):
    """Gaussian-flow kernel of exact HMC on V(x) = x^T M x / 2.

    x | y ~ N(cos(sqrt(M) T) y, T^2 phi(sqrt(M) T)), phi(z) = (sin z / z)^2.
    The sampler runs the flow x = cos(sqrt(M) T) y + M^{-1/2} sin(sqrt(M) T) q
    with q ~ N(0, I); the two constructions coincide in law.
    """
    if t <= 0:
        raise BadStepError(f"integration time must be positive, got {t}")
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    w, q = linalg.spd_eigh(m)
    d = m.shape[0]
    z = np.sqrt(w) * t

    cos_mat = linalg.sym_apply(w, q, lambda _: np.cos(z))
    phi_z = linalg.phi_spectral(z)
    cov = linalg.sym_apply(w, q, lambda _: t * t * phi_z)
    flow_mat = linalg.sym_apply(w, q, lambda _: t * linalg.sinc(z))  # M^{-1/2} sin

    spec = GaussianKernelSpec(lambda y: y @ cos_mat.T, lambda y: cos_mat, cov,
                              constant_jacobian=True)

    def flow_sampler(y, rng, n):
        qdraw = rng.standard_normal((n, d))
        return y @ cos_mat.T + qdraw @ flow_mat.T

    prec = spec.precision

    def g(x, y):
        r = np.atleast_2d(x) - (np.asarray(y, dtype=np.float64) @ cos_mat.T)[None, :]
        out = 0.5 * np.sum((r @ prec) * r, axis=-1)
        return out if np.asarray(x).ndim > 1 else float(out[0])

    def grad_y_g(x, y):
        r = np.atleast_2d(x) - (np.asarray(y, dtype=np.float64) @ cos_mat.T)[None, :]
        out = -(r @ prec) @ cos_mat
        return out if np.asarray(x).ndim > 1 else out[0]

    beta = t * t * float(np.max(phi_z))
    lip = float(np.max(np.abs(np.cos(z)) / phi_z)) / (t * t)
    l_bar = np.sqrt(beta) * lip
    meta = KernelMeta(beta=beta, beta_kind="LSI", grad_lipschitz=lip,
                      var_L_bar=l_bar, mgf_L_bar=l_bar,
                      contraction=float(np.max(np.abs(np.cos(z)))))

    return ConditionalFamily(
        dim_x=d, dim_y=d, g=g, grad_y_g=grad_y_g,
        sampler=flow_sampler, gaussian=spec,
        grad_y_g_mean=lambda y: np.zeros(d), meta=meta,
    )
