"""Closed-form functional-inequality constants and their recursions.

Given a mixing law with constant alpha, components with constant beta,
and a two-scale bound L on the y-score, the joint distribution carries

    zeta = inf_{C>0} max{beta + alpha (1 + 1/C) L^2 beta, alpha (1 + C)}
         = (alpha + beta + alpha beta L^2
            + sqrt(4 alpha^2 beta L^2 + (beta - alpha + alpha beta L^2)^2)) / 2

and the mixture the (never worse) constant

    xi = beta + alpha beta L^2.

Iterating xi along a sampling algorithm yields affine recursions
a_{k+1} = c a_k + d whose closed form and limits are implemented for
one Langevin step, the proximal sampler, and the exact-HMC Gaussian
flow. ``grid_zeta`` is an independent numerical minimiser used by the
tests to cross-validate the closed form.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .errors import BadStepError, DomainError

PI = "PI"
LSI = "LSI"


@dataclass(frozen=True)
class TwoScaleInput:
    """(alpha, beta, L_bar) plus which inequality they refer to."""

    alpha: float
    beta: float
    L_bar: float
    inequality: str = PI

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise DomainError("alpha and beta must be positive")
        if self.L_bar < 0:
            raise DomainError("L_bar must be nonnegative")
        if self.inequality not in (PI, LSI):
            raise DomainError(f"inequality must be PI or LSI, got {self.inequality!r}")


def zeta(inp):
    """Joint-distribution constant, closed form."""
    a, b, el = inp.alpha, inp.beta, inp.L_bar
    abl = a * b * el * el
    return 0.5 * (a + b + abl + np.sqrt(4.0 * a * a * b * el * el + (b - a + abl) ** 2))


def xi(inp):
    """Mixture-distribution constant beta + alpha beta L^2."""
    a, b, el = inp.alpha, inp.beta, inp.L_bar
    return b + a * b * el * el


def grid_zeta(inp, n_grid=4096, refine_iters=200):
    """inf over C of max{beta + alpha (1+1/C) L^2 beta, alpha (1+C)}.

    Log-spaced grid bracketing followed by golden-section refinement;
    independent of the closed form, used to cross-validate it.
    """
    a, b, el = inp.alpha, inp.beta, inp.L_bar
    flat = b + a * el * el * b   # C -> inf limit of the first branch

    def val(c):
        return max(flat + a * el * el * b / c, a * (1.0 + c))

    grid = np.logspace(-8, 8, n_grid)
    vals = np.maximum(flat + a * el * el * b / grid, a * (1.0 + grid))
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n_grid - 1)]

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = val(x1), val(x2)
    for _ in range(refine_iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = val(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = val(x2)
    return min(f1, f2)


def product_convolution_constants(alpha, beta):
    """(product constant, convolution constant) for independent factors."""
    if alpha <= 0 or beta <= 0:
        raise DomainError("constants must be positive")
    return max(alpha, beta), alpha + beta


def affine_recursion_closed_form(c, d, a0, n):
    """a_n = d * sum_{i<n} c^i + c^n * a0 for a_{k+1} = c a_k + d."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if c == 1.0:
        return d * n + a0
    return d * (1.0 - c ** n) / (1.0 - c) + (c ** n) * a0


# ---------------------------------------------------------------------------
# Recursions


@dataclass(frozen=True)
class RecursionState:
    """History of constants along a sampler plus the geometric limit."""

    scheme: str
    params: dict
    history: np.ndarray          # alpha^(0) .. alpha^(k_max)
    c: float                     # per-step contraction factor
    d: float                     # per-step additive term
    limit: Optional[float]       # d / (1 - c) when c < 1
    diverges: bool
    extras: dict

    def closed_form(self, k):
        return affine_recursion_closed_form(self.c, self.d, float(self.history[0]), k)


def _iterate(c, d, a0, k_max):
    hist = np.empty(k_max + 1)
    hist[0] = a0
    a = a0
    for k in range(k_max):
        a = c * a + d
        hist[k + 1] = a
    return hist


def ula_recursion(mu, lam, eta, alpha0, k_max):
    """alpha^{k+1} = 2 eta + alpha^k c^2 with c = max{|1-eta lam|, |1-eta mu|}.

    For a mu-strongly-convex, lam-smooth potential the limit
    2 eta / (1 - c^2) also equals min{lam - eta lam^2/2, mu - eta mu^2/2}^{-1};
    both forms are returned (extras['limit_min_form']) and must agree.
    """
    if eta <= 0:
        raise BadStepError(f"step size must be positive, got {eta}")
    if not 0 < mu <= lam:
        raise DomainError("need 0 < mu <= lam")
    if alpha0 <= 0:
        raise DomainError("alpha0 must be positive")
    k_max = int(k_max)
    c_ula = max(abs(1.0 - eta * lam), abs(1.0 - eta * mu))
    c, d = c_ula * c_ula, 2.0 * eta
    hist = _iterate(c, d, alpha0, k_max)
    diverges = c_ula >= 1.0
    limit = None if diverges else d / (1.0 - c)
    extras = {"c_ula": c_ula}
    if not diverges:
        extras["limit_min_form"] = 1.0 / min(
            lam - eta * lam * lam / 2.0, mu - eta * mu * mu / 2.0
        )
    return RecursionState("ula", {"mu": mu, "lam": lam, "eta": eta},
                          hist, c, d, limit, diverges, extras)


def proximal_recursion(beta, eta, alpha0, k_max):
    """alpha^{k+1} = beta + (alpha^k + eta) beta^2 / eta^2.

    Diverges iff beta >= eta; otherwise, with c_K = beta^2/eta^2 and
    d_K = c_K + sqrt(c_K), the rescaled sequence alpha^k / eta follows
    the affine recursion with (c_K, d_K) and the limit is
    (1/beta - 1/eta)^{-1}.
    """
    if eta <= 0 or beta <= 0:
        raise BadStepError("beta and eta must be positive")
    if alpha0 <= 0:
        raise DomainError("alpha0 must be positive")
    k_max = int(k_max)
    c_k = (beta / eta) ** 2
    d_k = c_k + np.sqrt(c_k)
    hist = np.empty(k_max + 1)
    hist[0] = alpha0
    a = alpha0
    for k in range(k_max):
        a = beta + (a + eta) * c_k
        hist[k + 1] = a
    diverges = beta >= eta
    limit = None if diverges else 1.0 / (1.0 / beta - 1.0 / eta)
    # the affine form acts on alpha/eta; report the unscaled (c, d)
    return RecursionState("proximal", {"beta": beta, "eta": eta},
                          hist, c_k, eta * d_k, limit, diverges,
                          {"c_K": c_k, "d_K": d_k})


def ehmc_recursion(m, c, alpha0, k_max):
    """alpha^{k+1} = T^2 phi(z) + alpha^k cos^2(z), z = 1/(c sqrt(kappa)).

    T is set to 1/(c sqrt(lam_max(M))); the limit is 1/lam_min(M).
    Never diverges for c >= 2 since cos^2(z) < 1.
    """
    if c < 2.0:
        raise BadStepError(f"need c >= 2, got {c}")
    if alpha0 <= 0:
        raise DomainError("alpha0 must be positive")
    k_max = int(k_max)
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    w, _ = linalg.spd_eigh(m)
    lam_min, lam_max = float(w[0]), float(w[-1])
    kappa = lam_max / lam_min
    t = 1.0 / (c * np.sqrt(lam_max))
    z = 1.0 / (c * np.sqrt(kappa))
    step_c = np.cos(z) ** 2
    step_d = t * t * linalg.phi_spectral(z)
    hist = _iterate(step_c, step_d, alpha0, k_max)
    limit = step_d / (1.0 - step_c)
    return RecursionState(
        "ehmc", {"c": c, "T": t, "kappa": kappa,
                 "lam_min": lam_min, "lam_max": lam_max},
        hist, step_c, step_d, limit, False,
        {"kernel_pi_constant": 8.0 * c * c * kappa,
         "limit_inverse_lam_min": 1.0 / lam_min},
    )


# ---------------------------------------------------------------------------
# Perturbation constants for the proximal backward kernel


@dataclass(frozen=True)
class HolleyStroock:
    """Bounded-oscillation perturbation: constant inflates by e^B."""

    bound: float

    def __post_init__(self):
        if self.bound < 0:
            raise DomainError("oscillation bound must be nonnegative")


@dataclass(frozen=True)
class LipschitzTransport:
    """L-Lipschitz perturbation of a mu_eff-strongly-convex potential."""

    mu_eff: float
    lipschitz: float

    def __post_init__(self):
        if self.mu_eff <= 0:
            raise DomainError("mu_eff must be positive")
        if self.lipschitz < 0:
            raise DomainError("Lipschitz constant must be nonnegative")


def perturbation_constants(base_beta_inv, case):
    """Perturbed log-Sobolev constant of the backward kernel.

    base_beta_inv is the inverse unperturbed constant (mu + 1/eta for
    step eta). HolleyStroock(B) returns e^B / base_beta_inv; the
    Lipschitz case returns the square of the transport-map constant
    (1/sqrt(mu_eff)) exp(L^2 / (2 mu_eff) + 2 L / sqrt(mu_eff)).
    """
    if isinstance(case, HolleyStroock):
        if base_beta_inv <= 0:
            raise DomainError("base_beta_inv must be positive")
        return float(np.exp(case.bound) / base_beta_inv)
    if isinstance(case, LipschitzTransport):
        mu, el = case.mu_eff, case.lipschitz
        return float((1.0 / mu) * np.exp(el * el / mu + 4.0 * el / np.sqrt(mu)))
    raise DomainError(f"unknown perturbation case {type(case).__name__}")


def bakry_emery_backward_beta(mu, eta):
    """Unperturbed backward constant (mu + 1/eta)^{-1}."""
    if mu <= 0 or eta <= 0:
        raise DomainError("mu and eta must be positive")
    return 1.0 / (mu + 1.0 / eta)


def holley_stroock_min_step(mu, bound):
    """Smallest eta with beta < eta for an oscillation-B perturbation."""
    if mu <= 0:
        raise DomainError("mu must be positive")
    return (np.exp(bound) - 1.0) / mu


def lipschitz_transport_min_step(mu, lipschitz):
    """Sufficient eta threshold for beta < eta under a Lipschitz perturbation."""
    if mu <= 0:
        raise DomainError("mu must be positive")
    return (np.exp(lipschitz ** 2 / mu + 4.0 * lipschitz / np.sqrt(mu)) - 1.0) / mu
