"""Empirical certification of Poincare / log-Sobolev constants.

A predicted constant gamma is "certified not violated" on a cloud when
for every test function f in a family

    PI:   var(f) / E||grad f||^2          <=  gamma (1 + slack)
    LSI:  ent(f^2) / (2 E||grad f||^2)    <=  gamma (1 + slack)

with slack five relative standard errors of the ratio (batch means over
chain blocks). Test functions are smooth but unbounded (linear,
quadratic, exp-linear): they witness tightness for Gaussian laws, where
a linear function along the leading eigendirection attains the constant
exactly. This is a deliberate relaxation of the compactly-supported
test class; a certificate means "not violated on the family", never a
proof of the inequality.
"""

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import backend as be
from .errors import BadConfigError, DomainError, LawUnavailableError

LINEAR = "linear"
QUADRATIC = "quadratic"
EXP_LINEAR = "exp_linear"
CUSTOM = "custom"

SLACK_SIGMAS = 5.0
DENOM_FLOOR = 1e-12
POSITIVE_FLOOR = 1e-300
MIN_CLOUD = 1_000
N_BATCHES = 16


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function with vectorised value and gradient."""

    id: str
    family: str
    value: Callable            # (n, d) -> (n,)
    grad: Callable             # (n, d) -> (n, d)
    params: dict = field(default_factory=dict)

    def gaussian_mean(self, mean, cov):
        """E[f] under N(mean, cov); closed form per family."""
        mean = np.asarray(mean, dtype=np.float64)
        cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        if self.family == LINEAR:
            u = self.params["u"]
            return float(u @ mean)
        if self.family == QUADRATIC:
            a, b, c = self.params["a"], self.params["b"], self.params["c"]
            return float(0.5 * (np.trace(a @ cov) + mean @ a @ mean) + b @ mean + c)
        if self.family == EXP_LINEAR:
            s = self.params["s"]
            return float(np.exp(s @ mean + 0.5 * s @ cov @ s))
        raise LawUnavailableError(f"no closed-form mean for family {self.family!r}")


def linear_fn(u, name=None):
    u = np.asarray(u, dtype=np.float64)
    return TestFunction(
        name or "lin", LINEAR,
        value=lambda x: x @ u,
        grad=lambda x: np.broadcast_to(u, x.shape).copy(),
        params={"u": u},
    )


def quadratic_fn(a, b=None, c=0.0, name=None):
    """f(x) = x^T a x / 2 + b^T x + c with a symmetric."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    d = a.shape[0]
    b = np.zeros(d) if b is None else np.asarray(b, dtype=np.float64)
    return TestFunction(
        name or "quad", QUADRATIC,
        value=lambda x: 0.5 * np.sum((x @ a) * x, axis=-1) + x @ b + c,
        grad=lambda x: x @ a + b,
        params={"a": a, "b": b, "c": float(c)},
    )


def exp_linear_fn(s, name=None):
    """f(x) = exp(s^T x); enters LSI checks as f^2 = exp(2 s^T x)."""
    s = np.asarray(s, dtype=np.float64)
    return TestFunction(
        name or "exp", EXP_LINEAR,
        value=lambda x: np.exp(x @ s),
        grad=lambda x: np.exp(x @ s)[:, None] * s,
        params={"s": s},
    )


def standard_family(dim, cov=None):
    """The fixed certification family.

    dim coordinate functions, dim (dim+1)/2 shifted quadratics
    x_i x_j + 1, and exp-linear probes exp(lambda <u, x> / 2) with
    lambda in {+-0.1, +-0.25} along the leading one or two
    eigendirections of cov (identity when cov is omitted).
    """
    fns = []
    eye = np.eye(dim)
    for i in range(dim):
        fns.append(linear_fn(eye[i], name=f"lin_{i}"))
    for i in range(dim):
        for j in range(i, dim):
            a = np.zeros((dim, dim))
            if i == j:
                a[i, i] = 2.0          # f = x_i^2 + 1
            else:
                a[i, j] = a[j, i] = 1.0  # f = x_i x_j + 1
            fns.append(quadratic_fn(a, c=1.0, name=f"quad_{i}_{j}"))
    if cov is None:
        dirs = [eye[i] for i in range(min(dim, 2))]
    else:
        w, q = np.linalg.eigh(np.atleast_2d(np.asarray(cov, dtype=np.float64)))
        order = np.argsort(w)[::-1]
        dirs = [q[:, order[i]] for i in range(min(dim, 2))]
    for k, u in enumerate(dirs):
        for lam in (0.1, -0.1, 0.25, -0.25):
            fns.append(exp_linear_fn((lam / 2.0) * u,
                                     name=f"exp_{lam:+.2f}_v{k}"))
    return fns


@dataclass(frozen=True)
class FunctionResult:
    id: str
    numerator: float
    denominator: float
    ratio: float
    std_err: float
    passed: bool
    skipped: bool = False


@dataclass(frozen=True)
class RatioCertificate:
    inequality: str                    # 'PI' | 'LSI'
    predicted: float
    observed_sup_ratio: float
    per_function: list
    passed: bool


def _batch_edges(n):
    nb = min(N_BATCHES, n)
    edges = np.linspace(0, n, nb + 1).astype(int)
    return [(edges[i], edges[i + 1]) for i in range(nb) if edges[i + 1] > edges[i]]


def _ratio_with_se(num_fn, den_fn, values, grads_sq, edges):
    num = num_fn(values)
    den = den_fn(grads_sq)
    ratio = num / den
    batch = []
    for lo, hi in edges:
        bden = den_fn(grads_sq[lo:hi])
        if bden > DENOM_FLOOR:
            batch.append(num_fn(values[lo:hi]) / bden)
    if len(batch) > 1:
        se = float(np.std(batch, ddof=1) / np.sqrt(len(batch)))
    else:
        se = 0.0
    return num, den, ratio, se


def _certify(cloud, fns, gamma, inequality):
    if gamma <= 0:
        raise BadConfigError("predicted constant must be positive")
    pts = cloud.points
    n = pts.shape[0]
    if n < MIN_CLOUD:
        raise BadConfigError(f"certification needs at least {MIN_CLOUD} points")
    edges = _batch_edges(n)

    results = []
    sup_ratio = 0.0
    all_pass = True
    for fn in fns:
        values = np.ascontiguousarray(fn.value(pts), dtype=np.float64)
        g = fn.grad(pts)
        grads_sq = np.ascontiguousarray(np.sum(g * g, axis=-1), dtype=np.float64)
        den = be.mean(grads_sq)
        if inequality == "LSI":
            den = 2.0 * den
        if den < DENOM_FLOOR:
            results.append(FunctionResult(fn.id, 0.0, den, 0.0, 0.0,
                                          passed=True, skipped=True))
            continue
        if inequality == "LSI":
            sq = values * values
            if np.any(sq < POSITIVE_FLOOR):
                raise DomainError(f"f^2 leaves the entropy domain for {fn.id}")
            num, den, ratio, se = _ratio_with_se(
                lambda v: be.entropy_core(np.ascontiguousarray(v * v)),
                lambda gs: 2.0 * be.mean(gs), values, grads_sq, edges)
        else:
            num, den, ratio, se = _ratio_with_se(
                lambda v: be.variance(v), lambda gs: be.mean(gs),
                values, grads_sq, edges)
        rel_slack = SLACK_SIGMAS * (se / ratio) if ratio > 0 else 0.0
        ok = ratio <= gamma * (1.0 + rel_slack)
        results.append(FunctionResult(fn.id, num, den, ratio, se, passed=ok))
        sup_ratio = max(sup_ratio, ratio)
        all_pass = all_pass and ok
    return RatioCertificate(inequality, float(gamma), sup_ratio, results, all_pass)


def certify_pi(cloud, fns, gamma):
    """Certify var(f) <= gamma E||grad f||^2 over the family."""
    return _certify(cloud, fns, gamma, "PI")


def certify_lsi(cloud, fns, gamma):
    """Certify ent(f^2) <= 2 gamma E||grad f||^2 over the family."""
    return _certify(cloud, fns, gamma, "LSI")


def estimation_error_split(cloud, fn, exact_target_mean):
    """Triangle split of |sample mean of f - target mean|.

    Returns (total, mc_term, bias_term) where mc_term is the deviation
    of the sample average from the algorithm's closed-form mean E_alg[f]
    and bias_term = |E_alg[f] - E_target[f]|. Requires the cloud to
    carry its analytic law.
    """
    if cloud.law is None:
        raise LawUnavailableError("cloud carries no closed-form iterate law")
    mean, cov = cloud.law
    alg_mean = fn.gaussian_mean(mean, cov)
    sample_avg = be.mean(np.ascontiguousarray(fn.value(cloud.points), dtype=np.float64))
    total = abs(sample_avg - exact_target_mean)
    mc_term = abs(sample_avg - alg_mean)
    bias_term = abs(alg_mean - exact_target_mean)
    return total, mc_term, bias_term


def export_certificate_csv(cert, path):
    """CSV export: fn_id,numerator,denominator,ratio,std_err,pass."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fn_id", "numerator", "denominator", "ratio", "std_err", "pass"])
        for r in cert.per_function:
            w.writerow([r.id, format(r.numerator, ".17g"),
                        format(r.denominator, ".17g"), format(r.ratio, ".17g"),
                        format(r.std_err, ".17g"), str(r.passed).lower()])
