"""Batch front-end: JSON experiment configs in, CSV tables + summary out.

Usage:
    twoscale --config cfg.json [--seed N] [--out DIR] [--threads N] [--quiet]

Config files carry ``"schema": 1`` plus a mode-specific payload; see
``configs/`` for worked examples. Outputs land in
``<out>/<name>/summary.txt`` plus mode CSVs. Exit codes: 0 success,
1 config error, 2 when a criterion or certificate failed. Re-running a
config with the same seed yields byte-identical files for any
``--threads`` value.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import constants, criteria, estimators, kernels, phi as phimod, rng as rngmod, samplers
from .errors import BadConfigError, TwoScaleError

MODES = ("constants", "criteria", "track", "certify", "identities")


def _fmt(x):
    return format(float(x), ".17g")


class ConfigError(BadConfigError):
    pass


def _require(cfg, key, ctx="config"):
    if key not in cfg:
        raise ConfigError(f"{ctx} is missing required key {key!r}")
    return cfg[key]


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if cfg.get("schema") != 1:
        raise ConfigError("config must declare \"schema\": 1")
    name = _require(cfg, "name")
    if not isinstance(name, str) or not name:
        raise ConfigError("name must be a nonempty string")
    mode = _require(cfg, "mode")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if mode in ("criteria", "certify", "identities") and "seed" not in cfg:
        raise ConfigError(f"mode {mode!r} is stochastic and needs a seed")
    return cfg


def _target_from(cfg):
    tcfg = _require(cfg, "target")
    kind = _require(tcfg, "kind", "target")
    if kind != "quadratic":
        raise ConfigError("only quadratic targets are configurable from JSON")
    return kernels.Quadratic(np.asarray(_require(tcfg, "matrix", "target"), dtype=np.float64))


def _write_summary(out_dir, lines):
    with open(out_dir / "summary.txt", "w", newline="") as fh:
        for line in lines:
            fh.write(line + "\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# Modes


def _run_constants(cfg, out_dir):
    ccfg = _require(cfg, "constants")
    inp = constants.TwoScaleInput(
        alpha=float(_require(ccfg, "alpha", "constants")),
        beta=float(_require(ccfg, "beta", "constants")),
        L_bar=float(_require(ccfg, "L_bar", "constants")),
        inequality=ccfg.get("inequality", "PI"),
    )
    z = constants.zeta(inp)
    x = constants.xi(inp)
    prod, conv = constants.product_convolution_constants(inp.alpha, inp.beta)
    _write_csv(out_dir / "constants.csv",
               ["quantity", "value"],
               [["zeta", _fmt(z)], ["xi", _fmt(x)],
                ["product", _fmt(prod)], ["convolution", _fmt(conv)]])
    lines = [
        f"name: {cfg['name']}", "mode: constants",
        f"alpha: {_fmt(inp.alpha)}", f"beta: {_fmt(inp.beta)}",
        f"L_bar: {_fmt(inp.L_bar)}",
        f"zeta: {_fmt(z)}", f"xi: {_fmt(x)}",
        f"product: {_fmt(prod)}", f"convolution: {_fmt(conv)}",
    ]
    _write_summary(out_dir, lines)
    return 0, lines


def _recursion_from(cfg):
    rcfg = _require(cfg, "recursion")
    alg = _require(cfg, "algorithm")
    kind = _require(alg, "kind", "algorithm")
    alpha0 = float(_require(rcfg, "alpha0", "recursion"))
    k_max = int(_require(rcfg, "k_max", "recursion"))
    if kind == "ula":
        return constants.ula_recursion(
            float(_require(rcfg, "mu", "recursion")),
            float(_require(rcfg, "lambda", "recursion")),
            float(_require(alg, "eta", "algorithm")), alpha0, k_max)
    if kind == "proximal":
        eta = float(_require(alg, "eta", "algorithm"))
        if "beta" in rcfg:
            beta = float(rcfg["beta"])
        else:
            beta = constants.bakry_emery_backward_beta(
                float(_require(rcfg, "mu", "recursion")), eta)
        return constants.proximal_recursion(beta, eta, alpha0, k_max)
    if kind == "ehmc":
        target = _target_from(cfg)
        return constants.ehmc_recursion(
            target.matrix, float(_require(alg, "c", "algorithm")), alpha0, k_max)
    raise ConfigError(f"unknown algorithm kind {kind!r}")


def _run_track(cfg, out_dir):
    state = _recursion_from(cfg)
    rows = []
    max_diff = 0.0
    for k, a_k in enumerate(state.history):
        cf = state.closed_form(k)
        diff = abs(a_k - cf)
        max_diff = max(max_diff, diff)
        rows.append([k, _fmt(a_k), _fmt(cf), _fmt(diff)])
    _write_csv(out_dir / "recursion.csv",
               ["k", "alpha_k", "closed_form", "abs_diff"], rows)
    lines = [
        f"name: {cfg['name']}", "mode: track", f"scheme: {state.scheme}",
        f"diverges: {str(state.diverges).lower()}",
        f"limit: {'none' if state.limit is None else _fmt(state.limit)}",
        f"max_abs_diff_vs_closed_form: {_fmt(max_diff)}",
    ]
    _write_summary(out_dir, lines)
    return 0, lines


def _kernel_from(cfg, target):
    alg = _require(cfg, "algorithm")
    kind = _require(alg, "kind", "algorithm")
    if kind == "ula":
        return kernels.make_ula_kernel(target, float(_require(alg, "eta", "algorithm")))
    if kind == "proximal_forward":
        fwd, _ = kernels.make_proximal_kernels(target, float(_require(alg, "eta", "algorithm")))
        return fwd
    if kind == "proximal_backward":
        _, bwd = kernels.make_proximal_kernels(target, float(_require(alg, "eta", "algorithm")))
        return bwd
    if kind == "ehmc":
        c = float(_require(alg, "c", "algorithm"))
        t = 1.0 / (c * np.sqrt(target.lam))
        return kernels.make_ehmc_kernel(target.matrix, t)
    raise ConfigError(f"unknown algorithm kind {kind!r}")


def _run_criteria(cfg, out_dir):
    target = _target_from(cfg)
    family = _kernel_from(cfg, target)
    kcfg = _require(cfg, "criteria")
    l_bar = kcfg.get("L_bar", "auto")
    if l_bar == "auto":
        l_var = family.meta.var_L_bar
        l_mgf = family.meta.mgf_L_bar
        if l_var is None and l_mgf is None:
            raise ConfigError("kernel declares no criterion constants; give L_bar")
        l_var = l_var if l_var is not None else l_mgf
        l_mgf = l_mgf if l_mgf is not None else l_var
    else:
        l_var = l_mgf = float(l_bar)
    y_grid = [np.asarray(y, dtype=np.float64) for y in _require(kcfg, "y_grid", "criteria")]
    u_grid = [np.asarray(u, dtype=np.float64) for u in _require(kcfg, "u_grid", "criteria")]
    lambda_grid = [float(l) for l in kcfg.get("lambda_grid", [1.0])]
    n_mc = int(kcfg.get("n_mc", 10_000))
    force_mc = bool(kcfg.get("force_mc", False))
    rng = rngmod.spawn(int(cfg["seed"]), rngmod.DOMAIN_PROBES, 0)

    rep_var = criteria.check_var_criterion(family, y_grid, u_grid, l_var,
                                           n_mc=n_mc, rng=rng, force_mc=force_mc)
    rep_mgf = criteria.check_mgf_criterion(family, y_grid, u_grid, lambda_grid,
                                           l_mgf, n_mc=n_mc, rng=rng,
                                           force_mc=force_mc)
    rows = []
    for rep in (rep_var, rep_mgf):
        for p in rep.probes:
            rows.append([rep.kind, p.y_index, p.u_index, _fmt(p.lam),
                         _fmt(p.observed) if np.isfinite(p.observed) else "nan",
                         _fmt(p.bound), _fmt(p.std_err) if np.isfinite(p.std_err) else "inf",
                         str(p.skipped).lower()])
    _write_csv(out_dir / "criteria.csv",
               ["kind", "y_index", "u_index", "lambda", "observed", "bound",
                "std_err", "skipped"], rows)
    ok = rep_var.passed() and rep_mgf.passed()
    lines = [
        f"name: {cfg['name']}", "mode: criteria",
        f"var_L_bar: {_fmt(l_var)}", f"mgf_L_bar: {_fmt(l_mgf)}",
        f"var_method: {rep_var.method}", f"var_scope: {rep_var.scope}",
        f"var_sup_observed: {_fmt(rep_var.sup_observed)}",
        f"var_violated: {str(rep_var.violated).lower()}",
        f"mgf_method: {rep_mgf.method}", f"mgf_scope: {rep_mgf.scope}",
        f"mgf_sup_observed: {_fmt(rep_mgf.sup_observed)}",
        f"mgf_violated: {str(rep_mgf.violated).lower()}",
    ]
    _write_summary(out_dir, lines)
    return (0 if ok else 2), lines


def _chain_config_from(cfg):
    target = _target_from(cfg)
    alg = _require(cfg, "algorithm")
    kind = _require(alg, "kind", "algorithm")
    if kind == "ula":
        algorithm = samplers.ULA(float(_require(alg, "eta", "algorithm")))
    elif kind == "proximal":
        algorithm = samplers.Proximal(float(_require(alg, "eta", "algorithm")))
    elif kind == "ehmc":
        algorithm = samplers.EHMC(float(_require(alg, "c", "algorithm")))
    else:
        raise ConfigError(f"unknown algorithm kind {kind!r}")
    chains = _require(cfg, "chains")
    icfg = _require(chains, "init", "chains")
    ikind = _require(icfg, "kind", "init")
    if ikind == "dirac":
        init = samplers.DiracInit(np.asarray(_require(icfg, "point", "init"), dtype=np.float64))
    elif ikind == "gaussian":
        init = samplers.GaussianInit(
            np.asarray(_require(icfg, "mean", "init"), dtype=np.float64),
            np.asarray(_require(icfg, "cov", "init"), dtype=np.float64))
    else:
        raise ConfigError("init kind must be 'dirac' or 'gaussian'")
    return samplers.ChainConfig(
        algorithm=algorithm, target=target,
        n_chains=int(_require(chains, "n_chains", "chains")),
        n_iters=int(_require(chains, "n_iters", "chains")),
        init=init)


def _run_certify(cfg, out_dir, n_threads):
    config = _chain_config_from(cfg)
    ccfg = _require(cfg, "certify")
    gamma = float(_require(ccfg, "gamma", "certify"))
    inequality = ccfg.get("inequality", "pi").lower()
    if inequality not in ("pi", "lsi"):
        raise ConfigError("certify.inequality must be 'pi' or 'lsi'")
    at_iter = int(ccfg.get("at_iteration", config.n_iters))
    if at_iter < 0:
        at_iter = config.n_iters + 1 + at_iter
    if not 0 <= at_iter <= config.n_iters:
        raise ConfigError("certify.at_iteration out of range")

    clouds = samplers.run_chains(config, int(cfg["seed"]), n_threads=n_threads)
    cloud = clouds[at_iter]
    cov = cloud.law[1] if cloud.law is not None else None
    fns = estimators.standard_family(config.target.dim, cov)
    certify = estimators.certify_pi if inequality == "pi" else estimators.certify_lsi
    cert = certify(cloud, fns, gamma)
    estimators.export_certificate_csv(cert, out_dir / "certificate.csv")
    if bool(ccfg.get("export_clouds", False)):
        samplers.export_clouds_csv(clouds, out_dir / "clouds.csv")
    lines = [
        f"name: {cfg['name']}", "mode: certify",
        f"inequality: {inequality}", f"gamma: {_fmt(gamma)}",
        f"at_iteration: {at_iter}",
        f"observed_sup_ratio: {_fmt(cert.observed_sup_ratio)}",
        f"pass: {str(cert.passed).lower()}",
    ]
    _write_summary(out_dir, lines)
    return (0 if cert.passed else 2), lines


def _run_identities(cfg, out_dir):
    icfg = cfg.get("identities", {})
    n_trials = int(icfg.get("n_trials", 1000))
    max_atoms = int(icfg.get("max_atoms", 8))
    rng = rngmod.spawn(int(cfg["seed"]), rngmod.DOMAIN_TESTS, 0)

    max_decomp = 0.0
    min_gap = np.inf
    max_conj = 0.0
    for phi in (phimod.PhiFunction.square(), phimod.PhiFunction.xlogx()):
        for _ in range(n_trials):
            ny = int(rng.integers(1, max_atoms + 1))
            nx = int(rng.integers(1, max_atoms + 1))
            mix = _random_dist(rng, ny)
            comps = {y: _random_dist(rng, nx) for y in mix.labels}
            model = phimod.DiscreteMixtureModel(mix, comps)
            f = 0.1 + rng.random((ny, nx)) * 3.0
            total, within, between = phimod.entropy_decomposition(phi, model, f)
            max_decomp = max(max_decomp, abs(total - (within + between)))

            dist = _random_dist(rng, int(rng.integers(2, max_atoms + 1)))
            fv = 0.1 + rng.random(dist.size) * 3.0
            gv = 0.1 + rng.random(dist.size) * 3.0
            min_gap = min(min_gap, phimod.duality_gap(phi, dist, fv, gv))

        grid = np.logspace(-2, 2, 101) if phi.kind == phimod.XLOGX \
            else np.linspace(-10.0, 10.0, 101)
        for t in grid:
            v, d1, _ = phimod.phi_eval(phi, t)
            defect = abs(v + phimod.conjugate_eval(phi, d1) - t * d1)
            max_conj = max(max_conj, defect)

    ok = max_decomp <= 1e-12 and min_gap >= -1e-10 and max_conj <= 1e-12
    _write_csv(out_dir / "identities.csv",
               ["suite", "trials", "worst", "threshold", "pass"],
               [["decomposition", 2 * n_trials, _fmt(max_decomp), _fmt(1e-12),
                 str(max_decomp <= 1e-12).lower()],
                ["duality_gap", 2 * n_trials, _fmt(min_gap), _fmt(-1e-10),
                 str(min_gap >= -1e-10).lower()],
                ["conjugate", 202, _fmt(max_conj), _fmt(1e-12),
                 str(max_conj <= 1e-12).lower()]])
    lines = [
        f"name: {cfg['name']}", "mode: identities",
        f"trials_per_phi: {n_trials}",
        f"max_decomposition_defect: {_fmt(max_decomp)}",
        f"min_duality_gap: {_fmt(min_gap)}",
        f"max_conjugate_defect: {_fmt(max_conj)}",
        f"pass: {str(ok).lower()}",
    ]
    _write_summary(out_dir, lines)
    return (0 if ok else 2), lines


def _random_dist(rng, n):
    w = rng.random(n) + 0.05
    return phimod.FiniteDistribution.from_weights(w / w.sum())


def run(config_path, seed=None, out=None, n_threads=1, quiet=False):
    """Execute one experiment config; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg["seed"] = int(seed)
        out_root = Path(out) if out is not None else Path(cfg.get("output_dir", "out"))
        out_dir = out_root / cfg["name"]
        out_dir.mkdir(parents=True, exist_ok=True)
        mode = cfg["mode"]
        if mode == "constants":
            code, lines = _run_constants(cfg, out_dir)
        elif mode == "track":
            code, lines = _run_track(cfg, out_dir)
        elif mode == "criteria":
            code, lines = _run_criteria(cfg, out_dir)
        elif mode == "certify":
            code, lines = _run_certify(cfg, out_dir, n_threads)
        else:
            code, lines = _run_identities(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except TwoScaleError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if not quiet:
        for line in lines:
            print(line)
    return code


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="twoscale",
        description="functional-inequality constants along sampling algorithms")
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=None, help="output root directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for chain execution")
    parser.add_argument("--quiet", action="store_true", help="suppress stdout")
    args = parser.parse_args(argv)
    return run(args.config, seed=args.seed, out=args.out,
               n_threads=args.threads, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
