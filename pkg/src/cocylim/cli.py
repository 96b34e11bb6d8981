"""Command-line entry point: run declarative experiments, validate
configs, list shipped examples.

`run` executes the requested analyses sequentially, writes one JSON
report per analysis plus a manifest, and exits 0 iff every analysis
completed (property failures are recorded inside reports, not in the
exit code).  Reports carry no timestamps, so identical (config, seed)
runs are byte-identical; timing lives in the manifest only.
"""

import argparse
import hashlib
import json
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, config as config_mod
from . import cocycle as cocycle_mod
from . import gibbs as gibbs_mod
from . import limits, perron, transfer, typicality
from ._rng import derive_seed
from .kernels import BACKEND
from .transfer import TransferSpectrumError


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.complexfloating, complex)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def _write_report(outdir, name, payload):
    path = Path(outdir) / f"{name}.json"
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2)
        fh.write("\n")
    return path


class RunContext:
    """Shared lazily-computed objects for one experiment run."""

    def __init__(self, cfg, built):
        self.cfg = cfg
        self.built = built
        self._cache = {}

    def seed_for(self, *tags):
        return derive_seed(self.cfg.seed or 0, *map(_tag_int, tags))

    def grid(self, n=None):
        n = n or self.cfg.grid_n
        key = ("grid", n)
        if key not in self._cache:
            d = self.built.cocycle.dimension
            self._cache[key] = transfer.build_grid(d, n if d > 1 else 1)
        return self._cache[key]

    def operator0(self):
        if "op0" not in self._cache:
            self._cache["op0"] = transfer.build_operator(
                self.built.gibbs, self.built.cocycle, self.grid(), 0.0,
                max_covering=self.cfg.numerics.get("grid_max_covering"))
        return self._cache["op0"]

    def spectral0(self):
        if "sp0" not in self._cache:
            self._cache["sp0"] = transfer.spectral_radius(
                self.operator0(), tol=self.cfg.numerics["power_tol"],
                maxiter=int(self.cfg.numerics["power_maxiter"]))
        return self._cache["sp0"]

    def lambda1(self):
        if "lambda1" not in self._cache:
            delta = float(self.cfg.numerics["delta"])
            self._cache["lambda1"] = limits.lyapunov_spectral(
                self.built.gibbs, self.built.cocycle, self.grid(), delta=delta,
                tol=self.cfg.numerics["power_tol"])
        return self._cache["lambda1"]

    def grid_budget(self):
        if "budget" not in self._cache:
            if self.built.cocycle.dimension == 1:
                self._cache["budget"] = 0.0
            else:
                delta = float(self.cfg.numerics["delta"])
                lam2 = limits.lyapunov_spectral(
                    self.built.gibbs, self.built.cocycle,
                    self.grid(2 * self.cfg.grid_n), delta=delta,
                    tol=self.cfg.numerics["power_tol"])
                self._cache["budget"] = abs(lam2 - self.lambda1())
        return self._cache["budget"]

    def sigma2(self):
        if "sigma2" not in self._cache:
            self._cache["sigma2"] = limits.variance_spectral(
                self.built.gibbs, self.built.cocycle, self.grid(),
                delta=float(self.cfg.numerics["delta"]),
                tol=self.cfg.numerics["power_tol"])
        return self._cache["sigma2"]

    def rate_info(self):
        if "rate" not in self._cache:
            self._cache["rate"] = limits.ldp_rate(
                self.built.gibbs, self.built.cocycle, self.grid(),
                self.lambda1(), eta=float(self.cfg.numerics["eta"]),
                n_nodes=int(self.cfg.numerics["ldp_nodes"]),
                tol=self.cfg.numerics["power_tol"])
        return self._cache["rate"]


def _tag_int(tag):
    return int.from_bytes(hashlib.sha256(str(tag).encode()).digest()[:4], "big")


def run_spectrum(ctx):
    sp = ctx.spectral0()
    op = ctx.operator0()
    report = {
        "rho0": sp.rho,
        "residual": sp.residual,
        "subleading_modulus": sp.subleading_modulus,
        "gap": (1.0 - sp.subleading_modulus
                if np.isfinite(sp.subleading_modulus) else None),
        "eigenmeasure_sum": float(sp.left_vector.sum()),
        "column_defect": op.column_defect,
        "states": op.size,
        "grid": {"resolution": op.grid.resolution,
                 "covering_radius": op.grid.covering_radius,
                 "kind": op.grid.kind},
        "period": op.period,
    }
    try:
        per = transfer.peripheral_spectrum(op)
        report["peripheral"] = per
        report["peripheral_ok"] = True
    except TransferSpectrumError as exc:
        report["peripheral_ok"] = False
        report["peripheral_failure"] = {"message": str(exc),
                                        "diagnostics": exc.diagnostics}
    report["block_cyclic"] = transfer.block_structure_check(op)
    return report


def run_typicality(ctx):
    num = ctx.cfg.numerics
    verdict = typicality.is_one_typical(
        ctx.built.cocycle, ctx.built.system,
        period_budget=int(num["search_period"]),
        connector_budget=int(num["search_connector"]),
        gap_tol=float(num["gap_tol"]), sv_floor=float(num["sv_floor"]),
        depth=int(num["holonomy_depth"]), tol=float(num["holonomy_tol"]),
        threads=ctx.cfg.threads)
    report = {"verdict": verdict.status, "attempts": verdict.attempts,
              "fiber_bunching_margin": float(
                  cocycle_mod.fiber_bunching_margin(ctx.built.cocycle))}
    if verdict.witness:
        w = verdict.witness
        report["witness"] = {
            "periodic_word": "".join(map(str, w.periodic_word)),
            "connectors": ["".join(map(str, c)) for c in w.homoclinic_encoding],
            "P_matrix": w.P_matrix.ravel(),
            "eigenvalues": w.eigenvalues,
            "holonomy_loop": w.holonomy_loop.ravel(),
            "pinch_margin": w.pinch_margin,
            "twist_margin": w.twist_margin,
            "loop_tail": w.loop_tail,
        }
    report["log"] = list(verdict.log[:50])
    return report


def run_lyapunov(ctx):
    built = ctx.built
    mc_n = int(ctx.cfg.mc["n"])
    mc_trials = int(ctx.cfg.mc["trials"])
    est, se = limits.lyapunov_mc(built.gibbs, built.cocycle, mc_n, mc_trials,
                                 u=ctx.cfg.mc["u"], seed=ctx.seed_for("lyapunov"))
    lam_f = limits.lyapunov_furstenberg(built.gibbs, built.cocycle,
                                        ctx.operator0(), ctx.spectral0())
    lam = ctx.lambda1()
    budget = ctx.grid_budget()
    return {
        "lambda1_spectral": lam,
        "lambda1_furstenberg": lam_f,
        "lambda1_mc": {"estimate": est, "std_error": se,
                       "n": mc_n, "trials": mc_trials},
        "grid_budget": budget,
        "agreement": {
            "mc_vs_spectral": bool(abs(est - lam) <= 3 * se + budget + 1e-6),
            "furstenberg_vs_spectral": bool(abs(lam_f - lam) <= budget + 1e-6),
        },
    }


def run_variance(ctx):
    built = ctx.built
    lam = ctx.lambda1()
    s2 = ctx.sigma2()
    n = int(ctx.cfg.mc["n"])
    trials = int(ctx.cfg.mc["variance_trials"])
    s2_mc, se = limits.variance_mc(built.gibbs, built.cocycle, n, trials, lam,
                                   u=ctx.cfg.mc["u"],
                                   seed=ctx.seed_for("variance"))
    tol = max(0.05 * s2, 3 * se)
    return {
        "sigma2_spectral": s2,
        "sigma2_mc": {"estimate": s2_mc, "std_error": se, "n": n,
                      "trials": trials},
        "lambda1_used": lam,
        "consistent": bool(abs(s2_mc - s2) <= tol + 1e-12),
    }


def run_clt(ctx, outdir):
    built = ctx.built
    lam, s2 = ctx.lambda1(), ctx.sigma2()
    n = int(ctx.cfg.mc["clt_n"])
    trials = int(ctx.cfg.mc["clt_trials"])
    res = limits.clt_test(built.gibbs, built.cocycle, n, trials, lam, s2,
                          u=ctx.cfg.mc["u"], seed=ctx.seed_for("clt"))
    report = {"statistic": res.statistic, "kind": res.kind, "n": n,
              "trials": trials, "lambda1_used": lam, "sigma2_used": s2}
    if ctx.cfg.mc.get("dump_csv"):
        csv_path = Path(outdir) / "clt_samples.csv"
        with open(csv_path, "w") as fh:
            fh.write("statistic\n")
            for v in res.samples:
                fh.write(f"{v!r}\n")
        report["samples_csv"] = csv_path.name
    return report


def run_ldp(ctx):
    built = ctx.built
    lam, s2 = ctx.lambda1(), ctx.sigma2()
    rate = ctx.rate_info()
    eps = float(ctx.cfg.mc["ldp_eps"])
    n_list = [int(n) for n in ctx.cfg.mc["ldp_n_list"]]
    trials = int(ctx.cfg.mc["ldp_trials"])
    tilt = bool(ctx.cfg.numerics["tilt"])
    emp = limits.ldp_empirical(built.gibbs, built.cocycle, n_list, eps, lam,
                               trials, ctx.seed_for("ldp-vector"),
                               u=ctx.cfg.mc["u"], grid=ctx.grid(),
                               rate_info=rate, tilt=tilt)
    norm_emp = limits.ldp_norm_tail(built.gibbs, built.cocycle, n_list, eps,
                                    lam, trials, ctx.seed_for("ldp-norm"),
                                    u=ctx.cfg.mc["u"], grid=ctx.grid(),
                                    rate_info=rate, tilt=tilt)
    # curvature check: Lambda''(0) from the nodes should match sigma2
    ts = rate.t_nodes
    mid = len(ts) // 2
    dt = ts[1] - ts[0]
    curv = (rate.lmgf[mid + 1] - 2 * rate.lmgf[mid] + rate.lmgf[mid - 1]) / dt**2
    def emp_rows(rows):
        return [{"n": e.n, "p_hat": e.p_hat, "rate": e.rate,
                 "hits_upper": e.hits_upper, "hits_lower": e.hits_lower,
                 "std_error": e.std_error, "usable": e.usable} for e in rows]
    return {
        "eta": rate.eta,
        "halvings": rate.halvings,
        "t_nodes": rate.t_nodes,
        "lmgf": rate.lmgf,
        "eps_nodes": rate.eps_nodes,
        "rate_function": rate.rate,
        "endpoint_slope": rate.endpoint_slope,
        "endpoint_flag": "rate endpoint is the achieved slope Lambda'(eta);"
                         " values beyond it are not reported",
        "convex_defect": rate.convex_defect,
        "curvature_at_zero": float(curv),
        "sigma2_spectral": s2,
        "curvature_matches_sigma2":
            bool(s2 == 0 or abs(curv - s2) <= 0.05 * max(s2, 1e-12)),
        "eps": eps,
        "rate_at_eps": limits.rate_at(rate, eps),
        "tilt": tilt,
        "empirical_vector": emp_rows(emp),
        "empirical_norm": emp_rows(norm_emp),
    }


def run_analyticity(ctx):
    t_nodes, models = config_mod.analyticity_family(ctx.cfg, ctx.built.system)
    aligned = []
    A = ctx.built.cocycle
    for gm in models:
        if gm.memory < A.memory:
            aligned.append(gibbs_mod.build_gibbs_model(
                gm.potential.padded_to(A.memory, ctx.built.system),
                ctx.built.system))
        else:
            aligned.append(gm)
    curve = limits.exponent_curve(A, aligned, t_nodes, ctx.grid(),
                                  delta=float(ctx.cfg.numerics["delta"]))
    return {
        "t_nodes": curve.t_nodes,
        "lambda1": curve.values,
        "chebyshev_coefficients": curve.cheb_coeffs,
        "tail_max": curve.tail_max,
        "decay_ratio": curve.decay_ratio,
        "note": "geometric coefficient decay is reported as a smoothness"
                " diagnostic, not asserted as proof",
    }


def run_perron(ctx):
    T = ctx.built.system.adjacency.entries.astype(float)
    nf = perron.cyclic_normal_form(T)
    rot = perron.rotation_symmetry_check(T, nf.h)
    if nf.h == 1:
        target = T
        which = "adjacency"
    else:
        Ph = np.linalg.matrix_power(nf.permuted, nf.h)
        size0 = len(nf.classes[0])
        target = Ph[:size0, :size0]
        which = "first diagonal block of T^h"
    dec = perron.pf_decomposition(target)
    return {
        "period": nf.h,
        "classes": [list(c) for c in nf.classes],
        "permutation": list(nf.permutation),
        "rotation_symmetry": rot,
        "pf": {"target": which, "rho": dec.rho, "u": dec.u,
               "u_star": dec.u_star, "gamma_hat": dec.gamma_hat,
               "S_norms": dec.S_norm_sequence},
    }


def run_contraction(ctx):
    num = ctx.cfg.numerics
    alpha = float(num["alpha"])
    rows = []
    for n in range(1, int(num["ly_max_n"]) + 1):
        w, tau = transfer.lasota_yorke_estimate(
            ctx.built.gibbs, ctx.built.cocycle, alpha, n,
            samples=int(num["ly_samples"]), seed=ctx.seed_for("contraction"))
        rows.append({"n": n, "w_hat": w, "tau_hat": tau,
                     "log_w_over_n": float(np.log(max(w, 1e-300)) / n)})
    return {"alpha": alpha, "samples": int(num["ly_samples"]),
            "series": rows}


ANALYSIS_RUNNERS = {
    "spectrum": lambda ctx, outdir: run_spectrum(ctx),
    "typicality": lambda ctx, outdir: run_typicality(ctx),
    "lyapunov": lambda ctx, outdir: run_lyapunov(ctx),
    "variance": lambda ctx, outdir: run_variance(ctx),
    "clt": run_clt,
    "ldp": lambda ctx, outdir: run_ldp(ctx),
    "analyticity": lambda ctx, outdir: run_analyticity(ctx),
    "perron": lambda ctx, outdir: run_perron(ctx),
    "contraction": lambda ctx, outdir: run_contraction(ctx),
}


def command_run(args):
    cfg = config_mod.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.grid_n is not None:
        cfg.grid_n = args.grid_n
    if args.threads is not None:
        cfg.threads = args.threads
    diags = config_mod.validate(cfg)
    if diags:
        for d in diags:
            print(f"config error: {d}", file=sys.stderr)
        return 2
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    built = config_mod.build(cfg)
    ctx = RunContext(cfg, built)
    wall = {}
    failures = {}
    for analysis in cfg.analyses:
        t0 = time.perf_counter()
        try:
            payload = ANALYSIS_RUNNERS[analysis](ctx, outdir)
            _write_report(outdir, analysis, payload)
        except Exception as exc:  # isolate per-analysis failures
            failures[analysis] = f"{type(exc).__name__}: {exc}"
            _write_report(outdir, analysis,
                          {"status": "error", "error": failures[analysis]})
        wall[analysis] = time.perf_counter() - t0
    manifest = {
        "config_path": str(args.config),
        "config_sha256": hashlib.sha256(
            Path(args.config).read_bytes()).hexdigest(),
        "version": __version__,
        "backend": BACKEND,
        "seed": cfg.seed,
        "grid_resolution": cfg.grid_n,
        "threads": cfg.threads,
        "analyses": list(cfg.analyses),
        "numerics": config_mod.effective_numerics(cfg),
        "mc": _jsonable(cfg.mc),
        "failures": failures,
        "wall_times_s": {k: round(v, 6) for k, v in wall.items()},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    _write_report(outdir, "manifest", manifest)
    return 0 if not failures else 1


def command_validate(args):
    cfg = config_mod.load_config(args.config)
    diags = config_mod.validate(cfg)
    for d in diags:
        print(d)
    if not diags:
        print("ok")
    return 0 if not diags else 2


def shipped_examples():
    pkg = resources.files("cocylim") / "configs"
    return sorted(p for p in pkg.iterdir() if p.name.endswith(".yaml"))


def command_list_examples(_args):
    for p in shipped_examples():
        print(p)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cocylim",
        description="transfer-operator limit laws for matrix cocycles over"
                    " subshifts of finite type")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    p_run.set_defaults(func=command_run)

    p_val = sub.add_parser("validate", help="validate a config, list problems")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=command_validate)

    p_list = sub.add_parser("list-examples", help="print shipped configs")
    p_list.set_defaults(func=command_list_examples)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
