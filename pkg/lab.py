#!/usr/bin/env python3
"""
SPDE lab: runs the numerical experiments and writes CSV, JSON and Parquet
artifacts plus a manifest into an output directory.

Usage:
    python lab.py eigen --bc dirichlet --length 3.14159 --modes 3 --out runs/eigen
    python lab.py sample-w --reps 500 --out runs/w
    python lab.py solve --b cos --sigma sin2 --u0 bump --out runs/u
    python lab.py modulus --paths runs/w/paths/w.parquet --out runs/modulus
    python lab.py acceptance --quick --out runs/acceptance
    python lab.py status --out runs/w
    python lab.py rerun --manifest runs/w/manifest.json --out runs/w-again

Every subcommand also reads a YAML file (--config lab.yaml) with a `common`
section and one section per subcommand; flags win over the file.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

import argparse
import logging
import shutil
import sys
import time
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd

# Load .env if python-dotenv is available
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

from src.acceptance import SuiteContext, run_suite
from src.archive import (
    DIAGNOSTIC_NAME,
    MANIFEST_NAME,
    load_ensemble,
    load_manifest,
    new_manifest,
    save_csv,
    save_ensemble,
    save_json,
    save_manifest,
    update_manifest,
    write_diagnostic,
)
from src.config import DEFAULT_OUT
from src.errors import ConfigError, EstimatorError, LabError, NumericalError
from src.estimators import (
    chung_statistic,
    dyadic_ladder,
    estimate_constants,
    exceptional_scan,
    fit_exponent,
    local_modulus,
    moment_growth,
    small_ball,
    uniform_modulus,
)
from src.experiment import (
    COMMON,
    SUBCOMMANDS,
    ExperimentConfig,
    build_config,
    config_from_manifest,
    parse_grid,
    parse_u0,
)
from src.gaussian_field import (
    CovarianceOracle,
    PathEnsemble,
    SpaceTimePoint,
    increment_variances,
    sample_w_ensemble,
)
from src.heatkernel import InitialData, KernelEvaluator, kernel_bound_fit
from src.kpz import KPZConfig, kpz_boundary_residual, kpz_eigensystem, solve_kpz
from src.nonlinear_solver import Coefficients, SchemeConfig, solve_coupled_ensemble
from src.slnd import ScanConfig, slnd_ratio_scan
from src.spectral import (
    BCKind,
    BoundaryCondition,
    EigenSystem,
    build_eigensystem,
    eigen_table,
    growth_constants,
    robin_asymptotics_check,
)

logger = logging.getLogger("lab")


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _eigensystem(cfg: ExperimentConfig) -> EigenSystem:
    bc = BoundaryCondition(cfg["bc"], length=cfg["length"], alpha=cfg["alpha"], beta=cfg["beta"])
    return build_eigensystem(bc, cfg["modes"], negative_modes=cfg["negative_modes"])


def _write_table(cfg: ExperimentConfig, manifest: dict, name: str, df: pd.DataFrame):
    path = save_csv(cfg.out, name, df)
    update_manifest(manifest, name, path=path, df=df)
    print(f"  ok  {path.name}: {len(df)} rows")


def _write_summary(cfg: ExperimentConfig, manifest: dict, name: str, payload: dict):
    path = save_json(cfg.out, name, payload)
    update_manifest(manifest, f"{name}.json", path=path)
    print(f"  ok  {path.name}")


def _write_paths(cfg: ExperimentConfig, manifest: dict, name: str, ens: PathEnsemble):
    path = save_ensemble(cfg.out, name, ens)
    update_manifest(manifest, f"paths/{name}", path=path)
    size = path.stat().st_size / 1024 / 1024
    print(f"  ok  paths/{path.name}: {ens.reps} paths, {size:.1f} MB")


def _center(cfg: ExperimentConfig) -> SpaceTimePoint:
    return SpaceTimePoint(cfg["t0"], cfg["x0"])


def _load_paths(cfg: ExperimentConfig) -> PathEnsemble:
    """The archive named by --paths, else w sampled in memory from the grid options."""
    if cfg["paths"]:
        ens = load_ensemble(cfg["paths"])
        print(f"  Loaded {ens.reps} '{ens.kind}' paths from {cfg['paths']}")
        return ens
    oracle = CovarianceOracle(_eigensystem(cfg))
    ens = sample_w_ensemble(oracle, parse_grid(cfg["t_grid"]), parse_grid(cfg["x_grid"]), cfg["reps"],
                            cfg.seed, threads=cfg.threads)
    print(f"  Sampled {ens.reps} paths of w in memory ({ens.times.size} x {ens.xs.size} grid)")
    return ens


def _statistic_summary(statistic: str, ladder, medians, fits: dict | None = None, **extra) -> dict:
    return {"statistic": statistic, "ladder": list(np.asarray(ladder, dtype=float)),
            "medians": list(np.asarray(medians, dtype=float)), "fits": fits or {}, **extra}


def _constants(cfg: ExperimentConfig, **stats) -> list[dict]:
    return estimate_constants(cfg.seed, **stats).table().to_dict(orient="records")


# ---------------------------------------------------------------------------
# Spectral, kernel, oracle
# ---------------------------------------------------------------------------

def run_eigen(cfg: ExperimentConfig, manifest: dict):
    print(f"\n[EIGEN] Building {cfg['modes']} eigenpairs ({cfg['bc']})...")
    es = _eigensystem(cfg)
    _write_table(cfg, manifest, "eigen", eigen_table(es))
    summary = {
        "bc": es.bc.describe(),
        "modes": es.count,
        "negative_modes": es.negative_count,
        "orthonormality_error": es.orthonormality_error(),
        "growth": growth_constants(es),
    }
    if es.bc.kind is BCKind.ROBIN and es.count >= 16:
        report = robin_asymptotics_check(es)
        summary["asymptotics"] = {"n0": report.n0, "max_residual": report.max_residual}
    _write_summary(cfg, manifest, "eigen", summary)


def run_kernel(cfg: ExperimentConfig, manifest: dict):
    t = cfg["t"]
    print(f"\n[KERNEL] Heat kernel at t={t:g} on {cfg['grid_size']} points...")
    es = _eigensystem(cfg)
    ke = KernelEvaluator(es, cfg["tail_tolerance"])
    xs = np.linspace(0.0, es.length, cfg["grid_size"])
    G = ke.eval_kernel(t, xs, xs)
    table = pd.DataFrame(G, columns=[f"y{j}" for j in range(xs.size)])
    table.insert(0, "x", xs)
    _write_table(cfg, manifest, "kernel", table)
    mid = float(xs[xs.size // 2])
    _write_summary(cfg, manifest, "kernel", {
        "t": t, "grid": xs, "modes_used": ke.modes_needed(t), "sup_bound": ke.sup_bound,
        "chapman_kolmogorov_error": ke.chapman_kolmogorov_error(t, t, mid, mid),
    })


def run_kernel_bound_fit(cfg: ExperimentConfig, manifest: dict):
    print(f"\n[KERNEL-BOUND] Fitting the kernel bound constant over {len(cfg['times'])} times...")
    es = _eigensystem(cfg)
    ke = KernelEvaluator(es)
    xs = np.linspace(0.0, es.length, cfg["grid_size"])
    fit = kernel_bound_fit(ke, cfg["times"], xs)
    rows = [{"t": t, "constant": kernel_bound_fit(ke, [t], xs).constant} for t in cfg["times"]]
    _write_table(cfg, manifest, "kernel_bound", pd.DataFrame(rows))
    _write_summary(cfg, manifest, "kernel_bound", {
        "constant": fit.constant, "argmax_t": fit.argmax_t, "argmax_x": fit.argmax_x, "argmax_y": fit.argmax_y,
    })


def run_cov(cfg: ExperimentConfig, manifest: dict):
    path = Path(cfg["points"])
    print(f"\n[COV] Covariance oracle on point pairs from {path}...")
    if not path.exists():
        raise ConfigError(f"points file not found: {path}")
    points = pd.read_csv(path)
    missing = {"t1", "x1", "t2", "x2"} - set(points.columns)
    if missing:
        raise ConfigError(f"{path}: missing columns {sorted(missing)}")
    oracle = CovarianceOracle(_eigensystem(cfg), short_time=cfg["short_time"])
    t1, x1, t2, x2 = (points[c].to_numpy(dtype=float) for c in ("t1", "x1", "t2", "x2"))
    out = points[["t1", "x1", "t2", "x2"]].copy()
    out["cov"] = oracle.covariance(t1, x1, t2, x2)
    out["var_increment"] = increment_variances(oracle, t1, x1, t2, x2)
    _write_table(cfg, manifest, "cov", out)


# ---------------------------------------------------------------------------
# Sampling, conditioning, solvers
# ---------------------------------------------------------------------------

def run_sample_w(cfg: ExperimentConfig, manifest: dict):
    es = _eigensystem(cfg)
    times, xs = parse_grid(cfg["t_grid"]), parse_grid(cfg["x_grid"])
    print(f"\n[SAMPLE-W] Sampling {cfg['reps']} paths on a {times.size} x {xs.size} grid ({es.count} modes)...")
    ens = sample_w_ensemble(CovarianceOracle(es), times, xs, cfg["reps"], cfg.seed, threads=cfg.threads)

    # the N-mode sampler has exactly the law of the truncated series
    reference = CovarianceOracle(es, short_time=0.0)
    T, X = np.meshgrid(times, xs, indexing="ij")
    oracle_var = reference.variance(T, X)
    empirical = np.mean(ens.values ** 2, axis=0)
    se = oracle_var * np.sqrt(2.0 / ens.reps)
    z = np.divide(empirical - oracle_var, se, out=np.zeros_like(se), where=se > 0)
    table = pd.DataFrame({"t": T.ravel(), "x": X.ravel(), "empirical_var": empirical.ravel(),
                          "oracle_var": oracle_var.ravel(), "z": z.ravel()})
    _write_table(cfg, manifest, "sample_w_variance", table)
    _write_summary(cfg, manifest, "sample_w", {"reps": ens.reps, "modes": es.count,
                                               "max_abs_z": float(np.max(np.abs(z)))})
    if cfg["archive"]:
        _write_paths(cfg, manifest, "w", ens)


def run_slnd_scan(cfg: ExperimentConfig, manifest: dict):
    print(f"\n[SLND] Scanning {cfg['trials']} conditioning configurations...")
    oracle = CovarianceOracle(_eigensystem(cfg))
    scan = ScanConfig(interior=tuple(cfg["interior"]), max_m=cfg["max_m"],
                      include_boundary=cfg["include_boundary"], strict_interior=cfg["strict_interior"])
    report = slnd_ratio_scan(oracle, scan, cfg["trials"], cfg.seed, threads=cfg.threads)
    _write_table(cfg, manifest, "slnd_scan", report.table)
    _write_summary(cfg, manifest, "slnd_scan", {"min_ratio": report.min_ratio, "max_ratio": report.max_ratio,
                                                "spread": report.spread})


def _solve_summary(u: PathEnsemble, w: PathEnsemble) -> pd.DataFrame:
    return pd.DataFrame({
        "t": u.times,
        "u_mean": u.values.mean(axis=(0, 2)),
        "u_std": u.values.std(axis=(0, 2)),
        "u_max_abs": np.abs(u.values).max(axis=(0, 2)),
        "w_std": w.values.std(axis=(0, 2)),
    })


def run_solve(cfg: ExperimentConfig, manifest: dict):
    es = _eigensystem(cfg)
    scheme = SchemeConfig(es, cfg["dt"], cfg["dx"])
    coeffs = Coefficients.from_presets(cfg["b"], cfg["sigma"])
    u0 = InitialData.from_function(es, parse_u0(cfg["u0"], es.length))
    print(f"\n[SOLVE] {cfg['reps']} coupled paths, {coeffs.name}, u0={cfg['u0']}, "
          f"{scheme.steps_for(cfg['horizon'])} steps on {scheme.cells} cells...")
    run = solve_coupled_ensemble(scheme, coeffs, u0, cfg["horizon"], cfg["reps"], cfg.seed, threads=cfg.threads,
                                 record_every=cfg["record_every"], noise_scale=cfg["noise_scale"])
    _write_table(cfg, manifest, "solve_summary", _solve_summary(run.u, run.w))
    _write_summary(cfg, manifest, "solve", {"coefficients": coeffs.name, "bounded": coeffs.bounded,
                                            "cells": scheme.cells, "modes": scheme.modes,
                                            "steps": scheme.steps_for(cfg["horizon"])})
    if cfg["archive"]:
        _write_paths(cfg, manifest, "u", run.u)
        _write_paths(cfg, manifest, "w", run.w)


def run_kpz(cfg: ExperimentConfig, manifest: dict):
    print(f"\n[KPZ] {cfg['reps']} paths with mu={cfg['mu']:g}, nu={cfg['nu']:g}, u0={cfg['u0']}...")
    kpz = KPZConfig(cfg["mu"], cfg["nu"], parse_u0(cfg["u0"]), cfg["dt"], cfg["dx"], cfg["modes"])
    run = solve_kpz(kpz, cfg["horizon"], cfg["reps"], cfg.seed, threads=cfg.threads,
                    record_every=cfg["record_every"], noise_scale=cfg["noise_scale"],
                    max_exclusion=cfg["max_exclusion"])
    if run.excluded.size:
        print(f"  Excluded {run.excluded.size}/{run.total} paths below the positivity floor")
    summary = pd.DataFrame({
        "t": run.h.times,
        "h_mean": run.h.values.mean(axis=(0, 2)),
        "h_std": run.h.values.std(axis=(0, 2)),
        "h_renormalized_mean": run.h_renormalized.values.mean(axis=(0, 2)),
    })
    _write_table(cfg, manifest, "kpz_summary", summary)
    es = kpz_eigensystem(cfg["mu"], cfg["nu"], cfg["modes"])
    _write_summary(cfg, manifest, "kpz", {**run.report(), "negative_modes": es.negative_count,
                                          "boundary_residual": kpz_boundary_residual(es, cfg["mu"], cfg["nu"])})
    if cfg["archive"]:
        _write_paths(cfg, manifest, "h", run.h)
        _write_paths(cfg, manifest, "w", run.w)


# ---------------------------------------------------------------------------
# Path statistics
# ---------------------------------------------------------------------------

def run_modulus(cfg: ExperimentConfig, manifest: dict):
    print(f"\n[MODULUS] {cfg['kind']} modulus...")
    ens = _load_paths(cfg)
    ladder = dyadic_ladder(cfg["eps0"], cfg["rungs"])
    if cfg["kind"] == "local":
        stat = local_modulus(ens, _center(cfg), ladder, normalizer=cfg["normalizer"] or "loglog",
                             axis=cfg["axis"], use_sigma=cfg["use_sigma"])
        constants = _constants(cfg, local=stat)
    else:
        stat = uniform_modulus(ens, cfg["rect"], ladder, normalizer=cfg["normalizer"] or "log",
                               use_sigma=cfg["use_sigma"])
        constants = _constants(cfg, uniform=stat)
    _write_table(cfg, manifest, "modulus", stat.table())
    _write_summary(cfg, manifest, "modulus", _statistic_summary(
        f"{stat.kind}_modulus", stat.ladder, stat.medians, normalizer=stat.normalizer, constants=constants))


def run_smallball(cfg: ExperimentConfig, manifest: dict):
    print(f"\n[SMALLBALL] {len(cfg['radii'])} radii x {len(cfg['ratios'])} ratios...")
    ens = _load_paths(cfg)
    est = small_ball(ens, _center(cfg), cfg["radii"], cfg["ratios"], level=cfg["level"], axis=cfg["axis"],
                     use_sigma=cfg["use_sigma"], min_samples=cfg["min_samples"])
    _write_table(cfg, manifest, "smallball", est.table)
    _write_summary(cfg, manifest, "smallball", _statistic_summary(
        "small_ball", est.table["epsilon"], est.table["p_hat"],
        fits={"exponent": est.fit.summary()} if est.fit is not None else {},
        excluded_rungs=est.excluded_rungs, constants=_constants(cfg, small=est)))


def run_chung(cfg: ExperimentConfig, manifest: dict):
    print("\n[CHUNG] Chung-type statistic...")
    ens = _load_paths(cfg)
    stat = chung_statistic(ens, _center(cfg), dyadic_ladder(cfg["eps0"], cfg["rungs"]), axis=cfg["axis"],
                           use_sigma=cfg["use_sigma"])
    _write_table(cfg, manifest, "chung", stat.table())
    _write_summary(cfg, manifest, "chung", _statistic_summary(
        "chung", stat.ladder, np.median(stat.values, axis=0), final_median=stat.median, final_iqr=stat.iqr,
        constants=_constants(cfg, chung=stat)))


def run_scan(cfg: ExperimentConfig, manifest: dict):
    print(f"\n[SCAN] Exceptional points at eps={cfg['epsilon']:g}...")
    ens = _load_paths(cfg)
    scan = exceptional_scan(ens, cfg["rect"], cfg["thetas"], cfg["epsilon"], use_sigma=cfg["use_sigma"])
    _write_table(cfg, manifest, "scan", scan.table())
    _write_summary(cfg, manifest, "scan", _statistic_summary(
        "exceptional_scan", [scan.epsilon], scan.fractions, thetas=scan.thetas,
        uniform_constant_median=float(np.median(scan.uniform_constants))))


def run_moments(cfg: ExperimentConfig, manifest: dict):
    print(f"\n[MOMENTS] Moments of order {', '.join(f'{k:g}' for k in cfg['k_list'])}...")
    ens = _load_paths(cfg)
    table = moment_growth(ens, _center(cfg), cfg["k_list"], cfg["bounded"])
    fits = {}
    try:
        fits["norm_vs_k"] = fit_exponent(table["k"], table["norm"], min_decades=0.5).summary()
    except EstimatorError as exc:
        logger.info("moment growth exponent not fitted: %s", exc)
    _write_table(cfg, manifest, "moments", table)
    _write_summary(cfg, manifest, "moments", _statistic_summary("moments", table["k"], table["norm"], fits=fits))


# ---------------------------------------------------------------------------
# Acceptance
# ---------------------------------------------------------------------------

def run_acceptance(cfg: ExperimentConfig, manifest: dict):
    ctx = SuiteContext(cfg.seed, cfg.threads, cfg["quick"])
    only = [int(c) for c in cfg["criteria"].split(",")] if cfg["criteria"] else None
    print(f"\n[ACCEPTANCE] Running {'quick' if ctx.quick else 'full'} suite...")
    timings = manifest.setdefault("timings", {})

    def report(result):
        mark = "ok  " if result.passed else "FAIL"
        over = "" if result.seconds <= result.budget else f", over {result.budget:.0f}s budget"
        print(f"  {mark} [{result.number:2d}] {result.name} ({result.seconds:.1f}s{over})")
        if result.error:
            print(f"       {result.error}")
        timings[str(result.number)] = {"seconds": result.seconds, "budget": result.budget}

    results = run_suite(ctx, only, on_result=report)
    _write_table(cfg, manifest, "acceptance", pd.DataFrame([r.row() for r in results]))
    _write_summary(cfg, manifest, "acceptance", {
        "quick": ctx.quick,
        "criteria": {str(r.number): {"name": r.name, "passed": r.passed, "metrics": r.metrics, "error": r.error}
                     for r in results},
    })
    failed = [r.number for r in results if not r.passed]
    print(f"[ACCEPTANCE] Done: {len(results) - len(failed)} passed, {len(failed)} failed")
    if failed:
        raise NumericalError(f"acceptance criteria failed: {failed}")


# ---------------------------------------------------------------------------
# CLI: status & clean
# ---------------------------------------------------------------------------

def print_status(out: Path):
    """Print manifest summary."""
    manifest = load_manifest(out)
    if not manifest:
        print(f"No run found in {out}. Run e.g.: python lab.py sample-w --out {out}")
        return

    artifacts = manifest.get("artifacts", {})
    print(f"\nRun manifest: {manifest.get('subcommand')} (seed {manifest.get('seed')})")
    print("-" * 70)
    for name, entry in sorted(artifacts.items()):
        detail = f"{entry['rows']} rows" if "rows" in entry else entry.get("error", "")
        print(f"  {name:32s}  {entry.get('status', 'unknown'):6s}  {detail}")
    print("-" * 70)
    ok = sum(1 for e in artifacts.values() if e.get("status") == "ok")
    err = sum(1 for e in artifacts.values() if e.get("status") == "error")
    print(f"  {'TOTAL':32s}  {ok} ok, {err} errors")

    print(f"\n  Started: {manifest.get('started')}")
    if "wall_time_s" in manifest:
        print(f"  Wall time: {manifest['wall_time_s']:.1f}s (exit code {manifest.get('exit_code')})")
    if (out / DIAGNOSTIC_NAME).exists():
        print(f"  Diagnostic: {out / DIAGNOSTIC_NAME}")
    total_size = sum(p.stat().st_size for p in out.rglob("*.parquet"))
    print(f"  Total Parquet size: {total_size / 1024 / 1024:.1f} MB")


def clean_run(out: Path):
    """Remove a run directory."""
    if out.exists():
        shutil.rmtree(out)
        print(f"Removed {out}/ and all artifacts.")
    else:
        print(f"No {out}/ directory found.")


# ---------------------------------------------------------------------------
# Main
# ---------------------------------------------------------------------------

SUBCOMMAND_FUNCTIONS = {
    "eigen": run_eigen,
    "kernel": run_kernel,
    "kernel-bound-fit": run_kernel_bound_fit,
    "cov": run_cov,
    "sample-w": run_sample_w,
    "slnd-scan": run_slnd_scan,
    "solve": run_solve,
    "kpz": run_kpz,
    "modulus": run_modulus,
    "smallball": run_smallball,
    "chung": run_chung,
    "scan": run_scan,
    "moments": run_moments,
    "acceptance": run_acceptance,
}


def execute(cfg: ExperimentConfig) -> int:
    """Run one configured subcommand; returns the exit code."""
    if cfg.subcommand == "status":
        print_status(cfg.out)
        return 0
    if cfg.subcommand == "clean":
        clean_run(cfg.out)
        return 0

    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / DIAGNOSTIC_NAME).unlink(missing_ok=True)
    manifest = new_manifest(cfg.subcommand, cfg.echo(), cfg.seed)

    start_time = datetime.now()
    print(f"SPDE lab: {cfg.subcommand}")
    print(f"Started: {start_time.isoformat()}")
    print(f"Output directory: {cfg.out.resolve()}")
    print(f"Seed: {cfg.seed}  Threads: {cfg.threads}")

    code = 0
    started = time.time()
    try:
        SUBCOMMAND_FUNCTIONS[cfg.subcommand](cfg, manifest)
    except LabError as e:
        print(f"  ERR {cfg.subcommand}: {e}")
        update_manifest(manifest, cfg.subcommand, error=f"{type(e).__name__}: {e}")
        path = write_diagnostic(cfg.out, cfg.subcommand, e, cfg.echo())
        print(f"  Diagnostic written to {path}")
        code = e.exit_code
    except Exception as e:
        logger.exception("%s stopped on an unexpected %s", cfg.subcommand, type(e).__name__)
        print(f"  ERR {cfg.subcommand}: unexpected {type(e).__name__}: {e}")
        update_manifest(manifest, cfg.subcommand, error=f"{type(e).__name__}: {e}")
        path = write_diagnostic(cfg.out, cfg.subcommand, e, cfg.echo())
        print(f"  Diagnostic written to {path}")
        code = LabError.exit_code
    manifest["wall_time_s"] = time.time() - started
    manifest["exit_code"] = code
    save_manifest(cfg.out, manifest)

    artifacts = manifest["artifacts"].values()
    ok_count = sum(1 for v in artifacts if v.get("status") == "ok")
    err_count = sum(1 for v in artifacts if v.get("status") == "error")
    print(f"\nFinished in {manifest['wall_time_s']:.1f}s: {ok_count} ok, {err_count} errors")
    print(f"Manifest saved to {cfg.out / MANIFEST_NAME}")
    return code


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not numerical ones."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        description="SPDE lab: spectral heat kernels, Gaussian fields, SPDE solvers and path statistics",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python lab.py eigen --bc robin --alpha 1 --beta 2 --negative-modes include
  python lab.py sample-w --t-grid 0:1:65 --x-grid 0:1:65 --reps 1000
  python lab.py solve --b cos --sigma sin2 --u0 bump --reps 200
  python lab.py kpz --mu 0.3 --nu 0.7 --u0 const:1
  python lab.py chung --paths runs/paths/w.parquet
  python lab.py acceptance --quick
  python lab.py status --out runs
        """,
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    for name, (help_text, options) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument("--verbose", action="store_true", default=False, help="debug logging")
        for opt in COMMON + options:
            if opt.kind == "bool":
                p.add_argument(opt.flag, dest=opt.name, action=argparse.BooleanOptionalAction,
                               help=f"{opt.help} (default: {opt.default})")
            else:
                p.add_argument(opt.flag, dest=opt.name, help=f"{opt.help} (default: {opt.default})")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_help()
        return 1

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config", "verbose")}
    try:
        cfg = build_config(args.subcommand, overrides, args.config)
        if cfg.subcommand == "rerun":
            print(f"Replaying {cfg['manifest']}")
            cfg = config_from_manifest(cfg["manifest"], out=overrides.get("out"))
    except ConfigError as e:
        print(f"ERR config: {e}", file=sys.stderr)
        out = Path(overrides.get("out", DEFAULT_OUT))
        write_diagnostic(out, args.subcommand, e, {"subcommand": args.subcommand, "flags": overrides})
        return e.exit_code
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
