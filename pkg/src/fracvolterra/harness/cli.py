"""``fracvolterra`` command line.

Subcommands::

    fracvolterra run CONFIG
    fracvolterra verify {specfun,fracops,spectral,model,solver,all}
    fracvolterra converge CONFIG --levels K

Exit status is 0 iff every monitor and requested check passes; 2 flags a bad
configuration, 3 a blow-up, 4 a non-converging Picard iteration.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy.fft

from fracvolterra.fracops import TimeMesh
from fracvolterra.harness.config import ConfigError, RunConfig, parse_config
from fracvolterra.harness.suites import SUITES, format_report, run_suite
from fracvolterra.solver import (
    BlowUpError,
    ConvergenceError,
    Trajectory,
    run_diagnostics,
    solve,
)

logger = logging.getLogger("fracvolterra")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP, EXIT_NONCONVERGENCE = 0, 1, 2, 3, 4


def _fmt(x) -> str:
    return repr(float(x))


# {{{ output

def _stored_indices(n: int, every: int) -> np.ndarray:
    idx = np.arange(0, n, every)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def write_trajectory(path: Path, traj: Trajectory, every: int) -> None:
    values = traj.values.reshape(len(traj), -1)
    with path.open("w") as fh:
        fh.write("t,x_index,u\n")
        for k in _stored_indices(len(traj), every):
            t = _fmt(traj.times[k])
            fh.writelines(f"{t},{i},{_fmt(v)}\n" for i, v in enumerate(values[k]))


def write_diagnostics(path: Path, traj: Trajectory, increments, every: int) -> None:
    inc = np.concatenate([[0.0], increments])
    with path.open("w") as fh:
        fh.write("t,min,max,dist_to_equilibrium,mean,continuity_increment\n")
        for k in _stored_indices(len(traj), every):
            row = [traj.times[k], *traj.diagnostics[k], inc[k]]
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_summary(path: Path, items: dict) -> None:
    with path.open("w") as fh:
        fh.writelines(f"{key} = {value}\n" for key, value in items.items())

# }}}


# {{{ commands

def cmd_run(cfg: RunConfig, out_dir: Path, seed: int = 0) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.echo").write_text(cfg.echo() + "\n")
    logger.info("materialized configuration:\n%s", cfg.echo())

    u0 = cfg.init.field(cfg.grid, seed)
    summary = {"seed": seed, "scheme": cfg.solver.scheme}
    status = EXIT_OK
    try:
        traj = solve(cfg.params, cfg.grid, u0, cfg.solver)
        summary["status"] = "completed"
    except BlowUpError as exc:
        logger.error("%s", exc)
        traj = exc.trajectory
        summary["status"] = "blowup"
        summary["t_exit"] = _fmt(exc.t_exit)
        status = EXIT_BLOWUP
    except ConvergenceError as exc:
        logger.error("%s", exc)
        summary["status"] = "nonconvergence"
        summary["message"] = str(exc)
        write_summary(out_dir / "summary.txt", summary)
        return EXIT_NONCONVERGENCE

    diag = run_diagnostics(traj, cfg.params, positivity_tol=cfg.positivity_tol,
                           bound_tol=cfg.bound_tol)
    write_trajectory(out_dir / "trajectory.csv", traj, cfg.output_every)
    write_diagnostics(out_dir / "diagnostics.csv", traj, diag.increments, cfg.output_every)

    summary.update({
        "t_final": _fmt(traj.times[-1]),
        "min_u": _fmt(diag.min_margin),
        "max_u": _fmt(diag.max_value),
        "bound": _fmt(diag.bound),
        "positivity": "pass" if diag.positivity_ok else "fail",
        "boundedness": "pass" if diag.bound_ok else "fail",
        "dist_to_equilibrium": _fmt(diag.dist_to_equilibrium[-1]),
        "continuity_modulus": _fmt(diag.continuity_modulus),
        "stationary_residual": _fmt(diag.final_residual),
    })
    if status == EXIT_OK and not (diag.positivity_ok and diag.bound_ok):
        status = EXIT_FAIL
    if cfg.equilibrium_tol is not None:
        ok = diag.dist_to_equilibrium[-1] <= cfg.equilibrium_tol
        summary["equilibrium"] = "pass" if ok else "fail"
        if status == EXIT_OK and not ok:
            status = EXIT_FAIL
    if cfg.suite != "none":
        results = run_suite(cfg.suite)
        (out_dir / f"verify_{cfg.suite}.csv").write_text(format_report(results) + "\n")
        ok = all(r.passed for r in results)
        summary[f"verify_{cfg.suite}"] = "pass" if ok else "fail"
        if status == EXIT_OK and not ok:
            status = EXIT_FAIL
    write_summary(out_dir / "summary.txt", summary)
    return status


def cmd_verify(suite: str, out_dir: Path | None = None) -> int:
    results = run_suite(suite)
    report = format_report(results)
    print(report)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"verify_{suite}.csv").write_text(report + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def convergence_study(cfg: RunConfig, levels: int, scheme: str, seed: int = 0):
    """Rows ``(N, err_vs_finest, diff_to_next, order)`` for ``N, 2N, ...``.

    Meshes of successive levels are nested, so differences are taken on the
    coarser level's nodes. Orders come from ratios of successive differences.
    """
    if levels < 3:
        raise ValueError(f"need at least 3 levels, got {levels}")
    base = cfg.solver.mesh
    r = 1.0 if scheme == "MildPicard" else base.r
    u0 = cfg.init.field(cfg.grid, seed)
    sols = []
    for level in range(levels):
        mesh = TimeMesh(base.T, base.N * 2 ** level, r)
        traj = solve(cfg.params, cfg.grid, u0, replace(cfg.solver, mesh=mesh, scheme=scheme))
        sols.append(traj.values)
    finest = sols[-1]
    scale = max(float(np.max(np.abs(finest))), 1.0e-300)
    rows = []
    for level, V in enumerate(sols):
        stride = 2 ** (levels - 1 - level)
        err = float(np.max(np.abs(V - finest[::stride])))
        diff = (float(np.max(np.abs(V - sols[level + 1][::2])))
                if level + 1 < levels else math.nan)
        rows.append([base.N * 2 ** level, err, diff, math.nan])
    for level in range(levels - 2):
        d0, d1 = rows[level][2], rows[level + 1][2]
        if d0 > 0 and d1 > 0:
            rows[level + 1][3] = math.log2(d0 / d1)
    exact = max(row[2] for row in rows[:-1]) <= 1.0e-10 * scale
    return rows, exact


def cmd_converge(cfg: RunConfig, levels: int, out_dir: Path,
                 schemes=("MildPicard", "L1Spectral"), seed: int = 0) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["scheme,N,err_vs_finest,diff_to_next,order,regime"]
    for scheme in schemes:
        rows, exact = convergence_study(cfg, levels, scheme, seed)
        regime = "exact regime" if exact else "asymptotic"
        for N, err, diff, order in rows:
            lines.append(f"{scheme},{N},{err:.6e},{diff:.6e},{order:.4f},{regime}")
    report = "\n".join(lines)
    print(report)
    (out_dir / "converge.csv").write_text(report + "\n")
    return EXIT_OK

# }}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracvolterra",
        description="Time-space fractional Volterra population model: runs, checks, "
                    "refinement studies.")
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="output directory (overrides output.dir)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for random initial data (default: 0)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for the cosine transforms (default: 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate the configured problem")
    p.add_argument("config", type=Path)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=[*SUITES, "all"])

    p = sub.add_parser("converge", help="refinement study at N, 2N, 4N, ...")
    p.add_argument("config", type=Path)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--scheme", choices=["MildPicard", "L1Spectral", "both"], default="both")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    with scipy.fft.set_workers(args.threads):
        if args.command == "verify":
            return cmd_verify(args.suite, args.out_dir)

        try:
            cfg = parse_config(args.config)
        except ConfigError as exc:
            print(f"configuration error:\n{exc}", file=sys.stderr)
            return EXIT_CONFIG
        out_dir = args.out_dir if args.out_dir is not None else Path(cfg.output_dir)
        if args.command == "run":
            return cmd_run(cfg, out_dir, args.seed)
        if args.levels < 3:
            print("error: --levels must be at least 3", file=sys.stderr)
            return EXIT_CONFIG
        schemes = ("MildPicard", "L1Spectral") if args.scheme == "both" else (args.scheme,)
        return cmd_converge(cfg, args.levels, out_dir, schemes, args.seed)


if __name__ == "__main__":
    sys.exit(main())
