"""Command-line harness: run / sweep / compare.

Exit codes: 0 success, 1 divergence, 2 bad input (malformed config, unknown
or invalid fields, unreadable files).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .problems import get_problem
from .reports import (SweepSpec, config_hash, execute_sweep,
                      write_checkpoint, write_grid_csv, write_report_json,
                      write_sweep_matrix_csv, write_sweep_runs_csv,
                      write_sweep_summary_json, write_trainlog_csv)
from .training import TrainConfig, train

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_BAD_INPUT = 2


class BadInput(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise BadInput(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BadInput(f"{path} is not valid JSON: {exc}") from exc


def _load_config(path, seed=None):
    try:
        cfg = TrainConfig.from_dict(_load_json(path))
    except (ValueError, TypeError) as exc:
        raise BadInput(f"config error in {path}: {exc}") from exc
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    return cfg


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _train_or_bad_input(cfg):
    try:
        return train(cfg)
    except ValueError as exc:
        raise BadInput(f"config error: {exc}") from exc


def cmd_run(args):
    cfg = _load_config(args.config, seed=args.seed)
    out = _outdir(args.out)
    report = _train_or_bad_input(cfg)
    problem = get_problem(cfg.problem)
    write_checkpoint(report, os.path.join(out, "checkpoint.json"))
    write_report_json(report, os.path.join(out, "report.json"))
    write_trainlog_csv(report, os.path.join(out, "trainlog.csv"))
    write_grid_csv(report, problem, os.path.join(out, "grid.csv"))
    print(f"config_hash={config_hash(cfg)} problem={cfg.problem} "
          f"seed={cfg.seed} epochs_run={report.epochs_run}")
    print(f"rmse={report.rmse!r} linf={report.linf!r}")
    if report.diverged:
        print(f"DIVERGED: {report.abort_reason}")
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_sweep(args):
    try:
        spec = SweepSpec.from_dict(_load_json(args.sweep))
    except (ValueError, TypeError) as exc:
        raise BadInput(f"sweep error in {args.sweep}: {exc}") from exc
    out = _outdir(args.out)
    result = execute_sweep(spec, jobs=args.jobs, echo=print)
    write_sweep_matrix_csv(result, os.path.join(out, "sweep_matrix.csv"))
    write_sweep_runs_csv(result, os.path.join(out, "sweep_runs.csv"))
    write_sweep_summary_json(result, os.path.join(out, "sweep_summary.json"))

    header = ["rho\\N_H"] + [str(n) for n in spec.nh_values]
    print("median RMSE over seeds " + str([int(s) for s in spec.seeds]))
    print(",".join(header))
    for i, rho in enumerate(spec.rho_values):
        cells = [f"{result.matrix[i, j]:.3e}" if math.isfinite(result.matrix[i, j])
                 else "nan" for j in range(len(spec.nh_values))]
        print(",".join([str(rho)] + cells))
    if math.isfinite(result.baseline_median):
        print(f"baseline (lambda=0) median RMSE: {result.baseline_median:.3e}")
    if result.best:
        print(f"best cell: rho={result.best['rho']} N_H={result.best['N_H']} "
              f"median RMSE {result.best['median_rmse']:.3e}")
    for flag in result.flagged:
        print(f"flag: cell rho={flag['rho']} N_H={flag['N_H']} "
              f"(median {flag['median_rmse']:.3e}) does not beat baseline")
    return EXIT_OK


def cmd_compare(args):
    cfg = _load_config(args.config)
    out = _outdir(args.out)
    seeds = [cfg.seed + i for i in range(int(args.seeds))]

    arms = {}
    any_diverged = False
    for label, lam in (("standard", 0.0), ("regularized", cfg.lam)):
        rows = []
        for seed in seeds:
            arm_cfg = replace(cfg, lam=lam, seed=seed)
            report = _train_or_bad_input(arm_cfg)
            any_diverged = any_diverged or report.diverged
            rows.append({"seed": seed, "rmse": report.rmse,
                         "linf": report.linf, "diverged": report.diverged})
        rmses = np.asarray([r["rmse"] for r in rows])
        linfs = np.asarray([r["linf"] for r in rows])
        arms[label] = {
            "lambda": lam,
            "runs": rows,
            "rmse_median": float(np.nanmedian(rmses)) if np.isfinite(rmses).any() else float("nan"),
            "rmse_min": float(np.nanmin(rmses)) if np.isfinite(rmses).any() else float("nan"),
            "rmse_max": float(np.nanmax(rmses)) if np.isfinite(rmses).any() else float("nan"),
            "linf_median": float(np.nanmedian(linfs)) if np.isfinite(linfs).any() else float("nan"),
            "linf_min": float(np.nanmin(linfs)) if np.isfinite(linfs).any() else float("nan"),
            "linf_max": float(np.nanmax(linfs)) if np.isfinite(linfs).any() else float("nan"),
        }

    payload = {
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg),
        "seeds": seeds,
        "standard": arms["standard"],
        "regularized": arms["regularized"],
    }
    with open(os.path.join(out, "compare.json"), "w") as fh:
        json.dump(payload, fh, indent=2)

    print(f"{'':14s}{'RMSE (median [min, max])':34s}L_inf (median [min, max])")
    for label in ("standard", "regularized"):
        a = arms[label]
        rm = f"{a['rmse_median']:.5f} [{a['rmse_min']:.5f}, {a['rmse_max']:.5f}]"
        li = f"{a['linf_median']:.5f} [{a['linf_min']:.5f}, {a['linf_max']:.5f}]"
        print(f"{label:14s}{rm:34s}{li}")
    return EXIT_DIVERGED if any_diverged else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="holderpinn",
        description="PINN solver with variable-distance local Hölder "
                    "regularization: single runs, (rho x N_H) sweeps, and "
                    "regularized-vs-standard comparisons.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="train one config and write artifacts")
    run_p.add_argument("config", help="path to a TrainConfig JSON file")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the config's seed")
    run_p.add_argument("--out", default=".", help="output directory")
    run_p.set_defaults(fn=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a (rho x N_H x seed) sweep")
    sweep_p.add_argument("sweep", help="path to a SweepSpec JSON file")
    sweep_p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                         help="worker pool size (default: available cores)")
    sweep_p.add_argument("--out", default=".", help="output directory")
    sweep_p.set_defaults(fn=cmd_sweep)

    cmp_p = sub.add_parser("compare",
                           help="run a config with its lambda and lambda=0")
    cmp_p.add_argument("config", help="path to a TrainConfig JSON file")
    cmp_p.add_argument("--seeds", type=int, default=1,
                       help="number of consecutive seeds to aggregate")
    cmp_p.add_argument("--out", default=".", help="output directory")
    cmp_p.set_defaults(fn=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BadInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
