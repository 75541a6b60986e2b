"""Artifact writers and sweep orchestration.

Every file written here embeds the full effective config and its hash
(JSON fields, or a leading ``#`` comment line in CSVs), so any number in
any artifact can be traced back to one reproducible run.  Floats are
formatted with repr for exact double round-trips.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .network import save_checkpoint
from .training import TrainConfig, make_test_grid, train


def config_hash(cfg):
    payload = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _comment_header(cfg, extra=""):
    h = config_hash(cfg)
    blob = json.dumps(cfg.to_dict(), sort_keys=True)
    line = f"# config_hash={h} config={blob}"
    return line + (f" {extra}" if extra else "")


# ---------------------------------------------------------------------------
# single-run artifacts
# ---------------------------------------------------------------------------

def write_report_json(report, path):
    payload = report.to_dict()
    payload["config_hash"] = config_hash(report.config)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    return path


def write_trainlog_csv(report, path):
    cols = ["epoch", "residual", "holder_sup_u", "holder_sup_ratio", "total",
            "rmse_probe"]
    with open(path, "w") as fh:
        fh.write(_comment_header(report.config) + "\n")
        fh.write(",".join(cols) + "\n")
        for row in report.trace:
            fh.write(",".join(_fmt(row.get(c)) for c in cols) + "\n")
    return path


def write_grid_csv(report, problem, path):
    grid = make_test_grid(problem)
    u_exact = problem.u_exact(grid)
    u_pred = report.ansatz.predict(grid)
    err = np.abs(u_pred - u_exact)
    coord_names = ["x", "y"][: problem.dim]
    with open(path, "w") as fh:
        fh.write(_comment_header(report.config) + "\n")
        fh.write(",".join(coord_names + ["u_exact", "u_pred", "abs_error"]) + "\n")
        for i in range(grid.shape[0]):
            vals = [grid[i, d] for d in range(problem.dim)]
            vals += [u_exact[i], u_pred[i], err[i]]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")
    return path


def write_checkpoint(report, path):
    save_checkpoint(report.ansatz.net, path, seed=report.config.seed,
                    config_hash=config_hash(report.config))
    report.final_params_ref = os.path.basename(path)
    return path


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepSpec:
    """A (ρ × N_H × seed) cross product around one base config.

    include_baseline adds one λ=0 run per seed so cells can be compared
    against the unregularized model trained on the same points.
    """

    base: TrainConfig
    rho_values: list
    nh_values: list
    seeds: list
    include_baseline: bool = True

    def __post_init__(self):
        if not self.rho_values:
            raise ValueError("rho_values: must be a nonempty list")
        if not self.nh_values:
            raise ValueError("nh_values: must be a nonempty list")
        if not self.seeds:
            raise ValueError("seeds: must be a nonempty list")
        if any(r <= 0 for r in self.rho_values):
            raise ValueError("rho_values: all entries must be positive")
        if any(int(n) < 1 for n in self.nh_values):
            raise ValueError("nh_values: all entries must be >= 1")
        if self.base.lam <= 0:
            raise ValueError("base.lambda: sweep base must have lambda > 0")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {"base", "rho_values", "nh_values", "seeds", "include_baseline"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown sweep field(s): {', '.join(unknown)}")
        missing = sorted(k for k in ("base", "rho_values", "nh_values", "seeds")
                         if k not in d)
        if missing:
            raise ValueError(f"missing sweep field(s): {', '.join(missing)}")
        base = TrainConfig.from_dict(d.pop("base"))
        return cls(base=base, **d)


def _run_row(cfg_dict, arm):
    """Worker: one training run reduced to a picklable result row."""
    cfg = TrainConfig.from_dict(cfg_dict)
    try:
        report = train(cfg)
        return {
            "arm": arm,
            "problem": cfg.problem,
            "rho": cfg.rho,
            "N_H": cfg.N_H,
            "seed": cfg.seed,
            "lambda": cfg.lam,
            "rmse": report.rmse,
            "linf": report.linf,
            "diverged": report.diverged,
            "epochs_run": report.epochs_run,
            "wall_time_s": report.wall_time_s,
        }
    except ValueError as exc:
        # setup-level failure for this cell (e.g. every pair clipped):
        # record NaN and keep the sweep going
        return {
            "arm": arm, "problem": cfg.problem, "rho": cfg.rho,
            "N_H": cfg.N_H, "seed": cfg.seed, "lambda": cfg.lam,
            "rmse": float("nan"), "linf": float("nan"), "diverged": True,
            "epochs_run": 0, "wall_time_s": 0.0, "error": str(exc),
        }


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list = field(default_factory=list)
    matrix: np.ndarray = None          # (len(rho), len(nh)) median rmse
    baseline_median: float = float("nan")
    best: dict = None
    flagged: list = field(default_factory=list)


def execute_sweep(spec, jobs=1, echo=None):
    """Run every cell (and the baseline arm), aggregate medians per cell.

    Diverged runs enter the long-form rows as NaN; a cell's median ignores
    NaN seeds and is NaN only if every seed diverged.  Cells whose median
    exceeds the baseline median are flagged, not failed — extreme (ρ, N_H)
    corners are expected to lose to the unregularized model sometimes.
    """
    tasks = []
    for rho in spec.rho_values:
        for nh in spec.nh_values:
            for seed in spec.seeds:
                cfg = replace(spec.base, rho=float(rho), N_H=int(nh),
                              seed=int(seed))
                tasks.append((cfg.to_dict(), "regularized"))
    if spec.include_baseline:
        for seed in spec.seeds:
            cfg = replace(spec.base, seed=int(seed), lam=0.0)
            tasks.append((cfg.to_dict(), "baseline"))

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            rows = list(pool.map(_run_row, *zip(*[(c, a) for c, a in tasks])))
    else:
        rows = []
        for cfg_dict, arm in tasks:
            row = _run_row(cfg_dict, arm)
            rows.append(row)
            if echo:
                cell = ("" if arm == "baseline"
                        else f"rho={row['rho']} N_H={row['N_H']} ")
                echo(f"  {arm} {cell}seed={row['seed']} "
                     f"rmse={_fmt(row['rmse'])}")

    nr, nn = len(spec.rho_values), len(spec.nh_values)
    matrix = np.full((nr, nn), np.nan)
    for i, rho in enumerate(spec.rho_values):
        for j, nh in enumerate(spec.nh_values):
            vals = [r["rmse"] for r in rows
                    if r["arm"] == "regularized"
                    and r["rho"] == float(rho) and r["N_H"] == int(nh)]
            vals = np.asarray(vals, dtype=np.float64)
            if np.isfinite(vals).any():
                matrix[i, j] = np.nanmedian(vals)

    base_vals = np.asarray(
        [r["rmse"] for r in rows if r["arm"] == "baseline"], dtype=np.float64
    )
    baseline_median = (
        float(np.nanmedian(base_vals))
        if base_vals.size and np.isfinite(base_vals).any() else float("nan")
    )

    best = None
    if np.isfinite(matrix).any():
        i, j = np.unravel_index(np.nanargmin(matrix), matrix.shape)
        best = {
            "rho": float(spec.rho_values[i]),
            "N_H": int(spec.nh_values[j]),
            "median_rmse": float(matrix[i, j]),
        }

    flagged = []
    if math.isfinite(baseline_median):
        for i, rho in enumerate(spec.rho_values):
            for j, nh in enumerate(spec.nh_values):
                cell = matrix[i, j]
                if not math.isfinite(cell) or cell > baseline_median:
                    flagged.append({
                        "rho": float(rho), "N_H": int(nh),
                        "median_rmse": float(cell),
                        "baseline_median_rmse": baseline_median,
                    })

    return SweepResult(spec=spec, rows=rows, matrix=matrix,
                       baseline_median=baseline_median, best=best,
                       flagged=flagged)


def write_sweep_matrix_csv(result, path):
    spec = result.spec
    extra = ""
    if result.best:
        extra = (f"best_cell=rho:{result.best['rho']},N_H:{result.best['N_H']},"
                 f"median_rmse:{_fmt(result.best['median_rmse'])}")
    with open(path, "w") as fh:
        fh.write(_comment_header(spec.base, extra) + "\n")
        fh.write("rho\\N_H," + ",".join(str(n) for n in spec.nh_values) + "\n")
        for i, rho in enumerate(spec.rho_values):
            cells = [_fmt(float(result.matrix[i, j]))
                     for j in range(len(spec.nh_values))]
            fh.write(",".join([_fmt(float(rho))] + cells) + "\n")
    return path


def write_sweep_runs_csv(result, path):
    cols = ["arm", "problem", "rho", "N_H", "seed", "lambda", "rmse", "linf",
            "diverged", "epochs_run", "wall_time_s"]
    with open(path, "w") as fh:
        fh.write(_comment_header(result.spec.base) + "\n")
        fh.write(",".join(cols) + "\n")
        for row in result.rows:
            fh.write(",".join(_fmt(row.get(c)) for c in cols) + "\n")
    return path


def write_sweep_summary_json(result, path):
    spec = result.spec
    payload = {
        "base_config": spec.base.to_dict(),
        "config_hash": config_hash(spec.base),
        "rho_values": [float(r) for r in spec.rho_values],
        "nh_values": [int(n) for n in spec.nh_values],
        "seeds": [int(s) for s in spec.seeds],
        "median_rmse_matrix": [
            [None if not math.isfinite(v) else float(v) for v in row]
            for row in result.matrix
        ],
        "baseline_median_rmse": (
            None if not math.isfinite(result.baseline_median)
            else result.baseline_median
        ),
        "best_cell": result.best,
        "cells_not_beating_baseline": result.flagged,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    return path
