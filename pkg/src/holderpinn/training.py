"""Adam training loop over the total loss, plus evaluation on test grids.

One run is fully determined by its TrainConfig: the seed expands (via
SeedSequence) into independent streams for parameter init, collocation
points, and offsets, so two runs with the same config produce bit-identical
loss traces in a single-threaded build.

When λ = 0 (or the regularizer is disabled) the loop never assembles the
Hölder term — not even its sampling — so the reduction to the standard
formulation is exact by construction rather than by arithmetic accident.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from . import kernels
from .loss import breakdown, holder_loss, residual_loss, total_loss
from .network import init_mlp, make_ansatz
from .problems import get_problem, problem_names
from .sampling import (SampleSet, neighborhood_pairs, pair_geometry,
                       sample_offsets, sample_residual_points)

#: training aborts once the total loss exceeds this (or goes non-finite)
DIVERGENCE_LIMIT = 1.0e6

_SAMPLERS = ("uniform", "latin")


class DivergenceError(RuntimeError):
    """Raised when gradients or losses leave the finite/bounded regime."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    """All hyperparameters of one run.  JSON uses the key "lambda" for lam."""

    problem: str
    layer_sizes: list
    N_r: int
    N_H: int
    rho: float
    alpha: float
    lam: float
    w_r: float = 1.0
    lr: float = 1e-3
    epochs: int = 20000
    seed: int = 0
    log_every: int = 100
    sampler: str = "uniform"
    resample_offsets: bool = False
    softmax_temp: float = 0.0
    holder_enabled: bool = True
    probe_rmse: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if str(self.problem).lower() not in problem_names():
            raise ValueError(
                f"problem: unknown name {self.problem!r}; "
                f"expected one of {', '.join(problem_names())}"
            )
        sizes = [int(s) for s in self.layer_sizes]
        if len(sizes) < 3 or any(s <= 0 for s in sizes) or sizes[-1] != 1:
            raise ValueError(f"layer_sizes: invalid architecture {self.layer_sizes}")
        self.layer_sizes = sizes
        checks = [
            (self.N_r >= 1, "N_r: need at least one residual point"),
            (self.N_H >= 1, "N_H: need at least one offset"),
            (self.rho > 0, f"rho: must be positive, got {self.rho}"),
            (0.0 < self.alpha < 1.0, f"alpha: must lie in (0,1), got {self.alpha}"),
            (self.lam >= 0, f"lambda: must be nonnegative, got {self.lam}"),
            (self.w_r > 0, f"w_r: must be positive, got {self.w_r}"),
            (self.lr > 0, f"lr: must be positive, got {self.lr}"),
            (self.epochs >= 1, f"epochs: must be >= 1, got {self.epochs}"),
            (self.seed >= 0, f"seed: must be a nonnegative integer, got {self.seed}"),
            (self.log_every >= 1, f"log_every: must be >= 1, got {self.log_every}"),
            (self.sampler in _SAMPLERS,
             f"sampler: {self.sampler!r} not in {_SAMPLERS}"),
            (self.softmax_temp >= 0, "softmax_temp: must be >= 0"),
            (self.probe_rmse >= 0, "probe_rmse: must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    @classmethod
    def from_dict(cls, d):
        from dataclasses import MISSING, fields

        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = [f.name for f in fields(cls)]
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(unknown)}")
        required = [
            f.name for f in fields(cls)
            if f.default is MISSING and f.default_factory is MISSING
        ]
        missing = sorted(k for k in required if k not in d)
        if missing:
            jsonnames = ["lambda" if m == "lam" else m for m in missing]
            raise ValueError(f"missing config field(s): {', '.join(jsonnames)}")
        return cls(**d)

    def to_dict(self):
        d = {
            "problem": self.problem,
            "layer_sizes": list(self.layer_sizes),
            "N_r": self.N_r,
            "N_H": self.N_H,
            "rho": self.rho,
            "alpha": self.alpha,
            "lambda": self.lam,
            "w_r": self.w_r,
            "lr": self.lr,
            "epochs": self.epochs,
            "seed": self.seed,
            "log_every": self.log_every,
            "sampler": self.sampler,
            "resample_offsets": self.resample_offsets,
            "softmax_temp": self.softmax_temp,
            "holder_enabled": self.holder_enabled,
            "probe_rmse": self.probe_rmse,
        }
        return d


#: per-problem defaults: architecture and the reference hyperparameters
PRESETS = {
    "ode": dict(layer_sizes=[1, 20, 20, 20, 1], N_r=100, N_H=20,
                rho=0.01, lam=1e-3),
    "poisson": dict(layer_sizes=[2, 20, 20, 20, 20, 1], N_r=400, N_H=15,
                    rho=0.005, lam=1e-5),
    "varcoef": dict(layer_sizes=[2, 20, 20, 20, 20, 1], N_r=300, N_H=20,
                    rho=0.01, lam=1e-5),
    "helmholtz": dict(layer_sizes=[2, 20, 20, 20, 20, 1], N_r=500, N_H=15,
                      rho=0.02, lam=1e-5),
}


def preset(problem, **overrides):
    base = dict(PRESETS[str(problem).lower()])
    base.update(problem=str(problem).lower(), alpha=0.5)
    base.update(overrides)
    return TrainConfig(**base)


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(m=np.zeros(n), v=np.zeros(n))


def adam_step(params, grad, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """In-place bias-corrected Adam update of the flat parameter vector."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.theta.shape:
        raise ValueError(f"gradient shape {grad.shape} != theta {params.theta.shape}")
    if not np.all(np.isfinite(grad)):
        bad = int(np.count_nonzero(~np.isfinite(grad)))
        raise DivergenceError(
            f"{bad} non-finite gradient component(s) at step {state.step + 1}"
        )
    state.step += 1
    kernels.get().adam_update(
        params.theta, grad, state.m, state.v, state.step, lr, beta1, beta2, eps
    )
    return params, state


# ---------------------------------------------------------------------------
# metrics and the loop
# ---------------------------------------------------------------------------

def make_test_grid(problem):
    """1D: 201 points across the interval.  2D: inclusive 201×201 mesh."""
    box = np.asarray(problem.box, dtype=np.float64)
    if problem.dim == 1:
        return np.linspace(box[0, 0], box[0, 1], 201)[:, None]
    xs = np.linspace(box[0, 0], box[0, 1], 201)
    ys = np.linspace(box[1, 0], box[1, 1], 201)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def evaluate_metrics(ansatz, problem, grid):
    """(relative L2 error, max absolute error) of û against u* on the grid."""
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    if grid.shape[0] == 0:
        raise ValueError("empty evaluation grid")
    u_pred = ansatz.predict(grid)
    u_star = problem.u_exact(grid)
    denom = float(np.sqrt(np.sum(u_star * u_star)))
    if denom == 0.0:
        raise ValueError("exact solution is identically zero on the grid; "
                         "relative error is undefined")
    err = u_pred - u_star
    rmse = float(np.sqrt(np.sum(err * err)) / denom)
    linf = float(np.max(np.abs(err)))
    return rmse, linf


@dataclass
class RunReport:
    """Everything one run produced (the ansatz rides along as .ansatz)."""

    config: TrainConfig
    trace: list = field(default_factory=list)
    rmse: float = float("nan")
    linf: float = float("nan")
    wall_time_s: float = 0.0
    diverged: bool = False
    abort_reason: str = None
    epochs_run: int = 0
    final_params_ref: str = None

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "rmse": self.rmse,
            "linf": self.linf,
            "wall_time_s": self.wall_time_s,
            "diverged": self.diverged,
            "abort_reason": self.abort_reason,
            "epochs_run": self.epochs_run,
            "final_params_ref": self.final_params_ref,
            "trace": self.trace,
        }


def _derive_seeds(seed):
    ss = np.random.SeedSequence(int(seed))
    s = ss.generate_state(3, dtype=np.uint64)
    return int(s[0]), int(s[1]), int(s[2])


def train(cfg):
    """Run the full loop: init θ, sample X_r and κ_ρ, minimize, evaluate.

    Aborts with a partial report (NaN metrics, diverged=True) if the total
    loss exceeds DIVERGENCE_LIMIT or any quantity goes non-finite.
    """
    cfg.validate()
    t0 = time.perf_counter()
    problem = get_problem(cfg.problem)
    seed_init, seed_points, seed_offsets = _derive_seeds(cfg.seed)

    params = init_mlp(cfg.layer_sizes, seed_init)
    ansatz = make_ansatz(problem, params)
    x_r = sample_residual_points(problem.box, cfg.N_r, seed_points,
                                 method=cfg.sampler)
    f_vals = problem.f(x_r)

    reg_on = cfg.holder_enabled and cfg.lam > 0.0
    sset = pairs = pdata = offset_rng = None
    if reg_on:
        offset_rng = np.random.default_rng(seed_offsets)
        sset = SampleSet(
            residual_points=x_r,
            offsets=sample_offsets(cfg.rho, cfg.N_H, problem.dim, offset_rng),
            rho=cfg.rho, alpha=cfg.alpha, seed=cfg.seed,
        )
        pairs = neighborhood_pairs(sset, problem.box)
        if pairs.shape[0] == 0:
            raise ValueError(
                "rho: every Hölder neighbor leaves the domain; decrease rho"
            )
        pdata = pair_geometry(sset, pairs)

    state = AdamState.zeros(params.size)
    grid = make_test_grid(problem) if cfg.probe_rmse > 0 else None
    trace = []
    diverged = False
    reason = None
    epochs_run = 0

    for epoch in range(1, cfg.epochs + 1):
        if reg_on and cfg.resample_offsets and epoch > 1:
            sset = replace(
                sset,
                offsets=sample_offsets(cfg.rho, cfg.N_H, problem.dim, offset_rng),
            )
            pairs = neighborhood_pairs(sset, problem.box)
            if pairs.shape[0] == 0:
                diverged = True
                reason = f"all Hölder pairs clipped after resampling at epoch {epoch}"
                break
            pdata = pair_geometry(sset, pairs)

        tape = ad.Tape()
        res_node, jet = residual_loss(tape, ansatz, problem, x_r,
                                      f_values=f_vals, return_jet=True)
        hol_node = None
        if reg_on:
            hol_node = holder_loss(tape, ansatz, sset, pairs,
                                   value_node=jet.value, pair_data=pdata,
                                   temp=cfg.softmax_temp)
        tot_node = total_loss(tape, res_node, hol_node, cfg.w_r, cfg.lam)
        bd = breakdown(res_node, hol_node, tot_node)
        epochs_run = epoch

        blew_up = not np.isfinite(bd.total) or bd.total > DIVERGENCE_LIMIT
        should_log = blew_up or epoch == 1 or epoch == cfg.epochs \
            or epoch % cfg.log_every == 0
        if should_log:
            row = {
                "epoch": epoch,
                "residual": bd.residual,
                "holder_sup_u": bd.holder_sup_u,
                "holder_sup_ratio": bd.holder_sup_ratio,
                "total": bd.total,
            }
            if cfg.probe_rmse > 0 and (blew_up or epoch == cfg.epochs
                                       or epoch % cfg.probe_rmse == 0):
                try:
                    row["rmse_probe"] = evaluate_metrics(ansatz, problem, grid)[0]
                except ValueError:
                    row["rmse_probe"] = float("nan")
            if not (trace and trace[-1]["epoch"] == epoch):
                trace.append(row)
        if blew_up:
            diverged = True
            reason = f"total loss {bd.total!r} at epoch {epoch}"
            break

        try:
            grad = ad.loss_backward(tape, params)
            adam_step(params, grad, state, cfg.lr)
        except DivergenceError as exc:
            diverged = True
            reason = str(exc)
            break

    report = RunReport(config=cfg, trace=trace, diverged=diverged,
                       abort_reason=reason, epochs_run=epochs_run)
    if not diverged:
        report.rmse, report.linf = evaluate_metrics(
            ansatz, problem, make_test_grid(problem)
        )
    report.wall_time_s = time.perf_counter() - t0
    report.ansatz = ansatz
    return report
