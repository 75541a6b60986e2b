"""PINN solver for elliptic Dirichlet problems with a variable-distance
local Hölder regularizer and exact (penalty-free) boundary conditions."""

from . import kernels
from .autodiff import SpatialJet, Tape, jet_forward, loss_backward
from .loss import LossBreakdown, holder_loss, residual_loss, total_loss
from .network import (AnsatzSolution, NetworkParams, init_mlp, load_checkpoint,
                      make_ansatz, param_count, save_checkpoint)
from .problems import (Problem, boundary_points, get_problem,
                       helmholtz_problem, ode_problem, poisson_problem,
                       problem_names, varcoef_problem)
from .sampling import (SampleSet, make_sample_set, neighborhood_pairs,
                       pair_geometry, sample_offsets, sample_residual_points,
                       save_csv)
from .training import (AdamState, RunReport, TrainConfig, adam_step,
                       evaluate_metrics, make_test_grid, preset, train)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "AnsatzSolution", "LossBreakdown", "NetworkParams",
    "Problem", "RunReport", "SampleSet", "SpatialJet", "Tape", "TrainConfig",
    "adam_step", "boundary_points", "evaluate_metrics", "get_problem",
    "helmholtz_problem", "holder_loss", "init_mlp", "jet_forward", "kernels",
    "load_checkpoint", "loss_backward", "make_ansatz", "make_sample_set",
    "make_test_grid", "neighborhood_pairs", "ode_problem", "pair_geometry",
    "param_count", "poisson_problem", "preset", "problem_names",
    "residual_loss", "sample_offsets", "sample_residual_points",
    "save_checkpoint", "save_csv", "total_loss", "train", "varcoef_problem",
]
