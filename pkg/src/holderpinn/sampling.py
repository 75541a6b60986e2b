"""Collocation points X_r and the shared variable-distance offset set κ_ρ.

One offset set κ_ρ = {ρ·v_i} with v_i drawn uniformly in the unit ball is
translated to every residual point; neighbors that leave the closed domain
box are dropped (the neighborhood is the intersection of the ball with Ω).
A relative floor on |v_i| keeps the Hölder denominator |y|^α away from zero,
honoring the ball-without-center construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

#: offsets are resampled while |v| < MIN_OFFSET_FRAC (relative to ρ)
MIN_OFFSET_FRAC = 1e-3


@dataclass
class SampleSet:
    """Residual points, shared offsets, and the Hölder hyperparameters."""

    residual_points: np.ndarray  # (N_r, n)
    offsets: np.ndarray          # (N_H, n)
    rho: float
    alpha: float
    seed: int

    @property
    def n_points(self):
        return self.residual_points.shape[0]

    @property
    def n_offsets(self):
        return self.offsets.shape[0]

    @property
    def dim(self):
        return self.residual_points.shape[1]


def sample_residual_points(box, n_r, seed, method="uniform"):
    """i.i.d. uniform (or Latin-hypercube) points strictly inside the box."""
    box = np.asarray(box, dtype=np.float64).reshape(-1, 2)
    lo, hi = box[:, 0], box[:, 1]
    if n_r < 1:
        raise ValueError("need at least one residual point")
    rng = np.random.default_rng(seed)
    if method == "uniform":
        pts = rng.uniform(lo, hi, size=(int(n_r), box.shape[0]))
    elif method == "latin":
        from scipy.stats import qmc

        unit = qmc.LatinHypercube(d=box.shape[0], seed=rng).random(int(n_r))
        pts = lo + unit * (hi - lo)
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    # a draw landing exactly on a face has measure zero but would break the
    # strict-interior invariant; redraw such points
    bad = ~np.all((pts > lo) & (pts < hi), axis=1)
    while bad.any():
        pts[bad] = rng.uniform(lo, hi, size=(int(bad.sum()), box.shape[0]))
        bad = ~np.all((pts > lo) & (pts < hi), axis=1)
    return pts


def sample_offsets(rho, n_h, dim, seed):
    """κ_ρ: y_i = ρ·v_i with v_i uniform in the unit ball, |v_i| ≥ 1e-3.

    Rejection sampling from the enclosing cube in fixed-size batches, so the
    result is reproducible from the seed alone.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if n_h < 1:
        raise ValueError("need at least one offset")
    rng = np.random.default_rng(seed)
    accepted = []
    count = 0
    batch = max(32, 2 * int(n_h))
    while count < n_h:
        v = rng.uniform(-1.0, 1.0, size=(batch, int(dim)))
        r = np.linalg.norm(v, axis=1)
        keep = v[(r <= 1.0) & (r >= MIN_OFFSET_FRAC)]
        accepted.append(keep)
        count += keep.shape[0]
    return float(rho) * np.concatenate(accepted)[: int(n_h)]


def make_sample_set(box, n_r, n_h, rho, alpha, point_seed, offset_seed,
                    method="uniform"):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    box = np.asarray(box, dtype=np.float64).reshape(-1, 2)
    pts = sample_residual_points(box, n_r, point_seed, method=method)
    offs = sample_offsets(rho, n_h, box.shape[0], offset_seed)
    return SampleSet(
        residual_points=pts,
        offsets=offs,
        rho=float(rho),
        alpha=float(alpha),
        seed=int(point_seed),
    )


def neighborhood_pairs(sset, box):
    """Index pairs (i, j) whose neighbor x_i + y_j stays in the closed box.

    Returned as an int array of shape (M, 2) in point-major order, so the
    lowest-index tie-break of the Hölder max is well defined.  Emits a
    warning and returns an empty array if every neighbor falls outside
    (ρ too large for the domain).
    """
    box = np.asarray(box, dtype=np.float64).reshape(-1, 2)
    lo, hi = box[:, 0], box[:, 1]
    cand = sset.residual_points[:, None, :] + sset.offsets[None, :, :]
    inside = np.all((cand >= lo) & (cand <= hi), axis=2)
    pairs = np.argwhere(inside)
    if pairs.shape[0] == 0:
        warnings.warn(
            "every neighbor x+y left the domain; rho is too large for this box",
            RuntimeWarning,
            stacklevel=2,
        )
    return pairs


def pair_geometry(sset, pairs):
    """Precompute neighbor coordinates and 1/|y|^α for the retained pairs."""
    pts = sset.residual_points[pairs[:, 0]] + sset.offsets[pairs[:, 1]]
    norms = np.linalg.norm(sset.offsets[pairs[:, 1]], axis=1)
    inv_denom = norms ** (-sset.alpha)
    return pts, inv_denom


def save_csv(sset, points_path, offsets_path):
    """One point per row, full double-precision round-trip formatting."""
    meta = f"rho={sset.rho!r} alpha={sset.alpha!r} seed={sset.seed}"
    np.savetxt(points_path, sset.residual_points, fmt="%.17g", delimiter=",",
               header=f"residual points; {meta}")
    np.savetxt(offsets_path, sset.offsets, fmt="%.17g", delimiter=",",
               header=f"offsets; {meta}")
