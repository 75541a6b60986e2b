"""Residual, local-Hölder, and total losses as differentiable tape scalars.

The residual term is the mean squared PDE residual over X_r.  The Hölder
term is the discrete variable-distance regularizer

    sup_{x∈X_r} |û(x)|  +  sup_{x∈X_r} sup_{y∈κ_ρ} |û(x) − û(x+y)| / |y|^α,

with both sups taken as hard maxima (lowest index wins ties) so the
gradient flows only through the attaining point / pair.  Because of that
sparsity the expensive part — scanning every retained pair for the argmax —
runs as plain kernel inference with no tape; only the winning pair is then
re-expressed as tape nodes.  Within one kernel backend the scan and the
tape produce bitwise-identical values, so the recorded branch is exactly
the maximizing one.

A log-sum-exp softened variant (temperature > 0) is available for studying
the hard max's known instability; it records every pair on the tape.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import kernels
from .sampling import pair_geometry


@dataclass
class LossBreakdown:
    """Float snapshot of one epoch's loss components."""

    residual: float
    holder_sup_u: float
    holder_sup_ratio: float
    total: float
    argmax_info: dict = field(default_factory=dict)

    def holder(self):
        return self.holder_sup_u + self.holder_sup_ratio


def residual_loss(tape, ansatz, problem, points, f_values=None, return_jet=False):
    """(1/N_r) Σ |L û(x_i) − f(x_i)|² as a tape scalar.

    Pass return_jet=True to also get the SpatialJet at the residual points;
    its value channel is û(X_r) and can seed the Hölder sup|û| term for free.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[0] == 0:
        raise ValueError("residual loss needs at least one collocation point")
    jet = ad.ansatz_jet(tape, ansatz, points)
    lhs = problem.op_apply(jet, points)
    if f_values is None:
        f_values = problem.f(points)
    node = ad.mean(ad.square(ad.sub(lhs, np.asarray(f_values, dtype=np.float64))))
    return (node, jet) if return_jet else node


def _values_like_tape(ansatz, x):
    """û(x) by the exact op sequence the tape's value-only path performs.

    Bitwise-identical to ad.ansatz_value_nodes on the same inputs, so the
    argmax found by scanning these values is the argmax of the tape values.
    """
    a = np.ascontiguousarray(x, dtype=np.float64)
    net = ansatz.net
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if k < last:
            a = np.tanh(a)
    return a[:, 0] * ansatz.ell.values(x) + ansatz.u0.values(x)


def holder_loss(tape, ansatz, sset, pairs, value_node=None, pair_data=None,
                temp=0.0):
    """The two-sup Hölder term as one tape scalar.

    value_node: optional û(X_r) node already on the tape (reused from the
    residual jet).  pair_data: optional (neighbor points, 1/|y|^α) from
    sampling.pair_geometry.  The attaining indices are stored on the
    returned node's ``meta``.

    With temp == 0 both sups are hard maxima and only the attaining branch
    is expressed on the tape; all other pairs are examined by an untaped
    scan over values that replay the tape's value path bitwise.
    """
    pairs = np.asarray(pairs)
    if pairs.shape[0] == 0:
        raise ValueError(
            "no retained (x, x+y) pairs; rho is too large for this domain"
        )
    if value_node is None:
        value_node = ad.ansatz_value_nodes(tape, ansatz, sset.residual_points)
    if pair_data is None:
        pair_data = pair_geometry(sset, pairs)
    pair_pts, inv_denom = pair_data

    if temp > 0.0:
        sup_u = ad.smoothmax(ad.absval(value_node), temp)
        u_nb = ad.ansatz_value_nodes(tape, ansatz, pair_pts)
        u_at = ad.take(value_node, pairs[:, 0])
        ratios = ad.mul(ad.absval(ad.sub(u_at, u_nb)), inv_denom)
        sup_ratio = ad.smoothmax(ratios, temp)
        info = {"softened": True, "temp": float(temp)}
    else:
        sup_u = ad.maxval(ad.absval(value_node))
        best_j, _ = kernels.get().ratio_argmax(
            value_node.value,
            _values_like_tape(ansatz, pair_pts),
            np.ascontiguousarray(pairs[:, 0], dtype=np.int64),
            np.ascontiguousarray(inv_denom),
        )
        i_pt, j_off = int(pairs[best_j, 0]), int(pairs[best_j, 1])
        u_at = ad.gather(value_node, i_pt)
        u_nb = ad.gather(
            ad.ansatz_value_nodes(tape, ansatz, pair_pts[best_j][None, :]), 0
        )
        sup_ratio = ad.mul(ad.absval(ad.sub(u_at, u_nb)), float(inv_denom[best_j]))
        info = {
            "sup_u_index": int(sup_u.meta),
            "pair_point": i_pt,
            "pair_offset": j_off,
        }

    out = ad.add(sup_u, sup_ratio)
    info["sup_u"] = float(sup_u.value)
    info["sup_ratio"] = float(sup_ratio.value)
    out.meta = info
    return out


def total_loss(tape, residual, holder, w_r, lam):
    """w_r·L_residual + λ·L_Hölder; sets the tape root.

    λ = 0 (or a missing Hölder node) reduces to exactly w_r·residual — the
    standard formulation — with no regularizer arithmetic on the path.
    """
    w_r = float(w_r)
    lam = float(lam)
    if w_r <= 0.0:
        raise ValueError(f"w_r must be positive, got {w_r}")
    if lam < 0.0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if holder is None or lam == 0.0:
        total = ad.mul(residual, w_r)
    else:
        total = ad.add(ad.mul(residual, w_r), ad.mul(holder, lam))
    tape.root = total
    return total


def breakdown(residual_node, holder_node, total_node):
    info = dict(holder_node.meta) if holder_node is not None else {}
    return LossBreakdown(
        residual=float(residual_node.value),
        holder_sup_u=info.pop("sup_u", 0.0),
        holder_sup_ratio=info.pop("sup_ratio", 0.0),
        total=float(total_node.value),
        argmax_info=info,
    )


def holder_brute_force(ansatz, sset, pairs):
    """Exhaustive double-loop reference evaluation (oracle for the hard max).

    Deliberately naive and tape-free; used by tests to pin the fused path.
    """
    x = sset.residual_points
    sup_u = 0.0
    for i in range(x.shape[0]):
        sup_u = max(sup_u, abs(float(ansatz.predict(x[i][None, :])[0])))
    sup_ratio = 0.0
    for i, j in np.asarray(pairs):
        y = sset.offsets[j]
        ua = float(ansatz.predict(x[i][None, :])[0])
        ub = float(ansatz.predict((x[i] + y)[None, :])[0])
        sup_ratio = max(
            sup_ratio, abs(ua - ub) / float(np.linalg.norm(y)) ** sset.alpha
        )
    return sup_u + sup_ratio
