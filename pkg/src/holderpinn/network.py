"""Tanh MLP parameters and the penalty-free boundary ansatz û = u0 + ℓ·N_θ.

Parameters live in one flat float64 vector ``theta``; per-layer weight and
bias arrays are contiguous views into it (per layer: row-major W, then b).
The optimizer updates theta in place and every view — including the leaves
bound on an autodiff tape built afterwards — sees the update for free.

The ansatz enforces Dirichlet data exactly: ℓ is a polynomial bump that is
bit-exactly zero on the faces of the box and positive inside, and u0 extends
the boundary data into the interior (transfinite/Coons interpolation of the
four edge traces; its closed form is supplied per problem).  Consequently no
boundary loss term is ever assembled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels


def param_count(layer_sizes):
    sizes = list(layer_sizes)
    return sum(sizes[k] * sizes[k + 1] + sizes[k + 1] for k in range(len(sizes) - 1))


class NetworkParams:
    """Flat parameter vector with per-layer views.

    weights[k] is the (in, out) matrix of layer k; biases[k] its bias row.
    Hidden activations are tanh, the output layer is linear (identity).
    """

    def __init__(self, layer_sizes, theta=None):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 3:
            raise ValueError("need at least input, one hidden, and output layer")
        if any(s <= 0 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        if sizes[-1] != 1:
            raise ValueError("scalar-output networks only (last layer size 1)")
        self.layer_sizes = sizes
        n = param_count(sizes)
        if theta is None:
            theta = np.zeros(n)
        theta = np.ascontiguousarray(theta, dtype=np.float64)
        if theta.size != n:
            raise ValueError(f"theta has {theta.size} entries, layout needs {n}")
        self.theta = theta
        self.weights = []
        self.biases = []
        off = 0
        for nin, nout in zip(sizes[:-1], sizes[1:]):
            self.weights.append(self.theta[off:off + nin * nout].reshape(nin, nout))
            off += nin * nout
            self.biases.append(self.theta[off:off + nout])
            off += nout

    @property
    def size(self):
        return self.theta.size

    def copy(self):
        return NetworkParams(self.layer_sizes, self.theta.copy())

    def pack_flat(self, w_arrays, b_arrays):
        """Assemble per-layer arrays into a flat vector in theta's layout."""
        out = np.empty(self.theta.size)
        off = 0
        for W, b in zip(w_arrays, b_arrays):
            out[off:off + W.size] = np.asarray(W).ravel()
            off += W.size
            out[off:off + b.size] = np.asarray(b).ravel()
            off += b.size
        return out

    def kernel_args(self):
        """(weights, biases) as tuples for the compiled inference kernels."""
        return tuple(self.weights), tuple(self.biases)


def init_mlp(layer_sizes, seed):
    """Glorot-uniform weights (bound √(6/(fan_in+fan_out))), zero biases.

    The same seed reproduces the same parameters bitwise.
    """
    params = NetworkParams(layer_sizes)
    rng = np.random.default_rng(seed)
    for W in params.weights:
        nin, nout = W.shape
        bound = np.sqrt(6.0 / (nin + nout))
        W[...] = rng.uniform(-bound, bound, size=(nin, nout))
    return params


# ---------------------------------------------------------------------------
# fixed smooth fields: ℓ and u0
# ---------------------------------------------------------------------------

@dataclass
class SmoothField:
    """A closed-form scalar field with per-axis first/second derivatives.

    tables(x) -> (v, g, l) with v of shape (N,), g and l of shape (d, N);
    g[i] = ∂field/∂x_i, l[i] = ∂²field/∂x_i².  No trainable parameters.
    """

    vfn: callable
    gfn: callable
    lfn: callable

    def values(self, x):
        return self.vfn(np.atleast_2d(np.asarray(x, dtype=np.float64)))

    def tables(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return self.vfn(x), self.gfn(x), self.lfn(x)


def zero_field(dim):
    return SmoothField(
        vfn=lambda x: np.zeros(x.shape[0]),
        gfn=lambda x, d=dim: np.zeros((d, x.shape[0])),
        lfn=lambda x, d=dim: np.zeros((d, x.shape[0])),
    )


def box_bump(box):
    """ℓ(x) = Π_i (x_i−a_i)(b_i−x_i) / M with M = Π_i ((b_i−a_i)/2)².

    Normalized to peak value 1 at the box center.  Each factor contains the
    literal subtraction (x_i − a_i) or (b_i − x_i), so ℓ is exactly 0.0 at
    every boundary point, and ℓ > 0 strictly inside.
    """
    box = np.asarray(box, dtype=np.float64).reshape(-1, 2)
    a, b = box[:, 0], box[:, 1]
    if not np.all(b > a):
        raise ValueError("domain box must have lo < hi on every axis")
    m = float(np.prod(((b - a) / 2.0) ** 2))

    def _parts(x):
        p = (x - a) * (b - x)
        dp = (a + b) - 2.0 * x
        return p, dp

    def vfn(x):
        p, _ = _parts(x)
        return p.prod(axis=1) / m

    def _rest(p):
        # leave-one-out products; d is 1 or 2 here so the loop is cheap
        d = p.shape[1]
        rest = np.empty((d, p.shape[0]))
        for i in range(d):
            idx = [j for j in range(d) if j != i]
            rest[i] = p[:, idx].prod(axis=1) if idx else 1.0
        return rest

    def gfn(x):
        p, dp = _parts(x)
        return dp.T * _rest(p) / m

    def lfn(x):
        p, _ = _parts(x)
        return -2.0 * _rest(p) / m

    return SmoothField(vfn=vfn, gfn=gfn, lfn=lfn)


# ---------------------------------------------------------------------------
# ansatz
# ---------------------------------------------------------------------------

@dataclass
class AnsatzSolution:
    """û(x) = u0(x) + ℓ(x)·N_θ(x); satisfies û = g on ∂Ω for any θ."""

    u0: SmoothField
    ell: SmoothField
    net: NetworkParams

    def net_values(self, x):
        x = np.atleast_2d(np.ascontiguousarray(x, dtype=np.float64))
        w, b = self.net.kernel_args()
        return kernels.get().mlp_values(x, w, b)

    def predict(self, x):
        """û at arbitrary points, inference only (no tape)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return self.u0.values(x) + self.ell.values(x) * self.net_values(x)


def make_ansatz(problem, net):
    """Attach the problem's boundary lift and the box bump to a network."""
    box = np.asarray(problem.box, dtype=np.float64)
    if box.ndim != 2 or box.shape[1] != 2 or not np.all(box[:, 1] > box[:, 0]):
        raise ValueError("only axis-aligned box domains are supported")
    if net.layer_sizes[0] != problem.dim:
        raise ValueError(
            f"network input width {net.layer_sizes[0]} != problem dim {problem.dim}"
        )
    return AnsatzSolution(u0=problem.lift, ell=box_bump(box), net=net)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(params, path, seed=None, config_hash=None):
    """JSON checkpoint: header (seed, config hash), layer sizes, then
    row-major weight/bias arrays in layer order."""
    payload = {
        "header": {
            "format": "holderpinn-checkpoint-v1",
            "seed": None if seed is None else int(seed),
            "config_hash": config_hash,
        },
        "layer_sizes": params.layer_sizes,
        "params": [],
    }
    for W, b in zip(params.weights, params.biases):
        payload["params"].append([float(v) for v in W.ravel()])
        payload["params"].append([float(v) for v in b])
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_checkpoint(path):
    with open(path) as fh:
        payload = json.load(fh)
    sizes = payload["layer_sizes"]
    flat = np.concatenate([np.asarray(a, dtype=np.float64) for a in payload["params"]])
    return NetworkParams(sizes, flat), payload["header"]
