"""Array-valued reverse-mode tape with first/second spatial derivative channels.

The engine records array operations on an append-only Wengert list.  Every
node carries its forward value (a float64 ndarray) and a backward closure
that scatters the incoming cotangent to its parents; a single reversed sweep
over the list produces d(root)/d(leaf) for every bound parameter array.

Spatial derivatives are not obtained by nesting reverse passes.  Instead the
forward pass propagates a *jet* — the triple (value, per-axis first
derivative, per-axis pure second derivative) — through each layer, and all
three channels are recorded on the same tape so that one reverse sweep
differentiates any scalar built from them with respect to the network
parameters.  Mixed second derivatives are deliberately not carried: the
operators implemented here only ever need u_{x_i x_i}.

Hot elementwise blocks (the fused tanh jet rules) are delegated to the
kernels subpackage, which provides numba-compiled and plain-numpy versions
selected at runtime.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels


class Node:
    """One entry of the Wengert list: a value plus a backward closure."""

    __slots__ = ("value", "grad", "tape", "meta", "_backward")

    # Keep numpy from intercepting `ndarray <op> Node`; we want our dunders.
    __array_ufunc__ = None

    def __init__(self, value, tape):
        self.value = value
        self.grad = None
        self.tape = tape
        self.meta = None
        self._backward = None

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(shape={self.value.shape}, idx={self.tape.nodes.index(self)})"

    # Ergonomic arithmetic; non-Node operands are treated as constants.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        if isinstance(other, Node):
            raise TypeError("node/node division is not a tape op; multiply by a constant reciprocal")
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))


class Tape:
    """Append-only list of Nodes in construction (= topological) order."""

    def __init__(self):
        self.nodes = []
        self.root = None
        self._bindings = {}

    def _node(self, value, backward=None):
        n = Node(np.asarray(value, dtype=np.float64), self)
        n._backward = backward
        self.nodes.append(n)
        return n

    def constant(self, value):
        """Leaf with no backward rule (inputs, coefficient tables, offsets)."""
        return self._node(value)

    def bind(self, params):
        """Register a parameter set as leaves; memoized per tape.

        Returns (weight_nodes, bias_nodes), one Node per layer array.  The
        node values alias the live parameter views, so a tape built after an
        in-place update sees the updated values.
        """
        key = id(params)
        hit = self._bindings.get(key)
        if hit is not None:
            return hit
        w_nodes = [self._node(w) for w in params.weights]
        b_nodes = [self._node(b) for b in params.biases]
        self._bindings[key] = (w_nodes, b_nodes)
        return w_nodes, b_nodes

    def backward(self, root=None):
        """One reverse sweep, seeding the root cotangent with ones."""
        root = root if root is not None else self.root
        if root is None:
            raise ValueError("tape has no root; call total_loss or pass a node")
        for n in self.nodes:
            n.grad = None
        root.grad = np.ones_like(root.value)
        for n in reversed(self.nodes):
            if n.grad is not None and n._backward is not None:
                n._backward(n.grad)


def _accum(node, g):
    # Copy on first touch: backward closures may hand us an array that
    # aliases another node's cotangent (add/reshape pass-through).
    if node.grad is None:
        node.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        node.grad += g


def _unbroadcast(g, shape):
    """Reduce a cotangent back to the shape of a broadcast operand."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, dim in enumerate(shape):
        if dim == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise / structural ops
# ---------------------------------------------------------------------------

def add(a, b):
    if isinstance(b, Node):
        if not isinstance(a, Node):
            a, b = b, a
        else:
            if a.tape is not b.tape:
                raise ValueError("operands live on different tapes")
            out = a.tape._node(a.value + b.value)

            def bwd(g, a=a, b=b):
                _accum(a, _unbroadcast(g, a.value.shape))
                _accum(b, _unbroadcast(g, b.value.shape))

            out._backward = bwd
            return out
    c = np.asarray(b, dtype=np.float64)
    out = a.tape._node(a.value + c)

    def bwd(g, a=a):
        _accum(a, _unbroadcast(g, a.value.shape))

    out._backward = bwd
    return out


def sub(a, b):
    return add(a, neg(b) if isinstance(b, Node) else -np.asarray(b, dtype=np.float64))


def mul(a, b):
    if isinstance(b, Node):
        if not isinstance(a, Node):
            a, b = b, a
        else:
            if a.tape is not b.tape:
                raise ValueError("operands live on different tapes")
            out = a.tape._node(a.value * b.value)

            def bwd(g, a=a, b=b):
                _accum(a, _unbroadcast(g * b.value, a.value.shape))
                _accum(b, _unbroadcast(g * a.value, b.value.shape))

            out._backward = bwd
            return out
    c = np.asarray(b, dtype=np.float64)
    out = a.tape._node(a.value * c)

    def bwd(g, a=a, c=c):
        _accum(a, _unbroadcast(g * c, a.value.shape))

    out._backward = bwd
    return out


def neg(a):
    out = a.tape._node(-a.value)

    def bwd(g, a=a):
        _accum(a, -g)

    out._backward = bwd
    return out


def square(a):
    out = a.tape._node(a.value * a.value)

    def bwd(g, a=a):
        _accum(a, g * (2.0 * a.value))

    out._backward = bwd
    return out


def absval(a):
    """|a| elementwise; subgradient 0 at a == 0 (sign convention)."""
    out = a.tape._node(np.abs(a.value))

    def bwd(g, a=a):
        _accum(a, g * np.sign(a.value))

    out._backward = bwd
    return out


def tanh_value(a):
    # deliberately plain np.tanh in every backend: the Hölder argmax scan
    # replays this exact op sequence outside the tape, and the two must be
    # bitwise interchangeable
    t = np.tanh(a.value)
    out = a.tape._node(t)

    def bwd(g, a=a, t=t):
        _accum(a, g * (1.0 - t * t))

    out._backward = bwd
    return out


def matmul(a, b):
    if a.tape is not b.tape:
        raise ValueError("operands live on different tapes")
    out = a.tape._node(a.value @ b.value)

    def bwd(g, a=a, b=b):
        _accum(a, g @ b.value.T)
        _accum(b, a.value.T @ g)

    out._backward = bwd
    return out


def mean(a):
    out = a.tape._node(np.asarray(a.value.mean()))
    n = a.value.size

    def bwd(g, a=a, n=n):
        _accum(a, np.full(a.value.shape, float(g) / n))

    out._backward = bwd
    return out


def nsum(a):
    out = a.tape._node(np.asarray(a.value.sum()))

    def bwd(g, a=a):
        _accum(a, np.full(a.value.shape, float(g)))

    out._backward = bwd
    return out


def maxval(a):
    """Hard max over all entries; ties broken toward the lowest index.

    The attaining flat index is stored on ``node.meta`` and the subgradient
    routes the entire cotangent through that single entry.
    """
    idx = int(np.argmax(a.value))
    out = a.tape._node(np.asarray(a.value.flat[idx]))
    out.meta = idx

    def bwd(g, a=a, idx=idx):
        ga = np.zeros_like(a.value)
        ga.flat[idx] = float(g)
        _accum(a, ga)

    out._backward = bwd
    return out


def smoothmax(a, temp):
    """log-sum-exp softened max, max ~ temp*LSE(a/temp); optional alternative
    to the hard max for studying the instability it can cause."""
    from scipy.special import logsumexp, softmax

    if temp <= 0:
        raise ValueError("smoothmax needs temp > 0; use maxval for the hard max")
    out = a.tape._node(np.asarray(temp * logsumexp(a.value / temp)))
    w = softmax(a.value / temp)

    def bwd(g, a=a, w=w):
        _accum(a, float(g) * w)

    out._backward = bwd
    return out


def gather(a, idx):
    """Pick one entry of a 1-D node as a scalar node."""
    idx = int(idx)
    out = a.tape._node(np.asarray(a.value[idx]))

    def bwd(g, a=a, idx=idx):
        ga = np.zeros_like(a.value)
        ga[idx] = float(g)
        _accum(a, ga)

    out._backward = bwd
    return out


def take(a, indices):
    """Fancy-index a 1-D node; duplicate indices scatter-add in backward."""
    idx = np.asarray(indices, dtype=np.intp)
    out = a.tape._node(a.value[idx])

    def bwd(g, a=a, idx=idx):
        ga = np.zeros_like(a.value)
        np.add.at(ga, idx, g)
        _accum(a, ga)

    out._backward = bwd
    return out


def squeeze_col(a):
    """(N,1) -> (N,) view-preserving reshape."""
    out = a.tape._node(a.value[:, 0])

    def bwd(g, a=a):
        _accum(a, g[:, None])

    out._backward = bwd
    return out


# ---------------------------------------------------------------------------
# fused tanh jet layer
# ---------------------------------------------------------------------------

def tanh_jet(z, gz_list, lz_list):
    """Apply tanh to a pre-activation jet.

    Forward rules, with t = tanh(z) and s = 1 - t²:
        value:  t
        grad_i: s ⊙ gz_i
        lap_i:  s ⊙ lz_i − 2 t s ⊙ gz_i²

    Returns (value_node, grad_nodes, lap_nodes).  Each output gets its own
    backward closure; chain-rule contributions to shared parents (z, gz_i,
    lz_i) accumulate additively across the closures.
    """
    tape = z.tape
    K = kernels.get()
    gz_stack = np.stack([n.value for n in gz_list])
    lz_stack = np.stack([n.value for n in lz_list])
    t, s, go, lo = K.tanh_jet_fwd(z.value, gz_stack, lz_stack)

    t_node = tape._node(t)

    def bwd_t(g, z=z, s=s, K=K):
        _accum(z, K.tanh_jet_bwd_value(g, s))

    t_node._backward = bwd_t

    go_nodes = []
    for i, gzn in enumerate(gz_list):
        n = tape._node(go[i])

        def bwd_g(g, z=z, gzn=gzn, t=t, s=s, gz_i=gz_stack[i], K=K):
            dz, dgz = K.tanh_jet_bwd_grad(g, t, s, gz_i)
            _accum(z, dz)
            _accum(gzn, dgz)

        n._backward = bwd_g
        go_nodes.append(n)

    lo_nodes = []
    for i, (gzn, lzn) in enumerate(zip(gz_list, lz_list)):
        n = tape._node(lo[i])

        def bwd_l(g, z=z, gzn=gzn, lzn=lzn, t=t, s=s,
                  gz_i=gz_stack[i], lz_i=lz_stack[i], K=K):
            dz, dgz, dlz = K.tanh_jet_bwd_lap(g, t, s, gz_i, lz_i)
            _accum(z, dz)
            _accum(gzn, dgz)
            _accum(lzn, dlz)

        n._backward = bwd_l
        lo_nodes.append(n)

    return t_node, go_nodes, lo_nodes


# ---------------------------------------------------------------------------
# network forward passes on tape
# ---------------------------------------------------------------------------

@dataclass
class SpatialJet:
    """û(x), ∇û(x), and ∂²û/∂x_i² as tape nodes over a batch of points.

    Every channel stays differentiable with respect to the network
    parameters bound on ``tape``.
    """

    value: Node
    grad: list = field(default_factory=list)
    lap_terms: list = field(default_factory=list)
    tape: Tape = None

    def value_array(self):
        return self.value.value

    def grad_array(self):
        return np.stack([n.value for n in self.grad])

    def lap_array(self):
        return np.stack([n.value for n in self.lap_terms])


def _as_batch(x, dim):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(
            f"input has shape {x.shape}; network expects points with {dim} coordinates"
        )
    return x


def mlp_jet(tape, params, x):
    """Forward jet of the raw network N_θ over a batch x of shape (N, n)."""
    x = _as_batch(x, params.layer_sizes[0])
    n_in = params.layer_sizes[0]
    npts = x.shape[0]
    w_nodes, b_nodes = tape.bind(params)

    a = tape.constant(x)
    gs = []
    for i in range(n_in):
        e = np.zeros((npts, n_in))
        e[:, i] = 1.0
        gs.append(tape.constant(e))
    ls = [tape.constant(np.zeros((npts, n_in))) for _ in range(n_in)]

    last = len(w_nodes) - 1
    for k, (wn, bn) in enumerate(zip(w_nodes, b_nodes)):
        z = add(matmul(a, wn), bn)
        gz = [matmul(g, wn) for g in gs]
        lz = [matmul(l, wn) for l in ls]
        if k < last:
            a, gs, ls = tanh_jet(z, gz, lz)
        else:
            a, gs, ls = z, gz, lz

    return SpatialJet(
        value=squeeze_col(a),
        grad=[squeeze_col(g) for g in gs],
        lap_terms=[squeeze_col(l) for l in ls],
        tape=tape,
    )


def mlp_value_nodes(tape, params, x):
    """Value-only forward of N_θ on tape (no derivative channels)."""
    x = _as_batch(x, params.layer_sizes[0])
    w_nodes, b_nodes = tape.bind(params)
    a = tape.constant(x)
    last = len(w_nodes) - 1
    for k, (wn, bn) in enumerate(zip(w_nodes, b_nodes)):
        a = add(matmul(a, wn), bn)
        if k < last:
            a = tanh_value(a)
    return squeeze_col(a)


def ansatz_jet(tape, ansatz, x, params=None):
    """Jet of û = u0 + ℓ·N_θ, composing the network jet with the fixed fields.

    Composition rules (u0, ℓ have closed-form tables, no parameters):
        û      = u0 + ℓ N
        û_xi   = u0_xi + ℓ_xi N + ℓ N_xi
        û_xixi = u0_xixi + ℓ_xixi N + 2 ℓ_xi N_xi + ℓ N_xixi
    """
    net = params if params is not None else ansatz.net
    x = _as_batch(x, net.layer_sizes[0])
    jet = mlp_jet(tape, net, x)
    u0v, u0g, u0l = ansatz.u0.tables(x)
    lv, lg, ll = ansatz.ell.tables(x)

    val = add(mul(jet.value, lv), u0v)
    grads = []
    laps = []
    for i in range(x.shape[1]):
        gi = add(add(mul(jet.grad[i], lv), mul(jet.value, lg[i])), u0g[i])
        li = add(
            add(
                add(mul(jet.lap_terms[i], lv), mul(jet.grad[i], 2.0 * lg[i])),
                mul(jet.value, ll[i]),
            ),
            u0l[i],
        )
        grads.append(gi)
        laps.append(li)
    return SpatialJet(value=val, grad=grads, lap_terms=laps, tape=tape)


def ansatz_value_nodes(tape, ansatz, x, params=None):
    """Value-only û on tape; used for neighbor points in the Hölder term."""
    net = params if params is not None else ansatz.net
    x = _as_batch(x, net.layer_sizes[0])
    nv = mlp_value_nodes(tape, net, x)
    lv = ansatz.ell.values(x)
    u0v = ansatz.u0.values(x)
    return add(mul(nv, lv), u0v)


def jet_forward(params, ansatz, x, tape=None):
    """Evaluate û(x) with first and pure second derivative channels.

    Creates a fresh tape unless one is supplied; the returned jet carries
    the tape so callers can keep composing loss expressions on it.
    """
    if tape is None:
        tape = Tape()
    if ansatz is None:
        return mlp_jet(tape, params, x)
    return ansatz_jet(tape, ansatz, x, params=params)


def loss_backward(tape, params):
    """Gradient of the tape root w.r.t. the flat parameter vector.

    Returns a vector of length P in the flat layout of ``params.theta``
    (per layer: row-major W, then b).  A tape on which ``params`` was never
    bound produces a zero vector with a warning, since no loss node can
    depend on the parameters.
    """
    if tape.root is None:
        raise ValueError("tape.root is unset; assemble a scalar loss first")
    if tape.root.value.size != 1:
        raise ValueError("root loss must be scalar")
    tape.backward()
    bound = tape._bindings.get(id(params))
    if bound is None:
        warnings.warn(
            "tape has no leaves for these parameters; returning a zero gradient",
            RuntimeWarning,
            stacklevel=2,
        )
        return np.zeros(params.theta.size)
    w_nodes, b_nodes = bound
    wg = [n.grad if n.grad is not None else np.zeros_like(n.value) for n in w_nodes]
    bg = [n.grad if n.grad is not None else np.zeros_like(n.value) for n in b_nodes]
    return params.pack_flat(wg, bg)
