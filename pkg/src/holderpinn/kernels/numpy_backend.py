"""Pure-numpy reference implementations of the hot kernels.

Formulas here are the ground truth; the numba backend mirrors them loop for
loop.  All arrays are float64.  Shapes: ``z`` and friends are (N, width), stacked
derivative channels ``gz``/``lz`` are (dim, N, width) with dim the spatial
dimension of the problem (1 or 2).
"""

import numpy as np

NAME = "numpy"


def mlp_values(x, weights, biases):
    """Scalar output of a tanh MLP at each row of ``x``; linear last layer."""
    a = x
    last = len(weights) - 1
    for k in range(len(weights)):
        z = a @ weights[k] + biases[k]
        a = np.tanh(z) if k < last else z
    return a[:, 0]


def tanh_jet_fwd(z, gz, lz):
    """Push (value, d/dx_i, d2/dx_i2) channels through an elementwise tanh.

    With t = tanh(z) and s = 1 - t^2 (the first derivative of tanh):
        value channel   t
        grad channel    s * gz_i
        lap channel     s * lz_i - 2 t s * gz_i^2
    Returns (t, s, grad_out, lap_out); s is kept for the backward pass.
    """
    t = np.tanh(z)
    s = 1.0 - t * t
    go = s * gz
    lo = s * lz - (2.0 * t * s) * gz * gz
    return t, s, go, lo


def tanh_jet_bwd_value(dt, s):
    """Cotangent of z from the value channel: dt * s."""
    return dt * s


def tanh_jet_bwd_grad(dg, t, s, gz_i):
    """Cotangents of (z, gz_i) from one grad channel output s*gz_i."""
    dz = dg * (-2.0 * t * s * gz_i)
    dgz = dg * s
    return dz, dgz


def tanh_jet_bwd_lap(dl, t, s, gz_i, lz_i):
    """Cotangents of (z, gz_i, lz_i) from one lap channel output."""
    ts = t * s
    dz = dl * (-2.0 * ts * lz_i - (2.0 * s * s - 4.0 * t * t * s) * gz_i * gz_i)
    dgz = dl * (-4.0 * ts * gz_i)
    dlz = dl * s
    return dz, dgz, dlz


def tanh_value_fwd(z):
    return np.tanh(z)


def tanh_value_bwd(dt, t):
    return dt * (1.0 - t * t)


def adam_update(theta, grad, m, v, step, lr, beta1, beta2, eps):
    """One bias-corrected Adam step, in place on theta/m/v."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    c1 = 1.0 - beta1**step
    c2 = 1.0 - beta2**step
    theta -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def ratio_argmax(u_base, u_pair, pair_pt, inv_denom):
    """Difference-quotient scan over neighbor pairs.

    ratio_j = |u_base[pair_pt[j]] - u_pair[j]| * inv_denom[j]; returns the
    first index attaining the maximum, and the maximum itself.
    """
    r = np.abs(u_base[pair_pt] - u_pair) * inv_denom
    j = int(np.argmax(r))
    return j, float(r[j])
