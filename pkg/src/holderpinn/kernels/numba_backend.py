"""Numba-compiled hot kernels; same contracts as the numpy backend.

Elementwise chains are fused into single loops to avoid numpy temporary
allocations, which dominate the per-epoch cost at the array sizes used here
(hundreds of collocation points, width-20 layers).  Matrix products go
through np.dot (BLAS).  No fastmath: results must stay reproducible and
finite-difference checks assume IEEE ordering.
"""

import math

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def mlp_values(x, weights, biases):
    a = x
    last = len(weights) - 1
    for k in range(len(weights)):
        z = np.dot(a, weights[k])
        b = biases[k]
        n, w = z.shape
        if k < last:
            out = np.empty((n, w))
            for i in range(n):
                for j in range(w):
                    out[i, j] = math.tanh(z[i, j] + b[j])
            a = out
        else:
            for i in range(n):
                for j in range(w):
                    z[i, j] = z[i, j] + b[j]
            a = z
    return a[:, 0].copy()


@njit(cache=True)
def tanh_jet_fwd(z, gz, lz):
    n, w = z.shape
    d = gz.shape[0]
    t = np.empty((n, w))
    s = np.empty((n, w))
    go = np.empty((d, n, w))
    lo = np.empty((d, n, w))
    for i in range(n):
        for j in range(w):
            tv = math.tanh(z[i, j])
            sv = 1.0 - tv * tv
            t[i, j] = tv
            s[i, j] = sv
            for k in range(d):
                g = gz[k, i, j]
                go[k, i, j] = sv * g
                lo[k, i, j] = sv * lz[k, i, j] - (2.0 * tv * sv) * g * g
    return t, s, go, lo


@njit(cache=True)
def tanh_jet_bwd_value(dt, s):
    n, w = dt.shape
    dz = np.empty((n, w))
    for i in range(n):
        for j in range(w):
            dz[i, j] = dt[i, j] * s[i, j]
    return dz


@njit(cache=True)
def tanh_jet_bwd_grad(dg, t, s, gz_i):
    n, w = dg.shape
    dz = np.empty((n, w))
    dgz = np.empty((n, w))
    for i in range(n):
        for j in range(w):
            dz[i, j] = dg[i, j] * (-2.0 * t[i, j] * s[i, j] * gz_i[i, j])
            dgz[i, j] = dg[i, j] * s[i, j]
    return dz, dgz


@njit(cache=True)
def tanh_jet_bwd_lap(dl, t, s, gz_i, lz_i):
    n, w = dl.shape
    dz = np.empty((n, w))
    dgz = np.empty((n, w))
    dlz = np.empty((n, w))
    for i in range(n):
        for j in range(w):
            tv = t[i, j]
            sv = s[i, j]
            g = gz_i[i, j]
            ts = tv * sv
            dz[i, j] = dl[i, j] * (
                -2.0 * ts * lz_i[i, j] - (2.0 * sv * sv - 4.0 * tv * tv * sv) * g * g
            )
            dgz[i, j] = dl[i, j] * (-4.0 * ts * g)
            dlz[i, j] = dl[i, j] * sv
    return dz, dgz, dlz


@njit(cache=True)
def tanh_value_fwd(z):
    n, w = z.shape
    t = np.empty((n, w))
    for i in range(n):
        for j in range(w):
            t[i, j] = math.tanh(z[i, j])
    return t


@njit(cache=True)
def tanh_value_bwd(dt, t):
    n, w = dt.shape
    dz = np.empty((n, w))
    for i in range(n):
        for j in range(w):
            dz[i, j] = dt[i, j] * (1.0 - t[i, j] * t[i, j])
    return dz


@njit(cache=True)
def adam_update(theta, grad, m, v, step, lr, beta1, beta2, eps):
    c1 = 1.0 - beta1**step
    c2 = 1.0 - beta2**step
    for i in range(theta.size):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        theta[i] -= lr * (m[i] / c1) / (math.sqrt(v[i] / c2) + eps)


@njit(cache=True)
def ratio_argmax(u_base, u_pair, pair_pt, inv_denom):
    best = -1.0
    best_j = 0
    for j in range(u_pair.size):
        r = abs(u_base[pair_pt[j]] - u_pair[j]) * inv_denom[j]
        if r > best:
            best = r
            best_j = j
    return best_j, best
