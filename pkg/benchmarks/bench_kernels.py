"""Timing comparison of the numba and numpy kernel backends.

Run:  python3 benchmarks/bench_kernels.py [--repeat 50]

Covers the hot paths of one training epoch: batched MLP inference (the
Hölder argmax scan), the fused tanh jet forward/backward, the Adam update,
and the pair-ratio argmax reduction, plus one end-to-end epoch timing.
"""

import argparse
import time

import numpy as np

from holderpinn import kernels
from holderpinn import autodiff as ad
from holderpinn import training as tr
from holderpinn.loss import residual_loss, holder_loss, total_loss
from holderpinn.network import init_mlp, make_ansatz
from holderpinn.problems import get_problem
from holderpinn.sampling import (make_sample_set, neighborhood_pairs,
                                 pair_geometry)


def timeit(fn, repeat):
    fn()  # warm-up (JIT compilation, caches)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_backend(name, repeat):
    kernels.use(name)
    k = kernels.get()
    rng = np.random.default_rng(0)
    rows = {}

    # batched value inference: the per-epoch Hölder scan workload
    params = init_mlp([2, 20, 20, 20, 20, 1], rng)
    x = rng.uniform(-1, 1, size=(6000, 2))
    w, b = params.kernel_args()
    rows["mlp_values (6000x2)"] = timeit(lambda: k.mlp_values(x, w, b), repeat)

    # fused tanh jet forward + the three backward channels
    z = rng.standard_normal((400, 20))
    gz = rng.standard_normal((2, 400, 20))
    lz = rng.standard_normal((2, 400, 20))
    t, s, go, lo = k.tanh_jet_fwd(z, gz, lz)
    g = rng.standard_normal((400, 20))
    rows["tanh_jet_fwd (400x20)"] = timeit(lambda: k.tanh_jet_fwd(z, gz, lz), repeat)
    rows["tanh_jet_bwd_lap"] = timeit(
        lambda: k.tanh_jet_bwd_lap(g, t, s, gz[0], lz[0]), repeat)

    # Adam update at ODE benchmark size
    theta = rng.standard_normal(901)
    grad = rng.standard_normal(901)
    m = np.zeros(901)
    v = np.zeros(901)
    rows["adam_update (901)"] = timeit(
        lambda: k.adam_update(theta, grad, m, v, 1, 1e-3, 0.9, 0.999, 1e-8),
        repeat)

    # pair-ratio argmax reduction
    u = rng.standard_normal(400)
    u_nb = rng.standard_normal(6000)
    idx = rng.integers(0, 400, size=6000)
    inv = rng.uniform(1.0, 20.0, size=6000)
    rows["ratio_argmax (6000)"] = timeit(
        lambda: k.ratio_argmax(u, u_nb, idx.astype(np.int64), inv), repeat)

    # one full regularized training epoch (tape build + backward)
    problem = get_problem("poisson")
    net = init_mlp([2, 20, 20, 20, 20, 1], 0)
    ansatz = make_ansatz(problem, net)
    sset = make_sample_set(problem.box, 400, 15, 0.005, 0.5, 1, 2)
    pairs = neighborhood_pairs(sset, problem.box)
    pdata = pair_geometry(sset, pairs)
    f_vals = problem.f(sset.residual_points)

    def epoch():
        tape = ad.Tape()
        res, jet = residual_loss(tape, ansatz, problem, sset.residual_points,
                                 f_values=f_vals, return_jet=True)
        hol = holder_loss(tape, ansatz, sset, pairs, value_node=jet.value,
                          pair_data=pdata)
        total_loss(tape, res, hol, 1.0, 1e-5)
        ad.loss_backward(tape, net)

    rows["epoch poisson reg (400 pts)"] = timeit(epoch, max(repeat // 5, 3))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()

    results = {}
    for name in kernels.available():
        print(f"benchmarking backend: {name}")
        results[name] = bench_backend(name, args.repeat)

    names = list(results)
    keys = list(next(iter(results.values())))
    width = max(len(k) for k in keys) + 2
    header = "kernel".ljust(width) + "".join(f"{n:>14s}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10s}"
    print()
    print(header)
    print("-" * len(header))
    for key in keys:
        line = key.ljust(width)
        vals = [results[n][key] for n in names]
        for v in vals:
            line += f"{v * 1e6:>12.1f}us"
        if len(vals) == 2:
            line += f"{vals[1] / vals[0]:>9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
