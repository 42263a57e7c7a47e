#!/usr/bin/env python3
"""Benchmark the jit-compiled kernels against the pure-numpy fallback.

Runs each hot kernel on branch-and-bound-sized inputs and reports per-call
times plus the end-to-end node-bounding rate under both backends.

Force the fallback for the whole package with CURVREACH_NO_NUMBA=1; this
script measures both paths in one process by calling the implementations
directly.
"""

import time

import numpy as np

from curvreach import _kernels as K
from curvreach import bnb
from curvreach.fileio import load_network
from curvreach.model import ScalarObjective, scalarize
from importlib import resources


def timeit(fn, args, repeat=2000):
    fn(*args)  # warm (jit compile on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_kernels():
    rng = np.random.default_rng(0)
    lo = rng.uniform(-3, 1, size=32)
    hi = lo + rng.uniform(0, 2, size=32)
    W = rng.standard_normal((32, 32))
    b = rng.standard_normal(32)
    c = rng.standard_normal(32)
    r = rng.random(32)
    v0 = rng.standard_normal(32)

    pairs = [
        ("slope_range_tanh", (lo, hi),
         K.slope_range_tanh, K._slope_range_tanh_np),
        ("curv_range_tanh", (lo, hi),
         K.curv_range_tanh, K._curv_range_tanh_np),
        ("slope_range_sigmoid", (lo, hi),
         K.slope_range_sigmoid, K._slope_range_sigmoid_np),
        ("interval_affine", (W, b, c, r),
         K.interval_affine, K._interval_affine_np),
        ("op_norm_inf", (W,), K.op_norm_inf, K._op_norm_inf_np),
        ("power_iter_sigma", (W, v0, 1e-9, 10_000),
         K.power_iter_sigma, K._power_iter_sigma_np),
    ]
    print(f"{'kernel':24s} {'active':>10s} {'numpy':>10s} {'speedup':>8s}")
    for name, args, active, fallback in pairs:
        t_active = timeit(active, args)
        t_np = timeit(fallback, args)
        print(f"{name:24s} {t_active * 1e6:9.1f}u {t_np * 1e6:9.1f}u "
              f"{t_np / t_active:7.2f}x")


def bench_solver():
    with resources.as_file(resources.files("curvreach.data")
                           / "di_controller.json") as path:
        net = load_network(path)
    obj = ScalarObjective(scalarize(net, np.array([1.0])))
    cfg = bnb.BnBConfig(eps_t=1e-12, max_branches=2001)
    lo = np.array([2.0, -0.5])
    hi = np.array([3.0, 0.5])
    bnb.solve(obj, lo, hi, cfg=cfg)  # warm
    t0 = time.perf_counter()
    res = bnb.solve(obj, lo, hi, cfg=cfg)
    dt = time.perf_counter() - t0
    backend = "numba" if K.NUMBA_ENABLED else "numpy"
    print(f"\nnode bounding [{backend} backend]: "
          f"{res.branches_processed / dt:,.0f} nodes/s "
          f"({dt / res.branches_processed * 1e6:.0f}us per node)")


if __name__ == "__main__":
    print(f"numba enabled: {K.NUMBA_ENABLED}")
    bench_kernels()
    bench_solver()
