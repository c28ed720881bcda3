#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the two sequential hot loops (lumped-slider integration and the
reduced-model stepping) on representative workloads and prints a table
with the speedup.  Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from shearband import _kernels, default_params
from shearband.grid import Grid1D
from shearband.simplified import run_sm
from shearband.slider import SliderState, slider_integrate


def _time(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_slider(params):
    start = SliderState(3.0, 8.0)

    def run(force_pure):
        slider_integrate(
            start, 0.175, 0.3, params, T=500.0, dt=1e-3, dt_out=0.05,
            force_pure=force_pure,
        )

    return run


def bench_sm(params):
    grid = Grid1D(H=1.0, N=401)
    theta0 = 10.0 - 9.0 * np.exp(-grid.x ** 2 / 0.1)

    def make(force_pure):
        def run():
            run_sm(
                params.replace(kappa=0.04), 0.15, T=20.0, tau=0.01, grid=grid,
                theta0=theta0, sigma0=3.0, auto_refine=False,
                force_pure=force_pure,
            )

        return run

    return make


def main():
    params = default_params()
    print(f"compiled kernels available: {_kernels.HAVE_FAST}")
    rows = []

    slider = bench_slider(params)
    t_pure = _time(lambda: slider(True))
    t_fast = _time(lambda: slider(False)) if _kernels.HAVE_FAST else float("nan")
    rows.append(("slider_integrate (T=500, dt=1e-3)", t_pure, t_fast))

    sm = bench_sm(params)
    t_pure = _time(sm(True))
    t_fast = _time(sm(False)) if _kernels.HAVE_FAST else float("nan")
    rows.append(("run_sm (N=401, 2000 steps)", t_pure, t_fast))

    print(f"{'workload':<36} {'pure [s]':>10} {'compiled [s]':>13} {'speedup':>9}")
    for name, tp, tf in rows:
        speed = tp / tf if tf == tf and tf > 0 else float("nan")
        print(f"{name:<36} {tp:>10.3f} {tf:>13.3f} {speed:>8.1f}x")


if __name__ == "__main__":
    main()
