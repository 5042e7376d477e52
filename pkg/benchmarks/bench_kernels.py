"""Benchmark: compiled kernels against the numpy fallback.

Run as `python benchmarks/bench_kernels.py`.  Both lanes produce bitwise
identical results (the test suite asserts it); this script measures the
speed gap on the three hot loops.
"""

import time

import numpy as np

from meanfield.kernels import get_backend


def timeit(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_particles(k, n=1000, steps=5000):
    x = np.concatenate([np.ones(n // 2), -np.ones(n // 2)])
    out_m = np.empty(steps // 10)
    out_mu = np.empty(steps // 10)

    def run():
        k.particle_sim(x.copy(), 0.0, 1.0, 2.9, 0.5, 1e-3, 0, 0, 0, steps,
                       10, 1e6, 1.0, out_m, out_mu)

    return timeit(run), n * steps


def bench_ensemble(k, n=20000, steps=1000):
    mu_path = np.zeros(steps + 1)
    mean = np.empty(steps + 1)

    def run():
        k.ensemble_frozen_mu(np.full(n, 0.5), mu_path, 0.3, 1e-3, 0, 0, 0, 0,
                             steps, 1, 0, mean)

    return timeit(run), n * steps


def bench_macro(k, steps=2_000_000):
    out = np.empty(steps // 100000)

    def run():
        k.macro_rk4(3.0, 0.0, 1.0, 3.5, 1e-3, steps, 1.0, 100000, out, out)

    return timeit(run), steps


def main():
    lanes = {}
    try:
        lanes["c"] = get_backend("c")
    except ImportError:
        print("compiled lane unavailable; benchmarking the fallback only")
    lanes["python"] = get_backend("python")

    benches = [
        ("particle system (N=1000)", bench_particles),
        ("frozen-field ensemble (n=20000)", bench_ensemble),
        ("macro RK4 (2e6 steps)", bench_macro),
    ]
    print(f"{'kernel':36s} {'lane':8s} {'time':>10s} {'rate':>14s}")
    for name, bench in benches:
        base = None
        for lane_name, lane in lanes.items():
            secs, work = bench(lane)
            rate = work / secs
            speedup = ""
            if lane_name == "c":
                base = secs
            elif base is not None:
                speedup = f"  ({secs / base:.1f}x slower)"
            print(f"{name:36s} {lane_name:8s} {secs * 1e3:8.1f}ms "
                  f"{rate / 1e6:10.1f}M/s{speedup}")


if __name__ == "__main__":
    main()
