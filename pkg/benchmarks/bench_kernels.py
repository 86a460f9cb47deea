"""Compiled vs numpy substep kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mixedpg.envs import PendulumTask, VehicleTask, kernels


def _time(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1, 16, 128, 1024, 8192])
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        print("compiled kernels unavailable; only the numpy backend is timed")
    rng = np.random.default_rng(0)
    print(f"{'task':<18}{'batch':>7}{'numpy ms':>12}{'cython ms':>12}{'speedup':>9}")
    for task in (VehicleTask(), PendulumTask()):
        for n in args.sizes:
            obs = task.reset(rng, n)
            act = rng.uniform(-1, 1, size=(n, task.act_dim)) * task.action_high * 0.5
            times = {}
            for name in (("numpy", "cython") if kernels.BACKEND == "cython" or kernels._compiled else ("numpy",)):
                kernels.use_backend(name)
                times[name] = _time(lambda: task.step(obs, act), args.repeat) * 1e3
            kernels.use_backend("cython" if kernels._compiled is not None else "numpy")
            c = times.get("cython", float("nan"))
            print(f"{task.name:<18}{n:>7}{times['numpy']:>12.4f}{c:>12.4f}{times['numpy'] / c:>9.1f}")


if __name__ == "__main__":
    main()
