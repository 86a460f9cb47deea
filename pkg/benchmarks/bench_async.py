"""Update interval of the threaded trainer against the number of learners.

    python3 benchmarks/bench_async.py [--budget 60] [--learners 1 2 4 12]
"""
from __future__ import annotations

import argparse
import os

from mixedpg.algo import AlgorithmSpec
from mixedpg.envs import make_task
from mixedpg.runtime import TrainSettings
from mixedpg.runtime.throughput import update_interval_ms, with_learners


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--task", default="path_tracking")
    ap.add_argument("--budget", type=int, default=60)
    ap.add_argument("--learners", type=int, nargs="+", default=[1, 2, 4, 12])
    args = ap.parse_args(argv)
    task = make_task(args.task)
    print(f"cpu cores: {os.cpu_count()}")
    for variant in ("mpg-v1", "nstep-dpg"):
        base = TrainSettings(spec=AlgorithmSpec(variant))
        for n in args.learners if variant == "mpg-v1" else args.learners[:1]:
            ms = update_interval_ms(task, with_learners(base, n), args.budget)
            print(f"{variant:<10} learners={n:<3} update interval {ms:8.2f} ms")


if __name__ == "__main__":
    main()
