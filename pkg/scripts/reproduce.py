"""Run the long training jobs read by the acceptance suite.

Each job writes ``artifacts/runs/<task>/<variant>/seed<k>/metrics.csv`` and a
``done.json`` marker; finished jobs are skipped, so the script can be rerun.
"""
from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict
from pathlib import Path

from mixedpg.algo import AlgorithmSpec
from mixedpg.envs import make_task
from mixedpg.runtime import TrainSettings, TrainingDiverged, serial_train

ROOT = Path(__file__).resolve().parents[1] / "artifacts" / "runs"
T_SCHEDULE = {"path_tracking": 9000, "inverted_pendulum": 4000}

JOBS = [
    ("path_tracking", "mpg-v1", 0), ("path_tracking", "mpg-v2", 0),
    ("path_tracking", "mpg-v1", 1), ("path_tracking", "mpg-v2", 1),
    ("inverted_pendulum", "mpg-v2", 0), ("inverted_pendulum", "mpg-v2", 1),
    ("path_tracking", "nstep-adp", 0), ("path_tracking", "nstep-dpg", 0),
    ("path_tracking", "mpg-v1", 2), ("path_tracking", "mpg-v2", 2),
    ("inverted_pendulum", "mpg-v2", 2),
    ("path_tracking", "nstep-adp", 1), ("path_tracking", "nstep-dpg", 1),
    ("path_tracking", "nstep-adp", 2), ("path_tracking", "nstep-dpg", 2),
]


def run_job(task_name: str, variant: str, seed: int, budget: int, eval_interval: int, root: Path) -> None:
    out = root / task_name / variant / f"seed{seed}"
    if (out / "done.json").exists():
        return
    out.mkdir(parents=True, exist_ok=True)
    for stale in out.glob("*.csv"):
        stale.unlink()
    task = make_task(task_name)
    settings = TrainSettings(spec=AlgorithmSpec(variant, T=T_SCHEDULE[task_name]), seed=seed,
                             eval_interval=eval_interval)
    t0 = time.time()
    status = "completed"
    try:
        serial_train(task, settings, budget, out_dir=out)
    except TrainingDiverged as exc:
        status = f"diverged: {exc}"
    info = {"task": task_name, "variant": variant, "seed": seed, "budget": budget, "status": status,
            "wall_s": time.time() - t0, "settings": asdict(settings)}
    (out / "done.json").write_text(json.dumps(info, indent=1, default=str))
    print(f"{task_name} {variant} seed{seed}: {status} in {info['wall_s']:.0f}s", flush=True)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget", type=int, default=30_000)
    ap.add_argument("--eval-interval", type=int, default=1000)
    ap.add_argument("--root", type=Path, default=ROOT)
    ap.add_argument("--only", default=None, help="comma list of task:variant:seed")
    args = ap.parse_args(argv)
    jobs = JOBS
    if args.only:
        jobs = [(t, v, int(s)) for t, v, s in (j.split(":") for j in args.only.split(","))]
    for task_name, variant, seed in jobs:
        run_job(task_name, variant, seed, args.budget, args.eval_interval, args.root)


if __name__ == "__main__":
    main()
