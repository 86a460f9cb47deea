"""Trajectory CSV export: one row per agent per step."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def trajectory_header(task) -> list[str]:
    return ["iteration", "agent", "step", *task.obs_names, *task.act_names, "reward", "done"]


def write_trajectory_csv(path, task, rows) -> None:
    """``rows`` yields ``(iteration, agent, step, obs, action, reward, done)``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_header(task))
        for it, agent, step, obs, act, rew, done in rows:
            w.writerow([it, agent, step, *map(repr, map(float, obs)), *map(repr, map(float, act)), repr(float(rew)), int(bool(done))])


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [list(map(float, row)) for row in r]
    arr = np.array(data, dtype=np.float64).reshape(-1, len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}
