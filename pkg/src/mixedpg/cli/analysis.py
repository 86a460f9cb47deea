"""Post-processing of metric logs and evaluation trajectories."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..runtime import read_metrics

GOALS = {
    "path_tracking": (-100.0, -30.0, -10.0, -5.0),
    "inverted_pendulum": (-20.0, -2.0, -0.1, -0.01),
}
MINIMUM_RETURN = {"path_tracking": -30.0, "inverted_pendulum": -2.0}


def minimum_return(task: str) -> float:
    """Lowest evaluation return at which a policy counts as working."""
    try:
        return MINIMUM_RETURN[task]
    except KeyError:
        raise ValueError(f"unknown task {task!r}; expected one of {sorted(MINIMUM_RETURN)}") from None


def ci95(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        return 0.0
    return float(1.96 * v.std(ddof=1) / math.sqrt(v.size))


def _rows(run):
    if isinstance(run, (str, Path)):
        return read_metrics(run)
    return list(run)


def iterations_to_goal(rows, goal: float):
    """First evaluation iteration whose mean return reaches ``goal``; None if never."""
    for r in rows:
        if r["eval_return_mean"] >= goal:
            return int(r["iteration"])
    return None


@dataclass
class ConvergenceTable:
    goals: tuple
    # algorithm -> list of per-seed iterations-to-goal, one list per goal
    hits: dict = field(default_factory=dict)

    def cell(self, algorithm: str, goal: float):
        """``(mean, ci, reached, total)`` over the seeds that reached the goal, or None."""
        j = self.goals.index(goal)
        its = self.hits[algorithm][j]
        reached = [i for i in its if i is not None]
        if not reached:
            return None
        return float(np.mean(reached)), ci95(reached), len(reached), len(its)

    def format(self) -> str:
        head = ["algorithm", *(f"{g:g}" for g in self.goals)]
        lines = [" | ".join(head), " | ".join("---" for _ in head)]
        for alg in self.hits:
            cells = [alg]
            for g in self.goals:
                c = self.cell(alg, g)
                if c is None:
                    cells.append("-")
                else:
                    mean, ci, k, n = c
                    cells.append(f"{mean:.0f} ± {ci:.0f}" + (f" ({k}/{n})" if k < n else ""))
            lines.append(" | ".join(cells))
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["algorithm", "goal", "mean_iterations", "ci95", "reached", "runs"])
            for alg in self.hits:
                for g in self.goals:
                    c = self.cell(alg, g)
                    n = len(self.hits[alg][self.goals.index(g)])
                    if c is None:
                        w.writerow([alg, g, "-", "-", 0, n])
                    else:
                        w.writerow([alg, g, repr(c[0]), repr(c[1]), c[2], c[3]])


def convergence_table(runs: dict, goals) -> ConvergenceTable:
    """``runs`` maps an algorithm name to a list of metric logs (rows or CSV paths)."""
    goals = tuple(float(g) for g in goals)
    table = ConvergenceTable(goals)
    for alg, logs in runs.items():
        per_seed = [_rows(r) for r in logs]
        table.hits[alg] = [[iterations_to_goal(rows, g) for rows in per_seed] for g in goals]
    return table


def summarize_runs(logs) -> list[dict]:
    """Mean and 95% CI of the evaluation return across seeds on the shared grid."""
    per_seed = [{r["iteration"]: r["eval_return_mean"] for r in _rows(run)} for run in logs]
    if not per_seed:
        return []
    grid = sorted(set.intersection(*(set(d) for d in per_seed)))
    out = []
    for it in grid:
        vals = [d[it] for d in per_seed]
        out.append({"iteration": it, "mean": float(np.mean(vals)), "ci95": ci95(vals), "runs": len(vals)})
    return out


def _rms(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(np.square(x)))) if x.size else math.nan


def tracking_errors(traj: dict) -> dict:
    """RMS lateral, heading and speed tracking errors over pooled states."""
    return {
        "error_y": _rms(np.asarray(traj["y"]) - np.asarray(traj["y_ref"])),
        "error_phi": _rms(np.asarray(traj["phi"]) - np.asarray(traj["phi_ref"])),
        "error_u": _rms(np.asarray(traj["u"]) - np.asarray(traj["u_ref"])),
    }


def state_magnitudes(traj: dict) -> dict:
    """RMS of each pendulum state component over pooled states."""
    return {f"state_{k}": _rms(traj[k]) for k in ("x", "xdot", "theta", "thetadot")}
