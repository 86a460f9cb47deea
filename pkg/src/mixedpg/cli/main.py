"""Command-line driver: ``mixedpg {run,eval,table,errors,bias-study}``.

Exit status is 0 on success, 2 for configuration errors and 1 for failures
during a run.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from ..algo import bias_trends, pg_bias_diagnostic
from ..diffkit import load_checkpoint
from ..envs.trajectory import write_trajectory_csv
from ..runtime import async_train, evaluate, raw_trajectory, read_metrics, serial_train, stream
from .analysis import (
    GOALS,
    ci95,
    convergence_table,
    minimum_return,
    state_magnitudes,
    summarize_runs,
    tracking_errors,
)
from .config import ConfigError, load_config
from .plots import line_chart


def _config(args):
    cfg = load_config(args.config)
    if args.seed:
        cfg.seeds = tuple(args.seed)
        cfg.validate()
    return cfg


def _eval_seed(args, cfg) -> int:
    return args.seed[0] if args.seed else cfg.seeds[0]


# run ------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _config(args)
    task = cfg.make_task()
    out = Path(args.out or Path("runs") / cfg.task / cfg.variant)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.ini")
    trainer = async_train if cfg.mode == "async" else serial_train
    logs = []
    for seed in cfg.seeds:
        run_dir = out / f"seed{seed}"
        res = trainer(task, cfg.settings(seed), cfg.budget, out_dir=run_dir)
        stale = {"histogram": res.staleness.histogram(), "dropped": res.staleness.dropped,
                 "max": res.staleness.max}
        (run_dir / "staleness.json").write_text(json.dumps(stale, indent=1))
        logs.append(res.rows)
        last = res.rows[-1]["eval_return_mean"] if res.rows else float("nan")
        print(f"seed {seed}: {res.iteration} iterations, final eval return {last:.4g}")
    summary = summarize_runs(logs)
    _write_rows(out / "summary.csv", summary, ("iteration", "mean", "ci95", "runs"))
    if summary:
        line_chart({cfg.variant: ([r["iteration"] for r in summary], [r["mean"] for r in summary],
                                  [r["ci95"] for r in summary])},
                   out / "training_curve.svg", title=f"{cfg.task} {cfg.variant}", ylabel="evaluation return",
                   hline=minimum_return(cfg.task))
    print(f"wrote {out}")
    return 0


def _write_rows(path, rows, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])


# eval / errors ----------------------------------------------------------------

def _policy(path):
    nets, iteration, extra = load_checkpoint(path)
    if "policy" not in nets:
        raise ValueError(f"{path}: checkpoint has no policy network")
    return nets["policy"], iteration


def _trajectory_rows(task, res, iteration):
    horizon, episodes = res.alive.shape
    for e in range(episodes):
        for t in range(horizon):
            if not res.alive[t, e]:
                break
            o, a = res.obs[t, e], res.actions[t, e]
            r = float(np.asarray(task.reward(o[None], a[None]))[0])
            done = t + 1 < horizon and not res.alive[t + 1, e]
            yield iteration, e, t, o, a, r, done


def _trajectory_metrics(task, res) -> dict:
    traj = raw_trajectory(task, res)
    return tracking_errors(traj) if task.name == "path_tracking" else state_magnitudes(traj)


def cmd_eval(args) -> int:
    cfg = _config(args)
    task = cfg.make_task()
    policy, iteration = _policy(args.checkpoint)
    res = evaluate(policy, task, stream(_eval_seed(args, cfg), "evaluator"), args.episodes or cfg.eval_episodes,
                   absorbing=cfg.terminal == "absorbing")
    print(f"iteration {iteration}: mean return {res.mean:.6g} ± {res.ci:.3g} over {len(res.returns)} episodes")
    metrics = _trajectory_metrics(task, res)
    for k, v in metrics.items():
        print(f"  {k} = {v:.6g}")
    if args.out:
        out = Path(args.out)
        write_trajectory_csv(out / "trajectory.csv", task, _trajectory_rows(task, res, iteration))
        summary = {"iteration": iteration, "mean": res.mean, "ci95": res.ci, "returns": res.returns.tolist(), **metrics}
        (out / "evaluation.json").write_text(json.dumps(summary, indent=1))
    return 0


def cmd_errors(args) -> int:
    cfg = _config(args)
    task = cfg.make_task()
    rows = []
    for ckpt in args.checkpoints:
        policy, iteration = _policy(ckpt)
        res = evaluate(policy, task, stream(_eval_seed(args, cfg), "evaluator"), args.episodes or cfg.eval_episodes,
                       absorbing=cfg.terminal == "absorbing")
        row = {"checkpoint": str(ckpt), "iteration": iteration, **_trajectory_metrics(task, res)}
        rows.append(row)
        print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    if args.out and rows:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        _write_rows(args.out, rows, tuple(rows[0]))
    return 0


# table ---------------------------------------------------------------------------

def _run_logs(path: Path) -> list:
    if path.is_file():
        return [path]
    found = sorted(path.glob("seed*/metrics.csv")) or sorted(path.glob("**/metrics.csv"))
    if not found:
        raise FileNotFoundError(f"no metrics.csv under {path}")
    return found


def cmd_table(args) -> int:
    cfg = _config(args)
    runs = {}
    for item in args.runs:
        name, sep, where = item.partition("=")
        if not sep:
            name, where = Path(item).name, item
        runs[name] = _run_logs(Path(where))
    goals = tuple(args.goals) if args.goals else GOALS[cfg.task]
    table = convergence_table(runs, goals)
    print(table.format())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        table.write_csv(out / "convergence.csv")
        curves = {}
        for name, logs in runs.items():
            s = summarize_runs([read_metrics(p) for p in logs])
            curves[name] = ([r["iteration"] for r in s], [r["mean"] for r in s], [r["ci95"] for r in s])
        line_chart(curves, out / "training_curves.svg", title=cfg.task, ylabel="evaluation return",
                   hline=minimum_return(cfg.task))
    return 0


# bias study ----------------------------------------------------------------------

def cmd_bias(args) -> int:
    cfg = _config(args)
    task = cfg.make_task()
    start = args.seed[0] if args.seed else 0
    seeds = range(start, start + args.n_seeds)
    horizons = tuple(args.horizons)
    rows = pg_bias_diagnostic(task, horizons=horizons, seeds=seeds, gamma=args.gamma)
    trends = bias_trends(rows)
    for regime, rho in trends.items():
        print(f"{regime}: spearman(n, bias) = {rho:+.3f}")
    out = Path(args.out or Path("runs") / cfg.task / "bias")
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "bias.csv", rows, ("seed", "regime", "n", "bias", "ref_norm"))
    curves = {}
    for regime in dict.fromkeys(r["regime"] for r in rows):
        means, cis = [], []
        for n in horizons:
            vals = [r["bias"] for r in rows if r["regime"] == regime and r["n"] == n]
            means.append(float(np.mean(vals)))
            cis.append(ci95(vals))
        curves[regime] = (list(horizons), means, cis)
    line_chart(curves, out / "bias.svg", title=f"policy-gradient bias, {cfg.task}", xlabel="horizon n",
               ylabel="|grad - oracle grad|")
    (out / "trends.json").write_text(json.dumps(trends, indent=1))
    return 0


# entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI run configuration")
    common.add_argument("--seed", type=int, action="append", help="seed (repeatable); overrides run.seeds")
    common.add_argument("--out", help="output location")

    p = argparse.ArgumentParser(prog="mixedpg", description="Mixed policy gradient experiments")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="train one variant over the configured seeds")
    run.set_defaults(fn=cmd_run)

    ev = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint and export its trajectories")
    ev.add_argument("checkpoint", type=Path)
    ev.add_argument("--episodes", type=int)
    ev.set_defaults(fn=cmd_eval)

    tab = sub.add_parser("table", parents=[common], help="iterations needed to reach each goal return")
    tab.add_argument("runs", nargs="+", help="NAME=DIR or DIR holding seed*/metrics.csv")
    tab.add_argument("--goals", type=float, nargs="+")
    tab.set_defaults(fn=cmd_table)

    err = sub.add_parser("errors", parents=[common], help="tracking errors or state magnitudes of checkpoints")
    err.add_argument("checkpoints", type=Path, nargs="+")
    err.add_argument("--episodes", type=int)
    err.set_defaults(fn=cmd_errors)

    bias = sub.add_parser("bias-study", parents=[common], help="policy-gradient bias against the horizon")
    bias.add_argument("--n-seeds", type=int, default=20)
    bias.add_argument("--horizons", type=int, nargs="+", default=[0, 1, 2, 5, 10, 25])
    bias.add_argument("--gamma", type=float, default=0.8)
    bias.set_defaults(fn=cmd_bias)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
