"""Single-threaded training loop."""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from ..diffkit import save_checkpoint
from .core import (
    ActorCore,
    BufferCore,
    IntervalStats,
    LearnerCore,
    OptimizerCore,
    TrainingDiverged,
    evaluate,
)
from .messages import StalenessRecord
from .metrics import MetricLog
from .seeding import stream
from .settings import TrainSettings


@dataclass
class TrainResult:
    nets: object
    rows: list
    staleness: StalenessRecord
    iteration: int
    optimizer: OptimizerCore
    buffer: object = None


class Reporter:
    """Evaluation, metric rows and checkpoints at every ``eval_interval`` iterations."""

    def __init__(self, task, settings: TrainSettings, out_dir=None, tag: str = "metrics"):
        self.task = task
        self.settings = settings
        self.out = None if out_dir is None else Path(out_dir)
        self.log = None if self.out is None else MetricLog(self.out / f"{tag}.csv")
        self.rows = []
        self.stats = IntervalStats()
        self.t0 = time.perf_counter()

    def due(self, iteration: int) -> bool:
        return iteration > 0 and iteration % self.settings.eval_interval == 0

    def take_stats(self) -> IntervalStats:
        stats, self.stats = self.stats, IntervalStats()
        return stats

    def report(self, iteration: int, nets, stats: IntervalStats | None = None, extra: dict | None = None) -> dict:
        """Evaluate from the fixed evaluation starts and log one row."""
        s = self.settings
        stats = self.take_stats() if stats is None else stats
        ev = evaluate(nets.policy, self.task, stream(s.seed, "evaluator"), s.eval_episodes,
                      absorbing=s.spec.terminal == "absorbing")
        row = stats.row(iteration, time.perf_counter() - self.t0, ev)
        self.rows.append(row)
        if self.log is not None:
            self.log.write(row)
            self.checkpoint(nets, iteration, extra)
        return row

    def checkpoint(self, nets, iteration: int, extra: dict | None = None, name: str = "checkpoint.ckpt") -> None:
        if self.out is None:
            return
        meta = {"seed": self.settings.seed, "variant": self.settings.spec.variant, "task": self.task.name}
        meta.update(extra or {})
        save_checkpoint(self.out / name, nets.named(), iteration, meta)


def serial_train(task, settings: TrainSettings, budget: int, out_dir=None, nets=None) -> TrainResult:
    """Collect, sample, value step, delayed policy step; one iteration per value update."""
    opt = OptimizerCore(task, settings, nets)
    reporter = Reporter(task, settings, out_dir)
    if budget <= 0:
        return TrainResult(opt.nets, [], opt.staleness, 0, opt)
    actor = ActorCore(task, settings)
    buf = BufferCore(task, settings)
    learner = LearnerCore(task, settings)
    while not buf.buffer.ready(settings.batch_size):
        buf.push(actor.collect(opt.nets.policy))
    reuse = max(1, settings.spec.batch_reuse)
    batch = None
    try:
        for k in range(budget):
            buf.push(actor.collect(opt.nets.policy))
            fresh = k % reuse == 0
            if fresh:
                batch = buf.sample()
            msg = learner.compute(opt.iteration, opt.nets, batch, fresh)
            t0 = time.perf_counter()
            lag = opt.iteration - msg.version
            opt.apply(msg)
            reporter.stats.add(msg, lag, (time.perf_counter() - t0) * 1e3)
            if reporter.due(opt.iteration):
                reporter.report(opt.iteration, opt.nets)
    except TrainingDiverged:
        reporter.checkpoint(opt.nets, opt.iteration, {"diverged": True}, "postmortem.ckpt")
        raise
    return TrainResult(opt.nets, reporter.rows, opt.staleness, opt.iteration, opt, buf.buffer)
