"""Threaded actor / buffer / learner / optimizer / evaluator training.

Actors push transition batches into per-buffer inboxes without waiting
(a full inbox drops the batch). Buffers feed sampled batches into a bounded
experience queue; learners turn batches and the latest parameter snapshot
into gradient messages on a bounded gradient queue; the optimizer, on the
calling thread, applies messages in arrival order and publishes snapshots.

``rendezvous=True`` is a test mode for a 1/1/1 topology: every stage still
runs on its own thread, but the orchestrator hands work to one stage at a
time in the serial trainer's order, which makes the metric log identical to
:func:`serial_train` with the same seed.
"""
from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass

import numpy as np

from .core import ActorCore, BufferCore, LearnerCore, OptimizerCore, TrainingDiverged
from .seeding import stream
from .serial import Reporter, TrainResult
from .settings import TrainSettings

_POLL = 0.05


class WorkerFailure(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} failed: {cause!r}")


class ParamServer:
    """Latest parameter snapshot behind a lock; readers get an immutable copy."""

    def __init__(self, version: int, nets):
        self._lock = threading.Lock()
        self._version = version
        self._nets = nets.copy()

    def publish(self, version: int, nets) -> None:
        snap = nets.copy()
        with self._lock:
            self._version, self._nets = version, snap

    def get(self):
        with self._lock:
            return self._version, self._nets


@dataclass
class Counters:
    dropped_pushes: int = 0
    batches: int = 0
    messages: int = 0


class _Supervisor:
    def __init__(self):
        self.stop = threading.Event()
        self.failures: list[WorkerFailure] = []
        self.threads: list[threading.Thread] = []
        self._lock = threading.Lock()

    def spawn(self, stage: str, fn, *args) -> None:
        def run():
            try:
                fn(*args)
            except BaseException as exc:
                with self._lock:
                    self.failures.append(WorkerFailure(stage, exc))
                self.stop.set()

        t = threading.Thread(target=run, name=stage, daemon=True)
        self.threads.append(t)
        t.start()

    def check(self) -> None:
        if self.failures:
            self.stop.set()
            raise self.failures[0]

    def shutdown(self, timeout: float = 30.0) -> None:
        self.stop.set()
        for t in self.threads:
            t.join(timeout)


def _put(q: queue.Queue, item, stop: threading.Event) -> bool:
    while not stop.is_set():
        try:
            q.put(item, timeout=_POLL)
            return True
        except queue.Full:
            continue
    return False


def _get(q: queue.Queue, stop: threading.Event):
    while not stop.is_set():
        try:
            return q.get(timeout=_POLL)
        except queue.Empty:
            continue
    return None


def async_train(task, settings: TrainSettings, budget: int, out_dir=None, rendezvous: bool = False,
                nets=None) -> TrainResult:
    topo = settings.topology
    topo.validate()
    opt = OptimizerCore(task, settings, nets)
    opt.max_staleness = topo.grad_queue + topo.n_learners
    reporter = Reporter(task, settings, out_dir)
    if budget <= 0:
        return TrainResult(opt.nets, [], opt.staleness, 0, opt)
    if rendezvous:
        if (topo.n_actors, topo.n_buffers, topo.n_learners) != (1, 1, 1):
            raise ValueError("rendezvous mode needs a 1/1/1 topology")
        return _rendezvous(task, settings, budget, opt, reporter)
    return _free(task, settings, budget, opt, reporter)


def _free(task, settings, budget, opt, reporter) -> TrainResult:
    topo = settings.topology
    sup = _Supervisor()
    stop = sup.stop
    server = ParamServer(opt.iteration, opt.nets)
    inboxes = [queue.Queue(maxsize=topo.inbox) for _ in range(topo.n_buffers)]
    exp_q: queue.Queue = queue.Queue(maxsize=topo.exp_queue)
    grad_q: queue.Queue = queue.Queue(maxsize=topo.grad_queue)
    eval_q: queue.Queue = queue.Queue()
    counters = Counters()
    reuse = max(1, settings.spec.batch_reuse)

    def actor_loop(i):
        core = ActorCore(task, settings, i)
        route = stream(settings.seed, "actor", 1000 + i)
        while not stop.is_set():
            _, snap = server.get()
            trans = core.collect(snap.policy)
            j = int(route.integers(topo.n_buffers)) if topo.n_buffers > 1 else 0
            try:
                inboxes[j].put_nowait(trans)
            except queue.Full:
                counters.dropped_pushes += 1
                time.sleep(0.005)

    def buffer_loop(j):
        core = BufferCore(task, settings, j)
        pending = None
        while not stop.is_set():
            try:
                core.push(inboxes[j].get(timeout=_POLL if pending is None else 0.0))
                while True:
                    core.push(inboxes[j].get_nowait())
            except queue.Empty:
                pass
            if pending is None:
                pending = core.sample()
            if pending is not None:
                try:
                    exp_q.put(pending, timeout=_POLL)
                    counters.batches += 1
                    pending = None
                except queue.Full:
                    pass

    def learner_loop(l):
        core = LearnerCore(task, settings, l)
        batch, n = None, 0
        while not stop.is_set():
            fresh = n % reuse == 0
            if fresh:
                batch = _get(exp_q, stop)
                if batch is None:
                    return
            version, snap = server.get()
            msg = core.compute(version, snap, batch, fresh)
            n += 1
            if not _put(grad_q, msg, stop):
                return
            counters.messages += 1

    def evaluator_loop():
        while True:
            item = eval_q.get()
            if item is None:
                return
            k, snap, stats = item
            reporter.report(k, snap, stats)

    for i in range(topo.n_actors):
        sup.spawn(f"actor-{i}", actor_loop, i)
    for j in range(topo.n_buffers):
        sup.spawn(f"buffer-{j}", buffer_loop, j)
    for l in range(topo.n_learners):
        sup.spawn(f"learner-{l}", learner_loop, l)
    ev_thread = threading.Thread(target=evaluator_loop, name="evaluator", daemon=True)
    ev_thread.start()
    try:
        while opt.iteration < budget:
            sup.check()
            msg = _get(grad_q, stop)
            if msg is None:
                sup.check()
                continue
            t0 = time.perf_counter()
            lag = opt.iteration - msg.version
            try:
                applied = opt.apply(msg)
            except TrainingDiverged:
                reporter.checkpoint(opt.nets, opt.iteration, {"diverged": True}, "postmortem.ckpt")
                raise
            if not applied:
                continue
            server.publish(opt.iteration, opt.nets)
            reporter.stats.add(msg, lag, (time.perf_counter() - t0) * 1e3)
            if reporter.due(opt.iteration):
                eval_q.put((opt.iteration, opt.nets.copy(), reporter.take_stats()))
    finally:
        sup.shutdown()
        eval_q.put(None)
        ev_thread.join()
    sup.check()
    result = TrainResult(opt.nets, reporter.rows, opt.staleness, opt.iteration, opt)
    result.counters = counters
    return result


class _Stage:
    """A thread that runs the callables handed to it, one at a time."""

    def __init__(self, sup: _Supervisor, name: str):
        self.name = name
        self.inbox: queue.Queue = queue.Queue(maxsize=1)
        self.outbox: queue.Queue = queue.Queue(maxsize=1)
        self.sup = sup
        sup.spawn(name, self._loop)

    def _loop(self):
        while True:
            job = _get(self.inbox, self.sup.stop)
            if job is None:
                return
            fn, args = job
            try:
                self.outbox.put(("ok", fn(*args)))
            except BaseException as exc:
                self.outbox.put(("err", exc))
                raise

    def call(self, fn, *args):
        self.inbox.put((fn, args))
        while True:
            try:
                status, value = self.outbox.get(timeout=_POLL)
                break
            except queue.Empty:
                self.sup.check()
        if status == "err":
            raise WorkerFailure(self.name, value)
        return value


def _rendezvous(task, settings, budget, opt, reporter) -> TrainResult:
    sup = _Supervisor()
    actor = ActorCore(task, settings)
    buf = BufferCore(task, settings)
    learner = LearnerCore(task, settings)
    stages = {name: _Stage(sup, name) for name in ("actor-0", "buffer-0", "learner-0", "evaluator")}
    server = ParamServer(opt.iteration, opt.nets)
    reuse = max(1, settings.spec.batch_reuse)

    def collect():
        _, snap = server.get()
        return actor.collect(snap.policy)

    try:
        while not buf.buffer.ready(settings.batch_size):
            stages["buffer-0"].call(buf.push, stages["actor-0"].call(collect))
        batch = None
        for k in range(budget):
            stages["buffer-0"].call(buf.push, stages["actor-0"].call(collect))
            fresh = k % reuse == 0
            if fresh:
                batch = stages["buffer-0"].call(buf.sample)
            version, snap = server.get()
            msg = stages["learner-0"].call(learner.compute, version, snap, batch, fresh)
            t0 = time.perf_counter()
            lag = opt.iteration - msg.version
            try:
                opt.apply(msg)
            except TrainingDiverged:
                reporter.checkpoint(opt.nets, opt.iteration, {"diverged": True}, "postmortem.ckpt")
                raise
            server.publish(opt.iteration, opt.nets)
            reporter.stats.add(msg, lag, (time.perf_counter() - t0) * 1e3)
            if reporter.due(opt.iteration):
                stages["evaluator"].call(reporter.report, opt.iteration, opt.nets.copy(), reporter.take_stats())
    finally:
        sup.shutdown()
    sup.check()
    return TrainResult(opt.nets, reporter.rows, opt.staleness, opt.iteration, opt, buf.buffer)
