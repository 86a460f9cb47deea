"""Worker cores shared by the serial and asynchronous trainers.

Each core owns its RNG stream and private state; the trainers only decide
which core runs when. Running the cores in the same order with the same
streams therefore yields the same numbers regardless of the trainer.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..algo import (
    ActorCritic,
    WeightSchedule,
    adp_policy_loss,
    dpg_policy_loss,
    explore,
    mixed_policy_loss,
    policy_gradient,
    value_loss_grad,
    value_targets,
)
from ..diffkit import AdamState, NonFiniteGradientError, adam_step, forward_mlp, polyak_update
from ..envs import BatchEnv
from ..envs.vehicle import VehicleTask, reference_path
from ..priors import make_prior
from .buffer import ReplayBuffer
from .messages import GradientMessage, StalenessRecord
from .seeding import stream
from .settings import TrainSettings


class TrainingDiverged(FloatingPointError):
    pass


def make_schedule(task, spec) -> WeightSchedule:
    return WeightSchedule(spec.eta, spec.T, spec.H)


class ActorCore:
    """Steps ``n_agents`` parallel environments with the exploration policy."""

    def __init__(self, task, settings: TrainSettings, index: int = 0):
        self.task = task
        self.std = settings.spec.explore_std
        self.rng = stream(settings.seed, "actor", index)
        self.env = BatchEnv(task, settings.n_agents, self.rng)

    def collect(self, policy) -> tuple:
        obs = self.env.observe()
        a = explore(policy, obs, self.std, self.rng)
        return self.env.step(a)


class BufferCore:
    def __init__(self, task, settings: TrainSettings, index: int = 0):
        self.buffer = ReplayBuffer(task.obs_dim, task.act_dim, settings.buffer_size)
        self.rng = stream(settings.seed, "buffer", index)
        self.batch_size = settings.batch_size

    def push(self, transitions) -> None:
        self.buffer.push(*transitions)

    def sample(self):
        return self.buffer.sample(self.batch_size, self.rng)


class LearnerCore:
    """Turns a parameter snapshot and a batch into a :class:`GradientMessage`."""

    def __init__(self, task, settings: TrainSettings, index: int = 0):
        self.task = task
        self.spec = settings.spec
        self.index = index
        self.rng = stream(settings.seed, "learner", index)
        self.model = make_prior(task, noise_enabled=settings.prior_noise)
        # private environment for n-step rollouts; its own RNG is never used
        self.env = BatchEnv(task, 1, np.random.default_rng(0))
        self.schedule = make_schedule(task, self.spec)
        self._targets = None

    def compute(self, version: int, nets: ActorCritic, batch: dict, fresh: bool = True) -> GradientMessage:
        """``fresh=False`` reuses the targets computed for the previous call's batch."""
        t0 = time.perf_counter()
        spec = self.spec
        if fresh or self._targets is None:
            self._targets = value_targets(spec, batch, nets, self.env, self.rng)
        y = self._targets
        blocks, vloss = [], []
        for q in nets.q:
            loss, g = value_loss_grad(batch, y, q)
            vloss.append(loss)
            blocks.append(g.to_flat())
        stats = {"value_loss": float(np.mean(vloss)), "policy_loss": math.nan,
                 "w0": math.nan, "wH": math.nan, "lambda": math.nan}
        has_policy = version % spec.delay == 0
        if has_policy:
            J, g = self._policy_gradient(version, nets, batch["obs"], stats)
            stats["policy_loss"] = -J
            blocks.append(g.to_flat())
        vec = np.concatenate(blocks)
        ms = (time.perf_counter() - t0) * 1e3
        return GradientMessage(vec, version, self.index, ms, tuple(b.size for b in blocks), has_policy, stats)

    def _policy_gradient(self, version, nets, states, stats):
        spec = self.spec
        critic = nets.q[0]
        kind = spec.policy_gradient
        absorbing = spec.terminal == "absorbing"
        if kind == "mixed":
            lam = self.schedule.lam(version)
            w = self.schedule.weights(version)
            stats.update({"lambda": lam, "w0": w[0], "wH": w[spec.H]})
            return policy_gradient(
                lambda leaf, pol: mixed_policy_loss(states, w, leaf, pol, critic, self.model, spec.gamma,
                                                    self.rng, spec.weight_cutoff, max(spec.H, 1), absorbing),
                nets.policy)
        if kind == "model":
            stats.update({"w0": 0.0, "wH": 1.0})
            return policy_gradient(
                lambda leaf, pol: adp_policy_loss(states, spec.H, leaf, pol, critic, self.model, spec.gamma,
                                                  self.rng, absorbing=absorbing),
                nets.policy)
        stats.update({"w0": 1.0, "wH": 0.0})
        return policy_gradient(lambda leaf, pol: dpg_policy_loss(states, leaf, critic), nets.policy)


class OptimizerCore:
    """Owns the canonical parameters and applies gradient messages in arrival order."""

    def __init__(self, task, settings: TrainSettings, nets: ActorCritic | None = None):
        self.settings = settings
        spec = settings.spec
        if nets is None:
            nets = ActorCritic.create(task, stream(settings.seed, "init"), spec.double_q, settings.hidden)
        self.nets = nets
        h = settings.lr_horizon
        b1, b2 = settings.adam_betas
        self.policy_opt = AdamState.for_params(nets.policy, *settings.policy_lr, h, beta1=b1, beta2=b2)
        self.q_opts = [AdamState.for_params(q, *settings.value_lr, h, beta1=b1, beta2=b2) for q in nets.q]
        self.iteration = 0
        self.staleness = StalenessRecord()
        self.max_staleness = None
        self.apply_times: list[float] = []

    def snapshot(self) -> tuple[int, ActorCritic]:
        return self.iteration, self.nets.copy()

    def apply(self, msg: GradientMessage) -> bool:
        """Apply ``msg``; returns False if it was dropped as too stale."""
        lag = self.iteration - msg.version
        if lag < 0:
            raise RuntimeError(f"gradient version {msg.version} is ahead of optimizer iteration {self.iteration}")
        if self.max_staleness is not None and lag > self.max_staleness:
            self.staleness.dropped += 1
            return False
        if not math.isfinite(msg.stats.get("value_loss", 0.0)) or not np.all(np.isfinite(msg.vector)):
            raise TrainingDiverged(f"non-finite loss or gradient at iteration {self.iteration}")
        nets = self.nets
        blocks = msg.blocks()
        k = self.iteration
        try:
            for i, (q, opt) in enumerate(zip(nets.q, self.q_opts)):
                adam_step(opt, q, q.from_flat(blocks[i]), k, f"q{i + 1}")
            if msg.has_policy:
                ascent = nets.policy.from_flat(-blocks[len(nets.q)])
                adam_step(self.policy_opt, nets.policy, ascent, k, "policy")
                tau = self.settings.spec.tau
                polyak_update(nets.policy_target, nets.policy, tau)
                for qt, q in zip(nets.q_target, nets.q):
                    polyak_update(qt, q, tau)
        except NonFiniteGradientError as exc:
            raise TrainingDiverged(str(exc)) from exc
        self.staleness.add(lag)
        self.iteration += 1
        self.apply_times.append(time.perf_counter())
        return True


@dataclass
class EvalResult:
    mean: float
    returns: np.ndarray
    obs: np.ndarray
    actions: np.ndarray
    alive: np.ndarray

    @property
    def ci(self) -> float:
        n = len(self.returns)
        return float(1.96 * np.std(self.returns, ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def evaluate(policy, task, rng: np.random.Generator, episodes: int = 5, horizon: int | None = None,
             start: np.ndarray | None = None, absorbing: bool = True) -> EvalResult:
    """Deterministic rollouts; an episode stops at its first terminal state.

    The reward of the transition that enters the terminal set is counted.
    With ``absorbing`` every remaining step of the horizon is charged the
    terminal state's zero-action reward, so all episodes span ``horizon`` steps.
    ``obs``/``actions`` have shape (horizon, episodes, dim); ``alive`` marks
    the steps that belong to each episode.
    """
    horizon = task.eval_horizon if horizon is None else horizon
    s = task.reset(rng, episodes) if start is None else np.array(start, dtype=np.float64, ndmin=2)
    episodes = len(s)
    returns = np.zeros(episodes)
    alive = np.ones(episodes, dtype=bool)
    obs_log = np.zeros((horizon, episodes, task.obs_dim))
    act_log = np.zeros((horizon, episodes, task.act_dim))
    alive_log = np.zeros((horizon, episodes), dtype=bool)
    for t in range(horizon):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        a = task.clamp(forward_mlp(policy, s[idx]))
        obs_log[t, idx] = s[idx]
        act_log[t, idx] = a
        alive_log[t, idx] = True
        returns[idx] += task.reward(s[idx], a)
        nxt = task.step(s[idx], a)
        s[idx] = nxt
        dead = task.terminal(nxt)
        if absorbing and dead.any():
            rows = idx[dead]
            r_t = task.reward(nxt[dead], np.zeros((len(rows), task.act_dim)))
            returns[rows] += np.asarray(r_t) * (horizon - t - 1)
        alive[idx[dead]] = False
    return EvalResult(float(returns.mean()), returns, obs_log, act_log, alive_log)


def raw_trajectory(task, result: EvalResult) -> dict:
    """Pooled per-step quantities plus references for the error metrics."""
    o = result.obs[result.alive]
    out = {name: o[:, i] for i, name in enumerate(task.obs_names)}
    if isinstance(task, VehicleTask):
        y_ref, phi_ref = reference_path(o[:, 5])
        out.update({"y": o[:, 3] + y_ref, "y_ref": y_ref, "phi": o[:, 4] + phi_ref, "phi_ref": phi_ref,
                    "u": o[:, 0] + task.params.u_ref, "u_ref": np.full(len(o), task.params.u_ref)})
    return out


METRIC_COLUMNS = (
    "iteration",
    "wall_clock_s",
    "eval_return_mean",
    "eval_return_ci",
    "value_loss",
    "policy_loss",
    "w0",
    "wH",
    "lambda",
    "grad_staleness_mean",
    "update_time_ms",
    "grad_compute_time_ms",
)
TIMING_COLUMNS = ("wall_clock_s", "update_time_ms", "grad_compute_time_ms")


@dataclass
class IntervalStats:
    """Accumulates per-iteration statistics between two evaluations."""

    value_loss: list = field(default_factory=list)
    policy_loss: list = field(default_factory=list)
    staleness: list = field(default_factory=list)
    update_ms: list = field(default_factory=list)
    compute_ms: list = field(default_factory=list)
    last: dict = field(default_factory=dict)

    def add(self, msg: GradientMessage, lag: int, update_ms: float) -> None:
        self.value_loss.append(msg.stats["value_loss"])
        if msg.has_policy:
            self.policy_loss.append(msg.stats["policy_loss"])
            self.last = {k: msg.stats[k] for k in ("w0", "wH", "lambda")}
        self.staleness.append(lag)
        self.update_ms.append(update_ms)
        self.compute_ms.append(msg.compute_ms)

    def row(self, iteration: int, wall: float, ev: EvalResult) -> dict:
        def avg(xs):
            return float(np.mean(xs)) if xs else math.nan

        return {
            "iteration": iteration,
            "wall_clock_s": wall,
            "eval_return_mean": ev.mean,
            "eval_return_ci": ev.ci,
            "value_loss": avg(self.value_loss),
            "policy_loss": avg(self.policy_loss),
            "w0": self.last.get("w0", math.nan),
            "wH": self.last.get("wH", math.nan),
            "lambda": self.last.get("lambda", math.nan),
            "grad_staleness_mean": avg(self.staleness),
            "update_time_ms": avg(self.update_ms),
            "grad_compute_time_ms": avg(self.compute_ms),
        }
