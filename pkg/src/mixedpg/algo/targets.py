"""Critic regression targets and the value-loss gradient."""
from __future__ import annotations

import numpy as np

from ..diffkit import Tape, backward, forward_mlp
from ..diffkit import functional as F
from .nets import q_value


class ConfigurationError(ValueError):
    pass


def terminal_value(task, obs, gamma: float) -> np.ndarray:
    """Absorbing value of terminal states: ``r(s, 0) / (1 - gamma)``."""
    obs = np.asarray(obs, dtype=np.float64)
    if len(obs) == 0:
        return np.zeros(0)
    return np.asarray(task.reward(obs, np.zeros((len(obs), task.act_dim)))) / (1.0 - gamma)


def nstep_target(batch: dict, n: int, gamma: float, policy, policy_target, q_target, env,
                 absorbing: bool = True) -> np.ndarray:
    """n-step TD targets from real rollouts of the current policy.

    Each non-terminal ``s'`` in the batch is loaded into ``env`` with
    ``reset_to`` and rolled ``n - 1`` further steps with deterministic actions
    from ``policy``. Rollouts stop at terminal states and drop the bootstrap;
    with ``absorbing`` the terminal state's absorbing value takes its place.
    Survivors bootstrap with ``gamma^n Q'(s_n, pi'(s_n))``.
    """
    if not hasattr(env, "reset_to") or not hasattr(env, "rollout_step"):
        raise ConfigurationError("n-step value targets need an environment with reset_to support")
    if n < 1:
        raise ValueError("n must be at least 1")
    y = np.array(batch["rew"], dtype=np.float64, copy=True)
    alive = ~np.asarray(batch["done"], dtype=bool)
    idx = np.flatnonzero(alive)
    disc = gamma
    s1 = np.asarray(batch["next_obs"], dtype=np.float64)
    if absorbing and gamma != 0.0 and (~alive).any():
        y[~alive] += gamma * terminal_value(env.task, s1[~alive], gamma)
    s = s1[idx]
    for _ in range(n - 1):
        if idx.size == 0 or disc == 0.0:
            break
        env.reset_to(s)
        rew, nxt, done = env.rollout_step(forward_mlp(policy, s))
        y[idx] += disc * rew
        disc *= gamma
        if absorbing and done.any():
            y[idx[done]] += disc * terminal_value(env.task, nxt[done], gamma)
        keep = ~done
        idx, s = idx[keep], nxt[keep]
    if idx.size and disc != 0.0:
        y[idx] += disc * q_value(q_target, s, forward_mlp(policy_target, s))
    return y


def clipped_double_q_target(batch: dict, gamma: float, policy_target, q_targets, smooth_std: float = 0.0,
                            smooth_clip: float = 0.5, rng: np.random.Generator | None = None,
                            task=None) -> np.ndarray:
    """``r + gamma (1 - d) min_i Q'_i(s', a')`` with optional target-policy smoothing.

    Given ``task``, terminal rows bootstrap from the absorbing value instead of 0.
    """
    s1 = np.asarray(batch["next_obs"], dtype=np.float64)
    a1 = forward_mlp(policy_target, s1)
    if smooth_std > 0:
        high = policy_target.out_scale
        eps = np.clip(rng.normal(0.0, smooth_std, size=a1.shape), -smooth_clip, smooth_clip)
        a1 = np.clip(a1 / high + eps, -1.0, 1.0) * high
    q = np.min(np.stack([q_value(qt, s1, a1) for qt in q_targets]), axis=0)
    done = np.asarray(batch["done"], dtype=bool)
    boot = np.where(done, 0.0, q)
    if task is not None and done.any():
        boot[done] = terminal_value(task, s1[done], gamma)
    return np.asarray(batch["rew"], dtype=np.float64) + gamma * boot


def td3_target(batch: dict, gamma: float, policy_target, q_targets, smooth_std: float = 0.1,
               smooth_clip: float = 0.5, rng: np.random.Generator | None = None, task=None) -> np.ndarray:
    return clipped_double_q_target(batch, gamma, policy_target, q_targets, smooth_std, smooth_clip, rng, task)


def value_targets(spec, batch: dict, nets, env=None, rng=None) -> np.ndarray:
    kind = spec.value_target
    absorbing = spec.terminal == "absorbing"
    task = env.task if absorbing and env is not None else None
    if kind == "nstep":
        return nstep_target(batch, spec.n, spec.gamma, nets.policy, nets.policy_target, nets.q_target[0], env,
                            absorbing)
    if kind == "clipped_double_q":
        return clipped_double_q_target(batch, spec.gamma, nets.policy_target, nets.q_target, task=task)
    return td3_target(batch, spec.gamma, nets.policy_target, nets.q_target, spec.smooth_std, spec.smooth_clip,
                      rng, task)


def value_loss_grad(batch: dict, targets: np.ndarray, q) -> tuple[float, object]:
    """Value and gradient of ``0.5 * mean((Q(s, a) - y)^2)`` for one critic."""
    y = np.asarray(targets, dtype=np.float64)
    with Tape() as tape:
        leaf = tape.watch_params(q)
        loss = 0.5 * F.mean(F.square(q_value(leaf, batch["obs"], batch["act"]) - y))
    return float(loss.data), backward(tape, loss, leaf)
