"""Batched stepping with auto-reset of terminated agents."""
from __future__ import annotations

import numpy as np


class ResetError(ValueError):
    pass


def batch_step(task, states: np.ndarray, actions: np.ndarray):
    """Step every agent once; returns ``(next_states, rewards, terminals)``."""
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    if len(states) != len(actions):
        raise ValueError(f"{len(states)} states but {len(actions)} actions")
    actions = task.clamp(actions.reshape(len(actions), task.act_dim))
    rewards = np.asarray(task.reward(states, actions))
    nxt = task.step(states, actions)
    return nxt, rewards, task.terminal(nxt)


class BatchEnv:
    """``n`` parallel agents of one task sharing one RNG stream."""

    def __init__(self, task, n_agents: int, rng: np.random.Generator):
        self.task = task
        self.n = n_agents
        self.rng = rng
        self.obs = task.reset(rng, n_agents)

    def reset(self, rng: np.random.Generator | None = None) -> np.ndarray:
        if rng is not None:
            self.rng = rng
        self.obs = self.task.reset(self.rng, self.n)
        return self.obs.copy()

    def reset_to(self, states) -> None:
        states = np.array(states, dtype=np.float64, ndmin=2)
        if states.shape[1] != self.task.obs_dim:
            raise ResetError(f"state width {states.shape[1]} != {self.task.obs_dim}")
        if not np.all(np.isfinite(states)):
            raise ResetError("reset_to state is not finite")
        if np.any(self.task.terminal(states)):
            raise ResetError("reset_to state lies in the terminal set")
        self.obs = states.copy()
        self.n = len(states)

    def observe(self) -> np.ndarray:
        return self.obs.copy()

    def step(self, actions: np.ndarray):
        """Returns ``(obs, actions, rewards, next_obs, dones)``; finished agents restart."""
        obs = self.obs
        actions = self.task.clamp(np.asarray(actions, dtype=np.float64).reshape(self.n, self.task.act_dim))
        nxt, rew, done = batch_step(self.task, obs, actions)
        self.obs = nxt.copy()
        if np.any(done):
            self.obs[done] = self.task.reset(self.rng, int(done.sum()))
        return obs, actions, rew, nxt, done

    def rollout_step(self, actions: np.ndarray):
        """Step without auto-reset; returns ``(rewards, next_obs, dones)``."""
        nxt, rew, done = batch_step(self.task, self.obs, actions)
        self.obs = nxt.copy()
        return rew, nxt, done
