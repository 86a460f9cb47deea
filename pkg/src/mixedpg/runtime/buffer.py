"""Ring replay storage with uniform sampling."""
from __future__ import annotations

import numpy as np

FIELDS = ("obs", "act", "rew", "next_obs", "done")


class ReplayBuffer:
    def __init__(self, obs_dim: int, act_dim: int, capacity: int = 500_000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = int(capacity)
        self.obs = np.zeros((self.capacity, obs_dim))
        self.act = np.zeros((self.capacity, act_dim))
        self.rew = np.zeros(self.capacity)
        self.next_obs = np.zeros((self.capacity, obs_dim))
        self.done = np.zeros(self.capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, act, rew, next_obs, done) -> None:
        """Store one transition or a batch (leading axis)."""
        obs = np.atleast_2d(obs)
        act = np.atleast_2d(act)
        next_obs = np.atleast_2d(next_obs)
        rew = np.atleast_1d(rew)
        done = np.atleast_1d(done)
        n = len(obs)
        if n > self.capacity:
            obs, act, rew, next_obs, done = obs[-self.capacity:], act[-self.capacity:], rew[-self.capacity:], next_obs[-self.capacity:], done[-self.capacity:]
            self.cursor = (self.cursor + n - self.capacity) % self.capacity
            n = self.capacity
        idx = (self.cursor + np.arange(n)) % self.capacity
        self.obs[idx] = obs
        self.act[idx] = act
        self.rew[idx] = rew
        self.next_obs[idx] = next_obs
        self.done[idx] = done
        self.cursor = int((self.cursor + n) % self.capacity)
        self.size = min(self.size + n, self.capacity)

    def ready(self, n: int) -> bool:
        return self.size >= n

    def sample(self, n: int, rng: np.random.Generator) -> dict | None:
        """Uniform draw with replacement; ``None`` while fewer than ``n`` items are stored."""
        if self.size < n:
            return None
        idx = rng.integers(0, self.size, size=n)
        return {f: getattr(self, f)[idx].copy() for f in FIELDS}

    def contents(self) -> dict:
        """Stored transitions, oldest first."""
        if self.size < self.capacity:
            order = np.arange(self.size)
        else:
            order = (self.cursor + np.arange(self.capacity)) % self.capacity
        return {f: getattr(self, f)[order].copy() for f in FIELDS}
