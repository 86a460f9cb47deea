"""Policy and critic networks with their target copies."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..diffkit import MlpParams, forward_mlp, functional as F


@dataclass
class ActorCritic:
    policy: MlpParams
    q: list
    policy_target: MlpParams
    q_target: list

    @classmethod
    def create(cls, task, rng: np.random.Generator, double_q: bool, hidden=(256, 256)) -> "ActorCritic":
        high = task.action_high
        obs_scale = np.asarray(task.obs_scale, dtype=np.float64)
        policy = MlpParams.init(rng, task.obs_dim, task.act_dim, hidden, output="tanh",
                                in_scale=obs_scale, out_scale=high)
        q_scale = np.concatenate([obs_scale, 1.0 / high])
        qs = [MlpParams.init(rng, task.obs_dim + task.act_dim, 1, hidden, in_scale=q_scale)
              for _ in range(2 if double_q else 1)]
        return cls(policy, qs, policy.copy(), [q.copy() for q in qs])

    def copy(self) -> "ActorCritic":
        return ActorCritic(self.policy.copy(), [q.copy() for q in self.q],
                           self.policy_target.copy(), [q.copy() for q in self.q_target])

    def named(self) -> dict[str, MlpParams]:
        out = {"policy": self.policy, "policy_target": self.policy_target}
        for i, (q, qt) in enumerate(zip(self.q, self.q_target)):
            out[f"q{i + 1}"] = q
            out[f"q{i + 1}_target"] = qt
        return out

    @classmethod
    def from_named(cls, nets: dict) -> "ActorCritic":
        n = sum(1 for k in nets if k.startswith("q") and not k.endswith("_target"))
        return cls(nets["policy"], [nets[f"q{i + 1}"] for i in range(n)],
                   nets["policy_target"], [nets[f"q{i + 1}_target"] for i in range(n)])

    def to_flat(self) -> np.ndarray:
        return np.concatenate([p.to_flat() for p in self.named().values()])


def act(policy, obs):
    return forward_mlp(policy, obs)


def q_value(q, obs, action):
    """Critic output as a (N,) vector."""
    return forward_mlp(q, F.concat([obs, action], axis=-1))[:, 0]


def explore(policy: MlpParams, obs: np.ndarray, std: float, rng: np.random.Generator) -> np.ndarray:
    """Deterministic action plus Gaussian noise in the normalized action space."""
    high = policy.out_scale
    a = forward_mlp(policy, obs) / high
    if std > 0:
        a = a + rng.normal(0.0, std, size=a.shape)
    return np.clip(a, -1.0, 1.0) * high
