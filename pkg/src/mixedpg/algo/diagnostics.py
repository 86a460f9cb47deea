"""Empirical bias of the unified policy gradient against a long-rollout oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..diffkit import MlpParams, forward_mlp
from ..priors import make_prior, oracle_model_adapter
from .nets import q_value
from .returns import _Rollout, policy_gradient, unified_returns

REGIMES = ("none", "critic", "model")


def oracle_horizon(gamma: float, mass: float = 1e-6) -> int:
    """Smallest ``L`` with ``gamma^L < mass``."""
    if gamma <= 0.0:
        return 1
    return int(math.floor(math.log(mass) / math.log(gamma))) + 1


@dataclass
class RolloutCritic:
    """Critic replaced by the true discounted return of the frozen policy.

    ``Q(s, a) = r(s, a) + sum_{j=1}^{steps-1} gamma^j r(s_j, pi(s_j))`` under the
    true dynamics, truncated after ``steps`` rewards. An optional
    ``perturb`` network adds ``scale * g(s, a)``.
    """

    task: object
    policy: MlpParams
    gamma: float
    steps: int
    perturb: MlpParams | None = None
    scale: float = 0.0

    def __call__(self, obs, action):
        oracle = oracle_model_adapter(self.task)
        ro = _Rollout(oracle, obs, self.gamma, self.policy.out_dim, True, None)
        ro.step(action)
        for _ in range(self.steps - 1):
            ro.step(forward_mlp(self.policy, ro.s))
        total = ro.value(0.0)
        if self.perturb is not None and self.scale != 0.0:
            total = total + self.scale * q_value(self.perturb, obs, action)
        return total


def _small_policy(task, rng, hidden, out_gain):
    pol = MlpParams.init(rng, task.obs_dim, task.act_dim, hidden, output="tanh",
                         in_scale=np.asarray(task.obs_scale, dtype=np.float64), out_scale=task.action_high)
    pol.weights[-1] *= out_gain
    return pol


def pg_bias_diagnostic(task, horizons=(0, 1, 2, 5, 10, 25), seeds=range(20), regimes=REGIMES,
                       gamma: float = 0.8, n_states: int = 4, hidden=(32, 32), critic_noise: float = 1.0,
                       out_gain: float = 0.1, policy: MlpParams | None = None) -> list[dict]:
    """Rows of ``{seed, regime, n, bias}`` with ``bias = ||grad J_n - grad J_oracle||``.

    Regimes: ``none`` uses the true dynamics and the rollout critic,
    ``critic`` adds a random network to that critic, ``model`` swaps the
    true dynamics for the task's prior model (noise drawn from the seed).
    """
    L = oracle_horizon(gamma)
    hs = sorted(set(int(h) for h in horizons))
    if hs[-1] >= L:
        raise ValueError(f"horizon {hs[-1]} must stay below the oracle horizon {L}")
    oracle = oracle_model_adapter(task)
    rows = []
    for seed in seeds:
        rng = np.random.default_rng([int(seed), 0xB1A5])
        pol = policy if policy is not None else _small_policy(task, rng, hidden, out_gain)
        g_net = MlpParams.init(rng, task.obs_dim + task.act_dim, 1, hidden,
                               in_scale=np.concatenate([np.asarray(task.obs_scale, dtype=np.float64), 1.0 / task.action_high]))
        states = task.reset(rng, n_states)
        zero = lambda obs, action: 0.0 * oracle.reward(obs, action)
        _, g_ref = policy_gradient(
            lambda leaf, p: _mean_return(states, L, leaf, p, zero, oracle, gamma, None), pol)
        ref = g_ref.to_flat()
        model_seed = rng.integers(2**63)
        for regime in regimes:
            if regime not in REGIMES:
                raise ValueError(f"unknown regime {regime!r}")
            for n in hs:
                critic = RolloutCritic(task, pol, gamma, L - n, g_net if regime == "critic" else None, critic_noise)
                model = make_prior(task) if regime == "model" else oracle
                mrng = np.random.default_rng(model_seed)
                _, g = policy_gradient(
                    lambda leaf, p: _mean_return(states, n, leaf, p, critic, model, gamma, mrng), pol)
                rows.append({"seed": int(seed), "regime": regime, "n": n,
                             "bias": float(np.linalg.norm(g.to_flat() - ref)),
                             "ref_norm": float(np.linalg.norm(ref))})
    return rows


def _mean_return(states, n, leaf, pol, critic, model, gamma, rng):
    from ..diffkit import functional as F
    return F.mean(unified_returns(states, (n,), leaf, pol, critic, model, gamma, rng, max_horizon=10**6)[n])


def bias_trends(rows: list[dict]) -> dict[str, float]:
    """Spearman correlation between ``n`` and the seed-averaged bias, per regime."""
    from scipy.stats import spearmanr

    out = {}
    for regime in sorted({r["regime"] for r in rows}):
        sub = [r for r in rows if r["regime"] == regime]
        ns = sorted({r["n"] for r in sub})
        means = [np.mean([r["bias"] for r in sub if r["n"] == n]) for n in ns]
        if np.ptp(means) == 0.0:
            out[regime] = 0.0
        else:
            out[regime] = float(spearmanr(ns, means).statistic)
    return out
