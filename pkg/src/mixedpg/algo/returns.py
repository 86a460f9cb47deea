"""Unified policy-gradient returns and the policy objectives built on them.

All objectives are maximized. Policy parameters passed as ``policy_leaf`` are
expected to be tape leaves (``tape.watch_params``); ``policy`` is the plain
numpy copy used for frozen applications after the first step. Critics are
always applied frozen.
"""
from __future__ import annotations

import numpy as np

from ..diffkit import MlpParams, Tape, Tensor, backward, forward_mlp
from ..diffkit import functional as F
from .nets import q_value

MAX_HORIZON = 200


def critic_value(critic, obs, action):
    """Q(s, a) for a single network, a critic list (first entry) or a callable."""
    if isinstance(critic, MlpParams):
        return q_value(critic, obs, action)
    if isinstance(critic, (list, tuple)):
        return q_value(critic[0], obs, action)
    return critic(obs, action)


def _check_horizon(i: int, max_horizon: int) -> None:
    if i < 0:
        raise ValueError(f"horizon must be non-negative, got {i}")
    if i > max_horizon:
        raise ValueError(f"horizon {i} exceeds the configured maximum {max_horizon}")


def _alive(model, states) -> np.ndarray:
    term = getattr(model, "terminal", None)
    data = states.data if isinstance(states, Tensor) else np.asarray(states)
    return np.ones(len(data), dtype=bool) if term is None else ~np.asarray(term(data), dtype=bool)


def _masked(alive, x):
    return F.where(alive, x, 0.0)


def _advance(model, s, a, alive, rng):
    """Model step that freezes rows once they reach the terminal set."""
    nxt = F.where(alive[:, None], model.step(s, a, rng), s)
    return nxt, alive & _alive(model, nxt)


def absorbing_value(model, s, act_dim: int, gamma: float):
    """Value of staying forever in ``s`` with zero action: ``r(s, 0) / (1 - gamma)``."""
    if gamma >= 1.0:
        raise ValueError("absorbing terminal values need gamma < 1")
    n = len(s.data if isinstance(s, Tensor) else s)
    return model.reward(s, np.zeros((n, act_dim))) * (1.0 / (1.0 - gamma))


class _Rollout:
    """Masked model rollout; rows that hit the terminal set are frozen.

    With ``absorbing`` set, a row that terminates at step ``k`` contributes
    ``gamma^k r(s_k, 0) / (1 - gamma)`` once; otherwise it contributes nothing
    further.
    """

    def __init__(self, model, states, gamma, act_dim, absorbing, rng):
        self.model, self.gamma, self.act_dim = model, gamma, act_dim
        self.absorbing, self.rng = absorbing, rng
        self.s = states
        self.alive = _alive(model, states)
        self.disc = 1.0
        self.total = None

    def _add(self, x):
        self.total = x if self.total is None else self.total + x

    def step(self, a):
        m = self.model
        self._add(self.disc * _masked(self.alive, m.reward(self.s, a)))
        before = self.alive
        self.s, self.alive = _advance(m, self.s, a, before, self.rng)
        self.disc *= self.gamma
        died = before & ~self.alive
        if self.absorbing and died.any():
            self._add(self.disc * _masked(died, absorbing_value(m, self.s, self.act_dim, self.gamma)))

    def value(self, tail):
        """Accumulated return plus ``disc * tail`` on the surviving rows."""
        boot = self.disc * _masked(self.alive, tail)
        return boot if self.total is None else self.total + boot


def unified_returns(states, horizons, policy_leaf, policy, critic, model, gamma: float,
                    rng=None, max_horizon: int = MAX_HORIZON, absorbing: bool = True) -> dict:
    """Per-sample returns ``X_i`` for every ``i`` in ``horizons`` from one shared rollout.

    ``X_0 = Q(s, pi_theta(s))``. For ``i >= 1`` the first action comes from
    ``policy_leaf``, the next ``i - 1`` actions and the bootstrap action from the
    frozen ``policy``; the bootstrap is ``gamma^i Q(s_i, pi_old(s_i))``.
    Rows that enter the model's terminal set stop there (see :class:`_Rollout`).
    """
    hs = sorted(set(int(i) for i in horizons))
    for i in hs:
        _check_horizon(i, max_horizon)
    ro = _Rollout(model, states, gamma, policy.out_dim, absorbing, rng)
    a = forward_mlp(policy_leaf, states)
    out = {}
    top = hs[-1] if hs else 0
    for k in range(top + 1):
        if k > 0:
            a = forward_mlp(policy, ro.s)
        if k in hs:
            out[k] = ro.value(critic_value(critic, ro.s, a))
        if k < top:
            ro.step(a)
    return out


def model_return_X(i: int, states, policy_leaf, policy, critic, model, gamma: float, rng=None,
                   max_horizon: int = MAX_HORIZON, absorbing: bool = True):
    """Batch mean of ``X_i``."""
    xs = unified_returns(states, (i,), policy_leaf, policy, critic, model, gamma, rng, max_horizon, absorbing)
    return F.mean(xs[i])


def mixed_policy_loss(states, weights: dict, policy_leaf, policy, critic, model, gamma: float,
                      rng=None, cutoff: float = 0.0, max_horizon: int = MAX_HORIZON, absorbing: bool = True):
    """``mean(sum_i w_i X_i)``; horizons whose weight is below ``cutoff`` are skipped."""
    active = {i: w for i, w in weights.items() if w > cutoff}
    if not active:
        top = max(weights, key=weights.get)
        active = {top: weights[top]}
    xs = unified_returns(states, tuple(active), policy_leaf, policy, critic, model, gamma, rng, max_horizon, absorbing)
    total = None
    for i in sorted(active):
        term = active[i] * xs[i]
        total = term if total is None else total + term
    return F.mean(total)


def adp_policy_loss(states, H: int, policy_leaf, policy, critic, model, gamma: float, rng=None,
                    max_horizon: int = MAX_HORIZON, absorbing: bool = True):
    """Full BPTT objective: ``pi_theta`` acts at every model step.

    The bootstrap action at ``s_H`` is taken with the frozen policy, so the
    objective decomposes exactly into unified returns along the same rollout.
    """
    if H < 1:
        raise ValueError("model-driven horizon must be at least 1")
    _check_horizon(H, max_horizon)
    ro = _Rollout(model, states, gamma, policy.out_dim, absorbing, rng)
    for _ in range(H):
        ro.step(forward_mlp(policy_leaf, ro.s))
    return F.mean(ro.value(critic_value(critic, ro.s, forward_mlp(policy, ro.s))))


def dpg_policy_loss(states, policy_leaf, critic):
    return F.mean(critic_value(critic, states, forward_mlp(policy_leaf, states)))


def policy_gradient(objective, policy: MlpParams, *args, **kwargs):
    """Evaluate ``objective(policy_leaf, policy, *args)`` on a fresh tape.

    Returns ``(value, grads)`` where ``grads`` is the ascent direction.
    """
    with Tape() as tape:
        leaf = tape.watch_params(policy)
        J = objective(leaf, policy, *args, **kwargs)
    return float(J.data), backward(tape, J, leaf)


def theorem1_check(states, n: int, policy: MlpParams, critic, model, gamma: float, absorbing: bool = True):
    """Compare the BPTT gradient with the discounted sum of unified-return gradients.

    The right-hand side is assembled from separate tapes, one per start point
    along the deterministic rollout of ``policy`` under ``model``.
    Returns ``(lhs, rhs, max_abs_diff)`` with flat gradient vectors.
    """
    _, g_lhs = policy_gradient(
        lambda leaf, pol: adp_policy_loss(states, n, leaf, pol, critic, model, gamma, absorbing=absorbing), policy)
    lhs = g_lhs.to_flat()
    rhs = np.zeros_like(lhs)
    s = np.asarray(states, dtype=np.float64)
    alive = _alive(model, s)
    disc = 1.0
    for k in range(n):
        _, g = policy_gradient(
            lambda leaf, pol, s=s, k=k: model_return_X(n - k, s, leaf, pol, critic, model, gamma, absorbing=absorbing),
            policy)
        rhs += disc * g.to_flat()
        s, alive = _advance(model, s, forward_mlp(policy, s), alive, None)
        disc *= gamma
    return lhs, rhs, float(np.max(np.abs(lhs - rhs)))
