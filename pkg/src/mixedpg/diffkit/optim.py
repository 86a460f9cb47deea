from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mlp import MlpParams, ShapeError


class NonFiniteGradientError(FloatingPointError):
    def __init__(self, layer: int, name: str = ""):
        self.layer = layer
        super().__init__(f"non-finite gradient in layer {layer}{' of ' + name if name else ''}")


def linear_decay(base: float, final: float, horizon: int, iteration: int) -> float:
    """Learning rate moving linearly from ``base`` to ``final`` over ``horizon`` steps."""
    if horizon <= 0 or iteration >= horizon:
        return final
    frac = min(max(iteration, 0), horizon) / horizon
    return base + (final - base) * frac


@dataclass
class AdamState:
    lr_base: float
    lr_final: float
    decay_horizon: int
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params: MlpParams, lr_base: float, lr_final: float, decay_horizon: int, **kw) -> "AdamState":
        shapes = params.shapes()
        return cls(
            lr_base,
            lr_final,
            decay_horizon,
            m=[np.zeros(s) for s in shapes],
            v=[np.zeros(s) for s in shapes],
            **kw,
        )

    def lr(self, iteration: int) -> float:
        return linear_decay(self.lr_base, self.lr_final, self.decay_horizon, iteration)

    def copy(self) -> "AdamState":
        return AdamState(
            self.lr_base, self.lr_final, self.decay_horizon, self.beta1, self.beta2, self.eps,
            [a.copy() for a in self.m], [a.copy() for a in self.v], self.step,
        )


def adam_step(state: AdamState, params: MlpParams, grads: MlpParams, iteration: int, name: str = "") -> MlpParams:
    """Descend along ``grads`` in place; the rate follows the linear decay at ``iteration``."""
    garr = grads.arrays()
    parr = params.arrays()
    if len(garr) != len(parr) or len(state.m) != len(parr):
        raise ShapeError("gradient, parameter, and moment structures differ")
    for i, g in enumerate(garr):
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(i // 2, name)
    state.step += 1
    t = state.step
    lr = state.lr(iteration)
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(parr, garr, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params
