"""Rule-based weights between the data-driven and model-driven returns."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def lambda_value(k: int, eta: float, T: int) -> float:
    """Ramp from ``1 - eta`` to ``1 + eta`` over ``T`` iterations, then hold."""
    if k < 0:
        raise ValueError("iteration must be non-negative")
    frac = 1.0 if T <= 0 else min(k, T) / T
    return 1.0 - eta + 2.0 * eta * frac


def rule_errors(lam: float, horizons) -> np.ndarray:
    h = np.asarray(sorted(horizons), dtype=np.float64)
    if lam <= 1.0:
        return lam ** h
    return (2.0 - lam) ** (h.max() - h)


def rule_weights(lam: float, horizons) -> dict[int, float]:
    """Softmax over inverse rule errors, keyed by horizon."""
    hs = sorted(int(i) for i in horizons)
    if 0 not in hs:
        raise ValueError("horizon set must contain 0")
    logits = 1.0 / rule_errors(lam, hs)
    z = np.exp(logits - logits.max())
    w = z / z.sum()
    return {i: float(wi) for i, wi in zip(hs, w)}


@dataclass
class WeightSchedule:
    eta: float = 0.1
    T: int = 9000
    H: int = 25

    def lam(self, k: int) -> float:
        return lambda_value(k, self.eta, self.T)

    def weights(self, k: int) -> dict[int, float]:
        return rule_weights(self.lam(k), (0, self.H))
