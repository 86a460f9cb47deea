from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class GradientMessage:
    """Flat gradients tagged with the parameter version they were computed from.

    ``vector`` holds the critic gradients followed, when ``has_policy`` is set,
    by the policy ascent direction. ``sizes`` records the block lengths.
    """

    vector: np.ndarray
    version: int
    learner_id: int
    compute_ms: float
    sizes: tuple
    has_policy: bool
    stats: dict = field(default_factory=dict)

    def blocks(self) -> list[np.ndarray]:
        out, pos = [], 0
        for n in self.sizes:
            out.append(self.vector[pos:pos + n])
            pos += n
        if pos != self.vector.size:
            raise ValueError(f"gradient vector has {self.vector.size} entries, layout expects {pos}")
        return out


@dataclass
class StalenessRecord:
    applied: list = field(default_factory=list)
    dropped: int = 0

    def add(self, staleness: int) -> None:
        if staleness < 0:
            raise ValueError("gradient computed from a version newer than the applying one")
        self.applied.append(int(staleness))

    @property
    def max(self) -> int:
        return max(self.applied, default=0)

    def mean(self, last: int | None = None) -> float:
        vals = self.applied if last is None else self.applied[-last:]
        return float(np.mean(vals)) if vals else 0.0

    def histogram(self) -> dict[int, int]:
        vals, counts = np.unique(np.asarray(self.applied, dtype=np.int64), return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}
