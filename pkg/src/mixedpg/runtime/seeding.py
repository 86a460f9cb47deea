from __future__ import annotations

import zlib

import numpy as np

KINDS = ("init", "actor", "buffer", "learner", "evaluator", "optimizer")


def stream(root: int, kind: str, index: int = 0) -> np.random.Generator:
    """Independent generator for worker ``(kind, index)`` under ``root``."""
    if kind not in KINDS:
        raise ValueError(f"unknown worker kind {kind!r}")
    return np.random.default_rng([int(root), zlib.crc32(kind.encode()), int(index)])
