from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from mixedpg.diffkit import MlpParams


def fd_flat(fn, params: MlpParams, h: float = 1e-6) -> np.ndarray:
    """Central differences of ``fn(params)`` with respect to every flat entry."""
    base = params.to_flat()
    out = np.zeros_like(base)
    for i in range(base.size):
        e = base.copy()
        e[i] += h
        up = fn(params.from_flat(e))
        e[i] -= 2 * h
        down = fn(params.from_flat(e))
        out[i] = (up - down) / (2 * h)
    return out


def fd_array(fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = x.copy()
        e[idx] += h
        up = fn(e)
        e[idx] -= 2 * h
        down = fn(e)
        out[idx] = (up - down) / (2 * h)
    return out


def rel_err(a, b) -> float:
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines keyed by criterion number, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    lines = [ACCEPTANCE[k] for k in sorted(ACCEPTANCE)]
    for line in lines:
        terminalreporter.write_line(line)
    out = Path(__file__).resolve().parents[1] / "artifacts" / "acceptance.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
