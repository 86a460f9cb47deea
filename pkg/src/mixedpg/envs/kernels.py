"""Backend selection for the batched substep loops.

The compiled extension is used when it imports; set ``MIXEDPG_PURE_PYTHON=1``
to force the numpy implementation.
"""
from __future__ import annotations

import os

from . import _numpy_kernels

_compiled = None
if not os.environ.get("MIXEDPG_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"
_impl = _compiled if _compiled is not None else _numpy_kernels


def use_backend(name: str) -> None:
    """Switch backends at runtime (benchmarks and equivalence tests)."""
    global _impl, BACKEND
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        _impl = _compiled
    elif name == "numpy":
        _impl = _numpy_kernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def vehicle_substeps(s, act, T, n, Cf, Cr, a, b, m, Iz) -> None:
    if _impl.vehicle_substeps(s, act, T, int(n), Cf, Cr, a, b, m, Iz):
        from .vehicle import SimulatorFault

        raise SimulatorFault("vehicle model denominator vanished")


def pendulum_substeps(s, act, T, n, m1, m2, l, g) -> None:
    if _impl.pendulum_substeps(s, act, T, int(n), m1, m2, l, g):
        from .vehicle import SimulatorFault

        raise SimulatorFault("pendulum mass matrix singular")
