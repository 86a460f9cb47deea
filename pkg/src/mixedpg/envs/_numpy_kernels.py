"""Pure numpy substep loops, used when the compiled extension is unavailable."""
from __future__ import annotations

import numpy as np


def vehicle_substeps(s, act, T, n, Cf, Cr, a, b, m, Iz) -> int:
    from .vehicle import SimulatorFault, VehicleParams, vehicle_substep

    p = VehicleParams(C_f=Cf, C_r=Cr, a=a, b=b, m=m, I_z=Iz)
    cols = tuple(s[:, i] for i in range(6))
    delta, acc = act[:, 0], act[:, 1]
    try:
        for _ in range(n):
            cols = vehicle_substep(*cols, delta, acc, p, T)
    except SimulatorFault:
        return 1
    s[:] = np.stack(cols, axis=1)
    return 0


def pendulum_substeps(s, act, T, n, m1, m2, l, g) -> int:
    from .pendulum import PendulumParams, pendulum_substep
    from .vehicle import SimulatorFault

    p = PendulumParams(m1=m1, m2=m2, l=l, g=g)
    cols = tuple(s[:, i] for i in range(4))
    force = act[:, 0]
    try:
        for _ in range(n):
            cols = pendulum_substep(*cols, force, p, T)
    except SimulatorFault:
        return 1
    s[:] = np.stack(cols, axis=1)
    return 0
