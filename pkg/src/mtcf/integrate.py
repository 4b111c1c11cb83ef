"""Fixed-step classical RK4 for linear, time-dependent systems."""

from __future__ import annotations

import math

import numpy as np


def step_count(span: float, dt: float) -> int:
    """Smallest number of equal steps not longer than ``dt`` covering ``span``."""
    return int(math.ceil(span / dt - 1e-9)) if span > 0 else 0


def rk4_grid(rhs, y0, t0: float, out_times, dt: float):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` and record ``y`` at ``out_times``.

    Each gap between consecutive output times is split into equal steps no
    longer than ``dt``, so every output time is hit exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    out_times = np.atleast_1d(np.asarray(out_times, dtype=float))
    if out_times.size and (out_times[0] < t0 or np.any(np.diff(out_times) < 0)):
        raise ValueError("output times must be sorted and not before t0")
    y = np.array(y0, dtype=complex)
    out = np.empty((len(out_times),) + y.shape, dtype=complex)
    t = float(t0)
    for j, target in enumerate(out_times):
        n = step_count(target - t, dt)
        if n:
            h = (target - t) / n
            for i in range(n):
                s = t + i * h
                k1 = rhs(s, y)
                k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1)
                k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2)
                k4 = rhs(s + h, y + h * k3)
                y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = float(target)
        out[j] = y
    return out
