"""Fixed-step explicit integrators with sample-and-hold semantics.

Only fixed steps: runs must be bit-reproducible across platforms, so there
is no adaptive step-size control. State components are clamped to zero
after every internal step; the RHS functions themselves never clamp.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

METHODS = ("rk4", "euler")


@dataclass(frozen=True)
class IntegratorSpec:
    """Integration method and internal step in the model's native time unit."""

    method: str = "rk4"
    dt: float = 0.1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")


def n_steps(hold_duration: float, dt: float) -> int:
    """Number of internal steps covering ``hold_duration``; rejects non-multiples."""
    ratio = hold_duration / dt
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
        raise ValueError(
            f"hold duration {hold_duration!r} is not a positive multiple of dt {dt!r}"
        )
    return n


def integrate_hold(
    rhs: Callable[[np.ndarray], np.ndarray],
    s0,
    hold_duration: float,
    spec: IntegratorSpec = IntegratorSpec(),
) -> np.ndarray:
    """Advance ``s0`` by ``hold_duration`` with the inputs baked into ``rhs`` held constant.

    ``rhs`` maps a state array to its derivative; any time dependence must be
    frozen by the caller (sample-and-hold). Components are clamped to >= 0
    after each internal step.
    """
    n = n_steps(hold_duration, spec.dt)
    s = np.array(s0, dtype=float, copy=True)
    dt = spec.dt
    if spec.method == "rk4":
        for _ in range(n):
            k1 = rhs(s)
            k2 = rhs(s + 0.5 * dt * k1)
            k3 = rhs(s + 0.5 * dt * k2)
            k4 = rhs(s + dt * k3)
            s = np.maximum(s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0)
    else:
        for _ in range(n):
            s = np.maximum(s + dt * rhs(s), 0.0)
    return s
