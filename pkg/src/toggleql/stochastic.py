"""Chemical-Langevin form of the full model and its Euler-Maruyama stepper.

The four biochemical species of the toggle switch react through eight
events: one production and one degradation per species. The Langevin
approximation drives the state with drift ``S a`` and diffusion
``S diag(sqrt(a)) dW`` built from the stoichiometric matrix ``S`` and the
propensity vector ``a``. Intracellular inducers carry no reaction noise and
are advanced deterministically by the membrane-diffusion law.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import full_rhs, hill_LacI, hill_TetR
from .params import ModelParams

# columns: production of x1..x4, then degradation of x1..x4
STOICHIOMETRY = np.array(
    [
        [1, 0, 0, 0, -1, 0, 0, 0],
        [0, 1, 0, 0, 0, -1, 0, 0],
        [0, 0, 1, 0, 0, 0, -1, 0],
        [0, 0, 0, 1, 0, 0, 0, -1],
    ],
    dtype=np.int64,
)

N_REACTIONS = STOICHIOMETRY.shape[1]


def propensities(s, p: ModelParams) -> np.ndarray:
    """Per-minute rates of the eight reaction events at state ``s``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError(f"state components must be >= 0, got {s!r}")
    x1, x2, x3, x4, v1, v2 = s
    return np.array(
        [
            p.km0_L + p.km_L * hill_LacI(x4, v1, p),
            p.km0_T + p.km_T * hill_TetR(x3, v2, p),
            p.kp_L * x1,
            p.kp_T * x2,
            p.gm_L * x1,
            p.gm_T * x2,
            p.gp_L * x3,
            p.gp_T * x4,
        ]
    )


def em_step(s, u, dt: float, rng: np.random.Generator, p: ModelParams) -> np.ndarray:
    """One Euler-Maruyama step of the Langevin model; returns the clamped next state.

    The Wiener increments are ``sqrt(dt)`` times eight independent standard
    normals drawn from ``rng``; passing a generator whose ``standard_normal``
    returns zeros degenerates the step to explicit Euler. The inducers
    (components 5 and 6) evolve deterministically.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    s = np.asarray(s, dtype=float)
    a = propensities(s, p)
    dw = rng.standard_normal(N_REACTIONS) * math.sqrt(dt)
    x_next = s[:4] + STOICHIOMETRY @ (a * dt) + STOICHIOMETRY @ (np.sqrt(a) * dw)

    deterministic = full_rhs(s, u, p)
    v_next = s[4:] + dt * deterministic[4:]

    return np.maximum(np.concatenate([x_next, v_next]), 0.0)
