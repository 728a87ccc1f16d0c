"""Right-hand sides of the cell models and the full<->reduced state mappings.

Two models live here:

* the full deterministic model: four biochemical states (two mRNAs, the two
  repressor proteins) plus two intracellular inducer concentrations driven
  by membrane diffusion from the externally applied concentrations;
* the reduced dimensionless model: two protein-proxy states evolving in
  rescaled time ``t' = gp * t``, used for policy training.

State vectors are plain float arrays: ``[x1, x2, x3, x4, v1, v2]`` for the
full model and ``[z1, z2]`` for the reduced one. The dataclasses below are
validated views for construction and I/O; the RHS functions work on arrays
and never clamp (keeping state non-negative is the integrator's job).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .params import ModelParams, ReducedCoeffs

FULL_STATE_DIM = 6
REDUCED_STATE_DIM = 2


class InputPair(NamedTuple):
    """Extracellular inducer concentrations applied to the growth medium (a.u.)."""

    u1: float  # aTc
    u2: float  # IPTG


@dataclass(frozen=True)
class FullState:
    """mRNAs (x1, x2), proteins (x3 LacI, x4 TetR), intracellular inducers (v1 aTc, v2 IPTG)."""

    x1: float
    x2: float
    x3: float
    x4: float
    v1: float = 0.0
    v2: float = 0.0

    def __post_init__(self):
        for name in ("x1", "x2", "x3", "x4", "v1", "v2"):
            if getattr(self, name) < 0:
                raise ValueError(f"state component {name} must be >= 0, got {getattr(self, name)!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3, self.x4, self.v1, self.v2], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "FullState":
        a = np.asarray(arr, dtype=float)
        if a.shape != (FULL_STATE_DIM,):
            raise ValueError(f"expected a length-{FULL_STATE_DIM} state vector, got shape {a.shape}")
        return cls(*a.tolist())


@dataclass(frozen=True)
class ReducedState:
    """Dimensionless protein proxies z1 = x3/theta_LacI, z2 = x4/theta_TetR."""

    z1: float
    z2: float

    def __post_init__(self):
        if self.z1 < 0 or self.z2 < 0:
            raise ValueError(f"reduced state must be >= 0, got ({self.z1!r}, {self.z2!r})")

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ReducedState":
        a = np.asarray(arr, dtype=float)
        if a.shape != (REDUCED_STATE_DIM,):
            raise ValueError(f"expected a length-{REDUCED_STATE_DIM} state vector, got shape {a.shape}")
        return cls(*a.tolist())


def hill_aTc(v1: float, p: ModelParams) -> float:
    """Fraction of TetR left free to repress at intracellular aTc level v1."""
    if v1 < 0:
        raise ValueError(f"v1 must be >= 0, got {v1!r}")
    return 1.0 / (1.0 + (v1 / p.theta_aTc) ** p.eta_aTc)


def hill_IPTG(v2: float, p: ModelParams) -> float:
    """Fraction of LacI left free to repress at intracellular IPTG level v2."""
    if v2 < 0:
        raise ValueError(f"v2 must be >= 0, got {v2!r}")
    return 1.0 / (1.0 + (v2 / p.theta_IPTG) ** p.eta_IPTG)


def hill_LacI(x4: float, v1: float, p: ModelParams) -> float:
    """Transcriptional activity of the LacI promoter under TetR repression.

    TetR (x4) represses; aTc (v1) sequesters TetR and relieves the repression.
    """
    if x4 < 0:
        raise ValueError(f"x4 must be >= 0, got {x4!r}")
    return 1.0 / (1.0 + ((x4 / p.theta_TetR) * hill_aTc(v1, p)) ** p.eta_TetR)


def hill_TetR(x3: float, v2: float, p: ModelParams) -> float:
    """Transcriptional activity of the TetR promoter under LacI repression."""
    if x3 < 0:
        raise ValueError(f"x3 must be >= 0, got {x3!r}")
    return 1.0 / (1.0 + ((x3 / p.theta_LacI) * hill_IPTG(v2, p)) ** p.eta_LacI)


def _repression(protein_over_theta: float, relief: float, eta: float) -> float:
    # |.| guards transient sub-zero RK stage values; exact on the valid domain
    return 1.0 / (1.0 + (abs(protein_over_theta) * relief) ** eta)


def full_rhs(s, u, p: ModelParams) -> np.ndarray:
    """Time derivative (per minute) of the full model at state ``s`` under held inputs ``u``.

    ``u = (u1, u2)`` are the extracellular aTc/IPTG concentrations. The
    intracellular levels follow membrane diffusion with direction-dependent
    rates: influx when the external level exceeds the internal one, efflux
    otherwise.
    """
    s = np.asarray(s, dtype=float)
    x1, x2, x3, x4, v1, v2 = s
    u1, u2 = u

    relief_atc = 1.0 / (1.0 + (abs(v1) / p.theta_aTc) ** p.eta_aTc)
    relief_iptg = 1.0 / (1.0 + (abs(v2) / p.theta_IPTG) ** p.eta_IPTG)
    h_laci = _repression(x4 / p.theta_TetR, relief_atc, p.eta_TetR)
    h_tetr = _repression(x3 / p.theta_LacI, relief_iptg, p.eta_LacI)

    dv1 = (p.k_in_aTc if u1 > v1 else p.k_out_aTc) * (u1 - v1)
    dv2 = (p.k_in_IPTG if u2 > v2 else p.k_out_IPTG) * (u2 - v2)

    return np.array(
        [
            p.km0_L + p.km_L * h_laci - p.gm_L * x1,
            p.km0_T + p.km_T * h_tetr - p.gm_T * x2,
            p.kp_L * x1 - p.gp_L * x3,
            p.kp_T * x2 - p.gp_T * x4,
            dv1,
            dv2,
        ]
    )


def inducer_activity(u, p: ModelParams) -> tuple[float, float]:
    """Map raw inducer concentrations (a.u.) to the reduced model's dimensionless drive.

    The reduced model folds each inducer's sequestration Hill curve into a
    single saturating term; its argument is the threshold-normalized
    concentration raised to the corresponding Hill exponent. With this
    mapping the reduced production terms coincide with the quasi-steady-state
    limit of the full model.
    """
    u1, u2 = u
    if u1 < 0 or u2 < 0:
        raise ValueError(f"inducer concentrations must be >= 0, got ({u1!r}, {u2!r})")
    return (u1 / p.theta_aTc) ** p.eta_aTc, (u2 / p.theta_IPTG) ** p.eta_IPTG


def reduced_rhs(z, v, c: ReducedCoeffs, p: ModelParams) -> np.ndarray:
    """Derivative of the reduced state per unit dimensionless time ``t'``.

    ``v = (v1, v2)`` is the dimensionless inducer drive (see
    :func:`inducer_activity`); each component weakens the opposing
    repression through a factor ``1 / (1 + v)**eta``.
    """
    z = np.asarray(z, dtype=float)
    z1, z2 = z
    v1, v2 = v
    f_atc = 1.0 / (1.0 + v1) ** p.eta_TetR
    f_iptg = 1.0 / (1.0 + v2) ** p.eta_LacI
    return np.array(
        [
            c.k0_1 + c.k_1 / (1.0 + z2 * z2 * f_atc) - z1,
            c.k0_2 + c.k_2 / (1.0 + z1 * z1 * f_iptg) - z2,
        ]
    )


def full_to_reduced(s, p: ModelParams) -> np.ndarray:
    """Project a full state onto the reduced coordinates (threshold-normalized proteins)."""
    s = np.asarray(s, dtype=float)
    return np.array([s[2] / p.theta_LacI, s[3] / p.theta_TetR])


def reduced_to_full_equilibrium(z, p: ModelParams) -> np.ndarray:
    """Full-model state consistent with reduced state ``z``: proteins from the
    variable change, mRNAs at their quasi-steady-state levels, no internal inducers."""
    z1, z2 = z
    x3 = z1 * p.theta_LacI
    x4 = z2 * p.theta_TetR
    x1 = p.gp_L * x3 / p.kp_L
    x2 = p.gp_T * x4 / p.kp_T
    return np.array([x1, x2, x3, x4, 0.0, 0.0])
