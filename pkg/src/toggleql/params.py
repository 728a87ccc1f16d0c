"""Model constants, derived coefficients and experiment configuration.

All rate constants describe the two-repressor (LacI/TetR) toggle switch
circuit. Times are in minutes, protein and inducer concentrations in the
calibration's arbitrary units (a.u.), mRNA in mRNA units.

Configuration files use a flat ``key = value`` text format; see
``docs/file_formats.md`` for the full key list. Every key is optional and
falls back to the built-in defaults below.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass
from pathlib import Path

SENSING_INTERVAL_MIN = 5.0  # fastest allowed state sampling (phototoxicity limit)
SEED_ENV_VAR = "TOGGLEQL_SEED"


class ConfigError(ValueError):
    """Raised for unparseable config files or invariant violations."""


@dataclass(frozen=True)
class ModelParams:
    """Rate constants of the full toggle-switch cell model.

    Immutable after construction; safe to share across threads/processes.
    """

    km0_L: float = 3.20e-2   # basal transcription, mRNA/min
    km0_T: float = 1.19e-1
    km_L: float = 8.30       # max transcription, mRNA/min
    km_T: float = 2.06
    kp_L: float = 9.726e-1   # translation, a.u./(mRNA min)
    kp_T: float = 9.726e-1
    gm_L: float = 1.386e-1   # mRNA degradation, 1/min
    gm_T: float = 1.386e-1
    gp_L: float = 1.65e-2    # protein degradation, 1/min
    gp_T: float = 1.65e-2
    theta_LacI: float = 31.94
    theta_TetR: float = 30.00
    theta_aTc: float = 11.65
    theta_IPTG: float = 9.06e-2
    eta_LacI: float = 2.00
    eta_TetR: float = 2.00
    eta_aTc: float = 2.00
    eta_IPTG: float = 2.00
    k_in_aTc: float = 2.75e-2   # membrane diffusion, 1/min
    k_out_aTc: float = 2.00e-2
    k_in_IPTG: float = 1.62e-1
    k_out_IPTG: float = 1.11e-1

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"model parameter {f.name} must be a positive finite number, got {v!r}")
        if self.gp_L != self.gp_T:
            # the reduced model's time scaling uses a single protein degradation rate
            raise ConfigError(
                f"gp_L ({self.gp_L!r}) and gp_T ({self.gp_T!r}) must be equal: "
                "the reduced model assumes one shared protein degradation rate"
            )


@dataclass(frozen=True)
class ReducedCoeffs:
    """Dimensionless production coefficients of the reduced two-state model."""

    k0_1: float
    k0_2: float
    k_1: float
    k_2: float
    gp: float  # 1/min, converts physical time to dimensionless time t' = gp * t

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"reduced coefficient {f.name} must be positive, got {v!r}")


def derive_reduced_coeffs(p: ModelParams) -> ReducedCoeffs:
    """Collapse the full model's rates into the reduced model's coefficients.

    Each axis gets a basal and a maximal dimensionless production level,
    obtained from the quasi-steady-state elimination of the mRNA stage and
    normalization by the repression thresholds.
    """
    if p.gp_L != p.gp_T:
        raise ConfigError("gp_L and gp_T must be equal to derive reduced coefficients")
    gp = p.gp_L
    return ReducedCoeffs(
        k0_1=(p.km0_L * p.kp_L) / (p.gm_L * p.theta_LacI * gp),
        k0_2=(p.km0_T * p.kp_T) / (p.gm_T * p.theta_TetR * gp),
        k_1=(p.km_L * p.kp_L) / (p.gm_L * p.theta_LacI * gp),
        k_2=(p.km_T * p.kp_T) / (p.gm_T * p.theta_TetR * gp),
        gp=gp,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Training/validation protocol settings (targets, horizons, learning rates)."""

    z_ref: tuple[float, float] = (23.48, 10.00)  # dimensionless regulation target
    z0: tuple[float, float] = (20.68, 2.11)      # training initial condition
    u1_max: float = 35.0    # aTc reservoir level, a.u.
    u2_max: float = 0.35    # IPTG reservoir level, a.u.
    T_horizon: float = 4320.0     # min (72 h)
    control_period: float = 15.0  # min between input updates
    n_episodes: int = 10000
    n_trials: int = 10
    alpha: float = 0.8
    epsilon: float = 0.1
    gamma: float = 0.9
    rng_seed: int = 12345

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha!r}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigError(f"epsilon must be in [0, 1], got {self.epsilon!r}")
        if not (0.0 <= self.gamma < 1.0):
            raise ConfigError(f"gamma must be in [0, 1), got {self.gamma!r}")
        if self.control_period <= 0 or not _is_multiple(self.control_period, SENSING_INTERVAL_MIN):
            raise ConfigError(
                f"control_period must be a positive multiple of the {SENSING_INTERVAL_MIN:g} min "
                f"sensing interval, got {self.control_period!r}"
            )
        if self.T_horizon <= 0 or not _is_multiple(self.T_horizon, self.control_period):
            raise ConfigError(
                f"T_horizon must be a positive multiple of control_period, got {self.T_horizon!r}"
            )
        for name in ("u1_max", "u2_max"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("z_ref", "z0"):
            v = getattr(self, name)
            if len(v) != 2:
                raise ConfigError(f"{name} must have exactly two components, got {v!r}")
            lo = 0.0 if name == "z0" else None
            for c in v:
                if not math.isfinite(c) or (c <= 0 if lo is None else c < lo):
                    raise ConfigError(f"{name} components must be positive, got {v!r}")
        for name in ("n_episodes", "n_trials"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.rng_seed, int) or self.rng_seed < 0:
            raise ConfigError(f"rng_seed must be a non-negative integer, got {self.rng_seed!r}")

    @property
    def steps_per_episode(self) -> int:
        return round(self.T_horizon / self.control_period)


def _is_multiple(value: float, base: float, rel_tol: float = 1e-9) -> bool:
    ratio = value / base
    return abs(ratio - round(ratio)) <= rel_tol * max(1.0, abs(ratio)) and round(ratio) >= 1


_VECTOR_KEYS = ("z_ref", "z0")
_INT_KEYS = ("n_episodes", "n_trials", "rng_seed")
_MODEL_KEYS = tuple(f.name for f in dataclasses.fields(ModelParams))
_EXPERIMENT_KEYS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _VECTOR_KEYS:
            parts = [s for s in raw.split(",") if s.strip()]
            if len(parts) != 2:
                raise ValueError("expected two comma-separated numbers")
            return (float(parts[0]), float(parts[1]))
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for key {key!r}: {raw!r} ({exc})") from None


def load_config(path: str | Path) -> tuple[ModelParams, ExperimentConfig]:
    """Read a key-value config file; omitted keys take the built-in defaults.

    The environment variable ``TOGGLEQL_SEED`` (if set) overrides ``rng_seed``
    regardless of the file content.
    """
    path = Path(path)
    model_kw: dict = {}
    exp_kw: dict = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key in _MODEL_KEYS:
            model_kw[key] = _parse_value(key, raw)
        elif key in _EXPERIMENT_KEYS:
            exp_kw[key] = _parse_value(key, raw)
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")

    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            exp_kw["rng_seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from None

    return ModelParams(**model_kw), ExperimentConfig(**exp_kw)


def save_config(path: str | Path, params: ModelParams, cfg: ExperimentConfig) -> None:
    """Write every key at full precision so a reload reproduces identical values."""
    lines = ["# toggle switch model parameters"]
    for f in dataclasses.fields(params):
        lines.append(f"{f.name} = {getattr(params, f.name)!r}")
    lines.append("")
    lines.append("# experiment configuration")
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name in _VECTOR_KEYS:
            lines.append(f"{f.name} = {v[0]!r}, {v[1]!r}")
        else:
            lines.append(f"{f.name} = {v!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def config_as_dict(params: ModelParams, cfg: ExperimentConfig) -> dict:
    """Flat snapshot of all keys, e.g. for run manifests."""
    out = {f.name: getattr(params, f.name) for f in dataclasses.fields(params)}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = list(v) if f.name in _VECTOR_KEYS else v
    return out
