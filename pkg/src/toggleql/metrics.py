"""Control-performance metrics: windowed moving average, relative error norm,
and the ISE / ITAE integrals used for benchmarking.

The error signal is built from moving averages of the two controlled
variables over a window ``t_w`` (default 240 min), so both integrals start
at ``t0 = t_w``, the first instant where the average is defined. All
quadrature is trapezoidal on the sampled grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import EpisodeTrace
from .params import ExperimentConfig, ModelParams

DEFAULT_WINDOW_MIN = 240.0

# Published benchmark values (ISE, ITAE) for the 72 h protocol; the MPC and
# PI-PWM controllers are reference constants only and are never regenerated.
PAPER_TABLE2 = {
    "deterministic": {
        "QL_quasi_steady_state": (113.23, 1.51e6),
        "QL_complete_model": (767.04, 3.96e6),
        "MPC": (47.58, 0.81e6),
        "PI_PWM": (876.71, 2.07e6),
    },
    "stochastic": {
        "QL_quasi_steady_state": (116.86, 1.53e6),
        "QL_complete_model": (794.64, 4.07e6),
        "MPC": (178.50, 1.98e6),
        "PI_PWM": (830.52, 2.07e6),
    },
}


@dataclass(eq=False)
class MetricsReport:
    """ISE/ITAE of one experiment plus the moving-average error series behind them."""

    ise: float
    itae: float
    t_w: float
    t0: float
    horizon: float
    reference: tuple[float, float]
    times: np.ndarray   # instants where the windowed error is defined (t >= t_w)
    error: np.ndarray   # windowed relative error norm at those instants
    model: str = ""

    def __post_init__(self):
        if self.ise < 0 or self.itae < 0:
            raise ValueError("ISE and ITAE must be non-negative")
        if self.t0 != self.t_w:
            raise ValueError(f"metrics start at the window width: t0={self.t0!r} != t_w={self.t_w!r}")


def _sample_period(times: np.ndarray) -> float:
    diffs = np.diff(times)
    if diffs.size == 0:
        raise ValueError("series must contain at least two samples")
    h = diffs[0]
    if not np.allclose(diffs, h, rtol=1e-9, atol=1e-12):
        raise ValueError("series must be uniformly sampled")
    return float(h)


def moving_average(times, values, t_w: float) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoidal moving average over a trailing window of width ``t_w``.

    Defined for t >= times[0] + t_w; returns (instants, averaged values).
    ``t_w`` must be a positive multiple of the sampling period.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise ValueError("times and values must have identical shapes")
    h = _sample_period(times)
    ratio = t_w / h
    w = round(ratio)
    if w < 1 or abs(ratio - w) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"t_w={t_w!r} must be a positive multiple of the sample period {h!r}")
    if values.size <= w:
        raise ValueError(
            f"series spans {times[-1] - times[0]!r} min, shorter than the window {t_w!r}"
        )
    # trapezoid weights: half on the window's first and last sample
    csum = np.concatenate([[0.0], np.cumsum(values)])
    inner = csum[w + 1 :] - csum[: values.size - w]  # sums of w+1 consecutive samples
    avg = (inner - 0.5 * values[: values.size - w] - 0.5 * values[w:]) * (h / t_w)
    return times[w:], avg


def error_norm(x3_avg, x4_avg, reference) -> np.ndarray:
    """Euclidean norm of the two relative regulation errors."""
    r3, r4 = float(reference[0]), float(reference[1])
    if r3 <= 0 or r4 <= 0:
        raise ValueError(f"reference components must be positive, got {reference!r}")
    e3 = (np.asarray(x3_avg, dtype=float) - r3) / r3
    e4 = (np.asarray(x4_avg, dtype=float) - r4) / r4
    return np.sqrt(e3 * e3 + e4 * e4)


def _check_range(times: np.ndarray, t0: float, T: float) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    mask = (times >= t0 - 1e-9) & (times <= T + 1e-9)
    if np.count_nonzero(mask) < 2:
        raise ValueError(f"empty integration range [{t0!r}, {T!r}] for the sampled error series")
    return mask


def compute_ise(times, err, t0: float, T: float) -> float:
    """Integral of the squared error over [t0, T] (trapezoidal)."""
    mask = _check_range(times, t0, T)
    t = np.asarray(times, dtype=float)[mask]
    e = np.asarray(err, dtype=float)[mask]
    return float(np.trapezoid(e * e, t))


def compute_itae(times, err, t0: float, T: float) -> float:
    """Integral of time-weighted absolute error over [t0, T] (trapezoidal)."""
    mask = _check_range(times, t0, T)
    t = np.asarray(times, dtype=float)[mask]
    e = np.asarray(err, dtype=float)[mask]
    return float(np.trapezoid(t * np.abs(e), t))


def trace_reference(model: str, params: ModelParams, cfg: ExperimentConfig) -> tuple[float, float]:
    """Regulation reference in the trace's own units: the dimensionless target
    for the reduced model, the protein-space target for the full models."""
    if model == "reduced":
        return (float(cfg.z_ref[0]), float(cfg.z_ref[1]))
    return (cfg.z_ref[0] * params.theta_LacI, cfg.z_ref[1] * params.theta_TetR)


def compute_metrics(
    trace: EpisodeTrace,
    params: ModelParams,
    cfg: ExperimentConfig,
    t_w: float = DEFAULT_WINDOW_MIN,
) -> MetricsReport:
    """ISE/ITAE of a closed-loop trace against its regulation reference.

    Relative errors make the reduced (dimensionless) and full (protein a.u.)
    cases directly comparable.
    """
    ref = trace_reference(trace.model, params, cfg)
    if trace.model == "reduced":
        a, b = trace.column("z1"), trace.column("z2")
    else:
        a, b = trace.column("x3"), trace.column("x4")
    ma_times, a_avg = moving_average(trace.times, a, t_w)
    _, b_avg = moving_average(trace.times, b, t_w)
    err = error_norm(a_avg, b_avg, ref)
    T = float(trace.times[-1])
    t0 = float(ma_times[0])
    return MetricsReport(
        ise=compute_ise(ma_times, err, t0, T),
        itae=compute_itae(ma_times, err, t0, T),
        t_w=t_w,
        t0=t0,
        horizon=T,
        reference=ref,
        times=ma_times,
        error=err,
        model=trace.model,
    )


def write_error_series_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,error\n")
        for t, e in zip(report.times, report.error):
            fh.write(f"{float(t)!r},{float(e)!r}\n")


def paper_baseline(model: str, column: str) -> tuple[float, float]:
    """(ISE, ITAE) reference constants for a Table-2 column; model is the
    experiment regime ('deterministic' or 'stochastic')."""
    return PAPER_TABLE2[model][column]
