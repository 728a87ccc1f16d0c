"""Closed-loop evaluation of a frozen policy on the reduced, full
deterministic, or full stochastic model.

Timing protocol: the state is observed and the input updated every
``control_period`` minutes (default 15); the trace is logged every
``log_interval`` minutes (default 5, the fastest allowed sensing rate).
Inputs are piecewise constant over each control period.

Evaluation is pure greedy (epsilon = 0): the Q-maximizing action, with exact
ties broken uniformly at random from a seeded stream. Ties occur only in
cells training never updated (their rows are still all zeros), where any
fixed preference would be arbitrary. For the deterministic model kinds the
tie stream is derived from the policy's own seed, so runs stay bit
reproducible and every realization of a deterministic campaign is identical.

Realization ``i`` of a stochastic campaign draws noise and tie-breaks from
``default_rng(SeedSequence(entropy=seed, spawn_key=(1, i)))``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agent import (
    ActionSpec,
    PolicyTable,
    StateGrid,
    action_to_inputs,
    discretize,
    reward,
    select_action,
)
from .dynamics import (
    full_rhs,
    full_to_reduced,
    inducer_activity,
    reduced_rhs,
    reduced_to_full_equilibrium,
)
from .integrate import IntegratorSpec, integrate_hold, n_steps
from .params import ExperimentConfig, ModelParams, derive_reduced_coeffs
from .stochastic import em_step

MODEL_KINDS = ("reduced", "deterministic", "stochastic")
VALIDATION_STREAM = 1  # SeedSequence spawn_key namespace for validation realizations
TIE_STREAM = 2         # namespace for greedy tie-breaks in deterministic runs

FULL_COLUMNS = ("x1", "x2", "x3", "x4", "v1", "v2")
REDUCED_COLUMNS = ("z1", "z2")


@dataclass(eq=False)
class EpisodeTrace:
    """Sampled closed-loop run: states, applied inputs and instantaneous reward."""

    model: str
    times: np.ndarray    # min, strictly increasing
    states: np.ndarray   # (N, 6) full models, (N, 2) reduced
    phi: np.ndarray      # input level held at each sample time
    u1: np.ndarray
    u2: np.ndarray
    reward: np.ndarray   # squared-relative-error reward of the sampled state
    seed: int | None = None
    policy_tag: str = ""

    @property
    def state_columns(self) -> tuple[str, ...]:
        return REDUCED_COLUMNS if self.model == "reduced" else FULL_COLUMNS

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.state_columns.index(name)]


@dataclass(eq=False)
class CampaignResult:
    """Independent realizations plus pointwise summary statistics."""

    model: str
    traces: list
    times: np.ndarray
    state_mean: np.ndarray
    state_std: np.ndarray
    phi_mean: np.ndarray
    phi_std: np.ndarray


def initial_full_state(params: ModelParams, z0) -> np.ndarray:
    """Default validation start: proteins matching the training start point,
    mRNAs at quasi-steady state, no intracellular inducers."""
    return reduced_to_full_equilibrium(z0, params)


def realization_rng(master_seed: int, index: int) -> np.random.Generator:
    """Documented stream-splitting rule for validation realizations."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(VALIDATION_STREAM, index))
    )


def tie_rng(policy_seed: int) -> np.random.Generator:
    """Tie-break stream for runs of the deterministic model kinds; derived from
    the policy seed so identical runs stay identical."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=policy_seed, spawn_key=(TIE_STREAM, 0))
    )


def run_closed_loop(
    model: str,
    policy: PolicyTable,
    x0,
    T: float,
    params: ModelParams,
    cfg: ExperimentConfig,
    *,
    rng: np.random.Generator | None = None,
    dt: float = 0.1,
    log_interval: float = 5.0,
    seed_label: int | None = None,
) -> EpisodeTrace:
    """Drive one episode of the chosen model under the frozen greedy policy.

    ``x0`` is a length-6 full state for the full models or a length-2 reduced
    state for the reduced model. ``T`` must be a multiple of the control
    period, which in turn must be a multiple of ``log_interval``.
    """
    if model not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {model!r}, expected one of {MODEL_KINDS}")
    if model == "stochastic" and rng is None:
        raise ValueError("the stochastic model requires an rng")
    if rng is None:
        rng = tie_rng(policy.seed)

    period = cfg.control_period
    n_periods = n_steps(T, period)
    blocks_per_period = n_steps(period, log_interval)

    grid = StateGrid.build(cfg.z_ref)
    actions = ActionSpec(u1_max=cfg.u1_max, u2_max=cfg.u2_max)
    policy.check_compatible(grid, actions, cfg.z_ref)

    coeffs = derive_reduced_coeffs(params)
    if model == "reduced":
        state = np.asarray(x0, dtype=float).copy()
        if state.shape != (2,):
            raise ValueError(f"reduced model needs a length-2 initial state, got shape {state.shape}")
        spec = IntegratorSpec("rk4", coeffs.gp * dt)
        block_hold = coeffs.gp * log_interval
    else:
        state = np.asarray(x0, dtype=float).copy()
        if state.shape != (6,):
            raise ValueError(f"full models need a length-6 initial state, got shape {state.shape}")
        spec = IntegratorSpec("rk4", dt)
        block_hold = log_interval
    if np.any(state < 0):
        raise ValueError(f"initial state must be non-negative, got {state!r}")
    em_substeps = n_steps(log_interval, dt)

    n_rows = n_periods * blocks_per_period + 1
    times = np.empty(n_rows)
    states = np.empty((n_rows, state.size))
    phis = np.empty(n_rows)
    u1s = np.empty(n_rows)
    u2s = np.empty(n_rows)
    rewards = np.empty(n_rows)

    def observe(s) -> np.ndarray:
        return s if model == "reduced" else full_to_reduced(s, params)

    row = 0
    t = 0.0
    for k in range(n_periods):
        z_obs = observe(state)
        a = select_action(policy.q[discretize(z_obs, grid)], 0.0, rng)
        phi = float(actions.phi_levels[a])
        u = action_to_inputs(phi, actions)

        times[row] = t
        states[row] = state
        phis[row] = phi
        u1s[row], u2s[row] = u
        rewards[row] = reward(z_obs, cfg.z_ref)
        row += 1

        for block in range(blocks_per_period):
            if model == "reduced":
                w = inducer_activity(u, params)
                state = integrate_hold(
                    lambda z: reduced_rhs(z, w, coeffs, params), state, block_hold, spec
                )
            elif model == "deterministic":
                state = integrate_hold(
                    lambda s: full_rhs(s, u, params), state, block_hold, spec
                )
            else:
                for _ in range(em_substeps):
                    state = em_step(state, u, dt, rng, params)
            t += log_interval
            if block < blocks_per_period - 1:  # period-end sample is the next decision row
                times[row] = t
                states[row] = state
                phis[row] = phi
                u1s[row], u2s[row] = u
                rewards[row] = reward(observe(state), cfg.z_ref)
                row += 1

    # trailing sample at t = T, still under the last held input
    times[row] = t
    states[row] = state
    phis[row] = phis[row - 1]
    u1s[row] = u1s[row - 1]
    u2s[row] = u2s[row - 1]
    rewards[row] = reward(observe(state), cfg.z_ref)

    return EpisodeTrace(
        model=model,
        times=times,
        states=states,
        phi=phis,
        u1=u1s,
        u2=u2s,
        reward=rewards,
        seed=seed_label,
        policy_tag=f"seed{policy.seed}-trial{policy.trial_index}",
    )


def _campaign_worker(args):
    model, policy, x0, T, params, cfg, dt, log_interval, master_seed, index = args
    rng = realization_rng(master_seed, index) if model == "stochastic" else None
    return run_closed_loop(
        model, policy, x0, T, params, cfg,
        rng=rng, dt=dt, log_interval=log_interval,
        seed_label=master_seed if model == "stochastic" else None,
    )


def run_campaign(
    model: str,
    policy: PolicyTable,
    n_realizations: int,
    params: ModelParams,
    cfg: ExperimentConfig,
    *,
    x0=None,
    T: float | None = None,
    master_seed: int | None = None,
    dt: float = 0.1,
    log_interval: float = 5.0,
    jobs: int = 1,
) -> CampaignResult:
    """Run independent realizations and aggregate pointwise mean/std.

    Deterministic model kinds produce identical realizations (std is zero);
    stochastic realizations get disjoint seed streams from ``master_seed``
    (defaults to ``cfg.rng_seed``).
    """
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    if x0 is None:
        x0 = np.asarray(cfg.z0, float) if model == "reduced" else initial_full_state(params, cfg.z0)
    T = cfg.T_horizon if T is None else T
    master_seed = cfg.rng_seed if master_seed is None else master_seed

    args = [
        (model, policy, x0, T, params, cfg, dt, log_interval, master_seed, i)
        for i in range(n_realizations)
    ]
    traces: list = [None] * n_realizations
    if jobs > 1 and n_realizations > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, n_realizations)) as pool:
            futures = {pool.submit(_campaign_worker, a): i for i, a in enumerate(args)}
            for fut, i in futures.items():
                traces[i] = fut.result()
    else:
        for i, a in enumerate(args):
            traces[i] = _campaign_worker(a)

    all_states = np.stack([tr.states for tr in traces])
    all_phi = np.stack([tr.phi for tr in traces])
    return CampaignResult(
        model=model,
        traces=traces,
        times=traces[0].times.copy(),
        state_mean=all_states.mean(axis=0),
        state_std=all_states.std(axis=0),
        phi_mean=all_phi.mean(axis=0),
        phi_std=all_phi.std(axis=0),
    )


def write_trace_csv(trace: EpisodeTrace, path) -> None:
    """Column order: t, state columns, phi, u1, u2, reward. Full float precision."""
    cols = ("t",) + trace.state_columns + ("phi", "u1", "u2", "reward")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(trace.times.size):
            vals = [trace.times[i], *trace.states[i], trace.phi[i], trace.u1[i], trace.u2[i], trace.reward[i]]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")


def read_trace_csv(path, model: str) -> EpisodeTrace:
    data = np.genfromtxt(path, delimiter=",", names=True)
    state_cols = REDUCED_COLUMNS if model == "reduced" else FULL_COLUMNS
    states = np.column_stack([data[c] for c in state_cols])
    return EpisodeTrace(
        model=model,
        times=np.atleast_1d(data["t"]),
        states=states,
        phi=np.atleast_1d(data["phi"]),
        u1=np.atleast_1d(data["u1"]),
        u2=np.atleast_1d(data["u2"]),
        reward=np.atleast_1d(data["reward"]),
    )


def write_campaign_summary_csv(campaign: CampaignResult, path) -> None:
    """Pointwise mean and std of every state column and of phi."""
    state_cols = REDUCED_COLUMNS if campaign.model == "reduced" else FULL_COLUMNS
    header = ["t"]
    header += [f"mean_{c}" for c in state_cols] + [f"std_{c}" for c in state_cols]
    header += ["mean_phi", "std_phi"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(campaign.times.size):
            vals = [campaign.times[i]]
            vals += list(campaign.state_mean[i]) + list(campaign.state_std[i])
            vals += [campaign.phi_mean[i], campaign.phi_std[i]]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")


def export_campaign(campaign: CampaignResult, out_dir) -> list[Path]:
    """One CSV per realization plus the summary file; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, tr in enumerate(campaign.traces):
        p = out / f"trace_{i:03d}.csv"
        write_trace_csv(tr, p)
        written.append(p)
    summary = out / "summary.csv"
    write_campaign_summary_csv(campaign, summary)
    written.append(summary)
    return written
