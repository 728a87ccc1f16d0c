"""Tabular Q-learning over a non-uniform state grid with an 11-level action set.

The scalar action ``phi`` splits the two inducer reservoirs as a convex
combination, ``u1 = phi * u1_max`` and ``u2 = (1 - phi) * u2_max``, so the
hardware mixing constraint holds by construction. Training runs on the
reduced dimensionless model with the inducers assumed to equilibrate
instantly (u identical to the intracellular level); the frozen table is then
evaluated on the richer models by `control.run_closed_loop`.

Trials are independent: trial ``i`` draws from
``default_rng(SeedSequence(entropy=seed, spawn_key=(0, i)))``, which makes
parallel execution reproducible and order-independent.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import InputPair, inducer_activity, reduced_rhs
from .integrate import IntegratorSpec, integrate_hold, n_steps
from .params import ExperimentConfig, ModelParams, derive_reduced_coeffs

N_ACTIONS = 11
TRAIN_STREAM = 0  # SeedSequence spawn_key namespace for training trials

POLICY_MAGIC = "TOGGLEQL-POLICY"
POLICY_VERSION = 1


class PolicyIOError(ValueError):
    """Raised for unreadable, corrupted or wrong-version policy files."""


class PolicyMismatchError(ValueError):
    """Raised when a policy's grid or action metadata disagrees with the configuration."""


@dataclass(frozen=True, eq=False)
class ActionSpec:
    """The 11 equally spaced phi levels and the reservoir maxima they scale."""

    u1_max: float
    u2_max: float
    phi_levels: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 1.0, N_ACTIONS))

    def __post_init__(self):
        levels = np.asarray(self.phi_levels, dtype=float)
        object.__setattr__(self, "phi_levels", levels)
        expected = np.linspace(0.0, 1.0, N_ACTIONS)
        if levels.shape != (N_ACTIONS,) or not np.allclose(levels, expected, rtol=0, atol=1e-12):
            raise ValueError(f"phi_levels must be the {N_ACTIONS} equally spaced values in [0, 1]")
        if self.u1_max <= 0 or self.u2_max <= 0:
            raise ValueError("reservoir maxima must be positive")

    @property
    def n(self) -> int:
        return self.phi_levels.size


def action_to_inputs(phi: float, spec: ActionSpec) -> InputPair:
    """Inducer pair for an on-grid phi; the convex split guarantees
    u1/u1_max + u2/u2_max == 1."""
    matches = np.nonzero(np.abs(spec.phi_levels - phi) <= 1e-12)[0]
    if matches.size == 0:
        raise ValueError(f"phi={phi!r} is not one of the action levels {spec.phi_levels.tolist()}")
    level = float(spec.phi_levels[matches[0]])
    return InputPair(level * spec.u1_max, (1.0 - level) * spec.u2_max)


@dataclass(frozen=True, eq=False)
class StateGrid:
    """Per-axis cell edges: fine resolution near the target, coarse elsewhere.

    Cells are half-open ``[e_i, e_{i+1})``; points on an interior edge belong
    to the upper cell, points outside the covered range to the boundary cell.
    """

    edges1: np.ndarray
    edges2: np.ndarray

    def __post_init__(self):
        for name in ("edges1", "edges2"):
            e = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, e)
            if e.ndim != 1 or e.size < 2:
                raise ValueError(f"{name} must be a 1-d array with at least two edges")
            if not np.all(np.diff(e) > 0):
                raise ValueError(f"{name} must be strictly increasing")

    @classmethod
    def build(
        cls,
        z_ref,
        lo: float = 0.0,
        hi: float = 150.0,
        coarse_step: float = 1.5,
        fine_step: float = 0.5,
        fine_halfwidth: float = 3.0,
    ) -> "StateGrid":
        """Lay coarse edges lo:coarse_step:hi, then splice in a fine lattice
        anchored at ``z_ref - fine_halfwidth`` on each axis.

        The fine lattice is extended past the window's upper end (at most one
        extra edge per coarse gap) so that every cell containing a window
        point has width <= fine_step.
        """
        return cls(
            edges1=_build_axis(z_ref[0], lo, hi, coarse_step, fine_step, fine_halfwidth),
            edges2=_build_axis(z_ref[1], lo, hi, coarse_step, fine_step, fine_halfwidth),
        )

    @property
    def n_cells1(self) -> int:
        return self.edges1.size - 1

    @property
    def n_cells2(self) -> int:
        return self.edges2.size - 1

    @property
    def n_states(self) -> int:
        return self.n_cells1 * self.n_cells2

    def cell_of(self, z) -> tuple[int, int]:
        return (
            _axis_cell(self.edges1, float(z[0])),
            _axis_cell(self.edges2, float(z[1])),
        )

    def matches(self, other: "StateGrid") -> bool:
        return np.array_equal(self.edges1, other.edges1) and np.array_equal(
            self.edges2, other.edges2
        )


def _build_axis(center, lo, hi, coarse_step, fine_step, fine_halfwidth) -> np.ndarray:
    eps = 1e-9
    n_coarse = round((hi - lo) / coarse_step)
    coarse = np.linspace(lo, hi, n_coarse + 1)
    f_lo = center - fine_halfwidth
    f_hi = center + fine_halfwidth
    if f_lo <= lo or f_hi >= hi:
        raise ValueError("fine window must lie strictly inside the grid range")
    n_fine = round((f_hi - f_lo) / fine_step)
    fine = list(np.linspace(f_lo, f_hi, n_fine + 1))
    kept = coarse[(coarse < f_lo - eps) | (coarse > f_hi + eps)]
    next_above = kept[kept > f_hi][0]
    last = fine[-1]
    while next_above - last > fine_step + eps:
        last = last + fine_step
        fine.append(last)
    edges = np.sort(np.concatenate([kept, np.asarray(fine)]))
    return edges[np.concatenate([[True], np.diff(edges) > eps])]


def _axis_cell(edges: np.ndarray, x: float) -> int:
    i = int(np.searchsorted(edges, x, side="right")) - 1
    return min(max(i, 0), edges.size - 2)


def discretize(z, grid: StateGrid) -> int:
    """Flat index of the grid cell containing the reduced state (out-of-range clamps)."""
    i1, i2 = grid.cell_of(z)
    return i1 * grid.n_cells2 + i2


def reward(z, z_ref) -> float:
    """Negative squared relative distance to the target; 0 exactly on target."""
    zr1, zr2 = float(z_ref[0]), float(z_ref[1])
    if zr1 <= 0 or zr2 <= 0:
        raise ValueError(f"z_ref components must be positive, got {z_ref!r}")
    e1 = (zr1 - float(z[0])) / zr1
    e2 = (zr2 - float(z[1])) / zr2
    return -(e1 * e1 + e2 * e2)


def select_action(q_row, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy action index with uniform random tie-breaking.

    Mirrors `_kernels.choose_action` draw for draw so jitted training and
    this reference implementation consume identical generator streams.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon!r}")
    q_row = np.asarray(q_row, dtype=float)
    n = q_row.size
    if epsilon > 0.0 and rng.random() < epsilon:
        return min(int(rng.random() * n), n - 1)
    best = q_row.max()
    ties = np.nonzero(q_row == best)[0]
    if ties.size == 1:
        return int(ties[0])
    return int(ties[min(int(rng.random() * ties.size), ties.size - 1)])


def q_update(q, s: int, a: int, r: float, s_next: int, alpha: float, gamma: float):
    """One Watkins update of q[s, a] in place; returns q for chaining."""
    q[s, a] = q[s, a] + alpha * (r + gamma * q[s_next].max() - q[s, a])
    return q


class ReducedToggleEnv:
    """Sampled-data training environment on the reduced model.

    One `step` holds the chosen phi for a full control period, assuming the
    inducer levels track the applied concentrations instantly (no membrane
    lag), and returns the continuous next state with its reward.
    """

    def __init__(
        self,
        params: ModelParams,
        cfg: ExperimentConfig,
        integrator: IntegratorSpec | None = None,
    ):
        self.params = params
        self.cfg = cfg
        self.coeffs = derive_reduced_coeffs(params)
        self.actions = ActionSpec(u1_max=cfg.u1_max, u2_max=cfg.u2_max)
        self.integrator = integrator or IntegratorSpec("rk4", self.coeffs.gp * 0.1)
        self.hold_tprime = self.coeffs.gp * cfg.control_period
        self.n_substeps = n_steps(self.hold_tprime, self.integrator.dt)
        self.z = np.asarray(cfg.z0, dtype=float)

    def reset(self) -> np.ndarray:
        self.z = np.asarray(self.cfg.z0, dtype=float)
        return self.z.copy()

    def step(self, phi: float) -> tuple[np.ndarray, float]:
        u = action_to_inputs(phi, self.actions)
        w = inducer_activity(u, self.params)
        self.z = integrate_hold(
            lambda z: reduced_rhs(z, w, self.coeffs, self.params),
            self.z,
            self.hold_tprime,
            self.integrator,
        )
        return self.z.copy(), reward(self.z, self.cfg.z_ref)

    @property
    def steps_per_episode(self) -> int:
        return self.cfg.steps_per_episode

    def relief_levels(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-action repression-relief factors, precomputed for the jitted trainer."""
        f1 = np.empty(self.actions.n)
        f2 = np.empty(self.actions.n)
        for a, phi in enumerate(self.actions.phi_levels):
            w1, w2 = inducer_activity(action_to_inputs(float(phi), self.actions), self.params)
            f1[a] = 1.0 / (1.0 + w1) ** self.params.eta_TetR
            f2[a] = 1.0 / (1.0 + w2) ** self.params.eta_LacI
        return f1, f2


@dataclass(eq=False)
class PolicyTable:
    """Frozen Q table plus everything needed to reuse it: grid, actions,
    hyperparameters and training provenance."""

    q: np.ndarray
    grid: StateGrid
    actions: ActionSpec
    z_ref: tuple[float, float]
    alpha: float
    epsilon: float
    gamma: float
    seed: int
    n_episodes: int
    n_trials: int
    trial_index: int
    max_abs_reward: float

    def __post_init__(self):
        self.q = np.ascontiguousarray(self.q, dtype=np.float64)
        if self.q.shape != (self.grid.n_states, self.actions.n):
            raise ValueError(
                f"Q shape {self.q.shape} does not match grid x actions "
                f"({self.grid.n_states}, {self.actions.n})"
            )
        if not np.all(np.isfinite(self.q)):
            raise ValueError("Q table contains non-finite entries")

    def equals(self, other: "PolicyTable") -> bool:
        return (
            np.array_equal(self.q, other.q)
            and self.grid.matches(other.grid)
            and np.array_equal(self.actions.phi_levels, other.actions.phi_levels)
            and (self.actions.u1_max, self.actions.u2_max)
            == (other.actions.u1_max, other.actions.u2_max)
            and tuple(self.z_ref) == tuple(other.z_ref)
            and (self.alpha, self.epsilon, self.gamma) == (other.alpha, other.epsilon, other.gamma)
            and (self.seed, self.n_episodes, self.n_trials, self.trial_index)
            == (other.seed, other.n_episodes, other.n_trials, other.trial_index)
            and self.max_abs_reward == other.max_abs_reward
        )

    def check_compatible(self, grid: StateGrid, actions: ActionSpec, z_ref) -> None:
        if not self.grid.matches(grid):
            raise PolicyMismatchError("policy state grid does not match the configured grid")
        if not np.array_equal(self.actions.phi_levels, actions.phi_levels) or (
            self.actions.u1_max,
            self.actions.u2_max,
        ) != (actions.u1_max, actions.u2_max):
            raise PolicyMismatchError("policy action set does not match the configuration")
        if tuple(self.z_ref) != (float(z_ref[0]), float(z_ref[1])):
            raise PolicyMismatchError(
                f"policy was trained for z_ref={tuple(self.z_ref)}, configuration has "
                f"{(float(z_ref[0]), float(z_ref[1]))}"
            )


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Documented stream-splitting rule for training trials."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(TRAIN_STREAM, trial_index))
    )


def _train_single_trial(params: ModelParams, cfg: ExperimentConfig, trial_index: int):
    """Run one trial; returns (q, per-episode cumulative rewards, visit counts, max |r|)."""
    env = ReducedToggleEnv(params, cfg)
    grid = StateGrid.build(cfg.z_ref)
    f1_levels, f2_levels = env.relief_levels()
    q = np.zeros((grid.n_states, env.actions.n))
    visits = np.zeros((grid.n_states, env.actions.n), dtype=np.int64)
    rng = trial_rng(cfg.rng_seed, trial_index)
    ep_rewards, max_abs_r = _kernels.train_trial(
        q,
        visits,
        grid.edges1,
        grid.edges2,
        f1_levels,
        f2_levels,
        env.coeffs.k0_1,
        env.coeffs.k0_2,
        env.coeffs.k_1,
        env.coeffs.k_2,
        float(cfg.z0[0]),
        float(cfg.z0[1]),
        float(cfg.z_ref[0]),
        float(cfg.z_ref[1]),
        cfg.n_episodes,
        cfg.steps_per_episode,
        env.n_substeps,
        env.integrator.dt,
        cfg.alpha,
        cfg.gamma,
        cfg.epsilon,
        rng,
    )
    return q, ep_rewards, visits, max_abs_r


def _trial_worker(args):
    params, cfg, i = args
    return _train_single_trial(params, cfg, i)


PLATEAU_WINDOW = 1000


def plateau_window(n_episodes: int) -> int:
    """Final-episode window used to define the converged reward plateau.

    The full protocol uses the last 1000 episodes; short desk-scale runs fall
    back to the last fifth so the window stays clear of the transient.
    """
    return min(PLATEAU_WINDOW, max(1, n_episodes // 5))


def convergence_episode(mean_curve) -> tuple[int | None, float]:
    """First episode whose trial-mean cumulative reward is within 5% of the plateau.

    Returns (episode index or None, plateau value). With non-positive rewards
    "within 5%" means at or above 1.05 times the plateau.
    """
    curve = np.asarray(mean_curve, dtype=float)
    w = plateau_window(curve.size)
    plateau = float(curve[-w:].mean())
    threshold = plateau * 1.05 if plateau <= 0 else plateau * 0.95
    hits = np.nonzero(curve >= threshold)[0]
    return (int(hits[0]) if hits.size else None), plateau


def train(
    env: ReducedToggleEnv,
    cfg: ExperimentConfig | None = None,
    *,
    jobs: int = 1,
) -> tuple[PolicyTable, np.ndarray]:
    """Train `cfg.n_trials` independent tables and keep the best one.

    Returns the selected `PolicyTable` and the (n_trials, n_episodes) array of
    per-episode cumulative rewards. "Best" is the trial with the highest mean
    cumulative reward over the plateau window; ties keep the lowest index.
    """
    cfg = cfg or env.cfg
    results: list = [None] * cfg.n_trials
    if jobs > 1 and cfg.n_trials > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, cfg.n_trials)) as pool:
            futures = {
                pool.submit(_trial_worker, (env.params, cfg, i)): i for i in range(cfg.n_trials)
            }
            for fut, i in futures.items():
                results[i] = fut.result()
    else:
        for i in range(cfg.n_trials):
            results[i] = _train_single_trial(env.params, cfg, i)

    rewards = np.stack([r[1] for r in results])
    w = plateau_window(cfg.n_episodes)
    plateau_means = rewards[:, -w:].mean(axis=1)
    best = int(np.argmax(plateau_means))
    q, _, _, max_abs_r = results[best]

    grid = StateGrid.build(cfg.z_ref)
    policy = PolicyTable(
        q=q,
        grid=grid,
        actions=ActionSpec(u1_max=cfg.u1_max, u2_max=cfg.u2_max),
        z_ref=(float(cfg.z_ref[0]), float(cfg.z_ref[1])),
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        gamma=cfg.gamma,
        seed=cfg.rng_seed,
        n_episodes=cfg.n_episodes,
        n_trials=cfg.n_trials,
        trial_index=best,
        max_abs_reward=float(max_abs_r),
    )
    return policy, rewards


def save_policy(policy: PolicyTable, path) -> None:
    """Write the versioned policy file: magic line, JSON header, then the raw
    little-endian float64 Q matrix (row-major). See docs/file_formats.md."""
    header = {
        "edges1": policy.grid.edges1.tolist(),
        "edges2": policy.grid.edges2.tolist(),
        "phi_levels": policy.actions.phi_levels.tolist(),
        "u1_max": policy.actions.u1_max,
        "u2_max": policy.actions.u2_max,
        "z_ref": list(policy.z_ref),
        "alpha": policy.alpha,
        "epsilon": policy.epsilon,
        "gamma": policy.gamma,
        "seed": policy.seed,
        "n_episodes": policy.n_episodes,
        "n_trials": policy.n_trials,
        "trial_index": policy.trial_index,
        "max_abs_reward": policy.max_abs_reward,
        "q_shape": list(policy.q.shape),
    }
    with open(path, "wb") as fh:
        fh.write(f"{POLICY_MAGIC} {POLICY_VERSION}\n".encode("ascii"))
        fh.write(json.dumps(header).encode("ascii") + b"\n")
        fh.write(np.ascontiguousarray(policy.q, dtype="<f8").tobytes())


def load_policy(path) -> PolicyTable:
    """Inverse of save_policy; load(save(p)) reproduces p exactly."""
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii", errors="replace").strip()
        parts = magic.split()
        if len(parts) != 2 or parts[0] != POLICY_MAGIC:
            raise PolicyIOError(f"not a policy file (bad magic line {magic!r})")
        try:
            version = int(parts[1])
        except ValueError:
            raise PolicyIOError(f"not a policy file (bad version field {parts[1]!r})") from None
        if version != POLICY_VERSION:
            raise PolicyIOError(
                f"unsupported policy format version {version} (expected {POLICY_VERSION})"
            )
        try:
            header = json.loads(fh.readline().decode("ascii"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise PolicyIOError(f"corrupted policy header: {exc}") from None
        try:
            shape = tuple(header["q_shape"])
            grid = StateGrid(
                edges1=np.asarray(header["edges1"], dtype=float),
                edges2=np.asarray(header["edges2"], dtype=float),
            )
            actions = ActionSpec(
                u1_max=header["u1_max"],
                u2_max=header["u2_max"],
                phi_levels=np.asarray(header["phi_levels"], dtype=float),
            )
            blob = fh.read()
            expected = shape[0] * shape[1] * 8
            if len(blob) != expected:
                raise PolicyIOError(
                    f"corrupted policy payload: expected {expected} bytes, found {len(blob)}"
                )
            q = np.frombuffer(blob, dtype="<f8").reshape(shape).astype(np.float64)
            return PolicyTable(
                q=q,
                grid=grid,
                actions=actions,
                z_ref=(float(header["z_ref"][0]), float(header["z_ref"][1])),
                alpha=header["alpha"],
                epsilon=header["epsilon"],
                gamma=header["gamma"],
                seed=header["seed"],
                n_episodes=header["n_episodes"],
                n_trials=header["n_trials"],
                trial_index=header["trial_index"],
                max_abs_reward=header["max_abs_reward"],
            )
        except PolicyIOError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise PolicyIOError(f"corrupted policy file: {exc}") from None
