"""Q-learning control of a genetic toggle switch.

Train a tabular policy on a reduced dimensionless model of the LacI/TetR
toggle switch, then validate the frozen policy in closed loop against the
full deterministic model and its chemical-Langevin counterpart, reporting
ISE/ITAE regulation metrics.
"""

__version__ = "0.1.0"

from .agent import (
    ActionSpec,
    PolicyTable,
    ReducedToggleEnv,
    StateGrid,
    action_to_inputs,
    discretize,
    load_policy,
    q_update,
    reward,
    save_policy,
    select_action,
    train,
)
from .control import (
    CampaignResult,
    EpisodeTrace,
    initial_full_state,
    run_campaign,
    run_closed_loop,
)
from .dynamics import (
    FullState,
    InputPair,
    ReducedState,
    full_rhs,
    full_to_reduced,
    hill_aTc,
    hill_IPTG,
    hill_LacI,
    hill_TetR,
    inducer_activity,
    reduced_rhs,
)
from .integrate import IntegratorSpec, integrate_hold
from .metrics import (
    MetricsReport,
    PAPER_TABLE2,
    compute_ise,
    compute_itae,
    compute_metrics,
    error_norm,
    moving_average,
)
from .params import (
    ConfigError,
    ExperimentConfig,
    ModelParams,
    ReducedCoeffs,
    derive_reduced_coeffs,
    load_config,
    save_config,
)
from .stochastic import STOICHIOMETRY, em_step, propensities

__all__ = [
    "ActionSpec",
    "CampaignResult",
    "ConfigError",
    "EpisodeTrace",
    "ExperimentConfig",
    "FullState",
    "InputPair",
    "IntegratorSpec",
    "MetricsReport",
    "ModelParams",
    "PAPER_TABLE2",
    "PolicyTable",
    "ReducedCoeffs",
    "ReducedState",
    "ReducedToggleEnv",
    "STOICHIOMETRY",
    "StateGrid",
    "action_to_inputs",
    "compute_ise",
    "compute_itae",
    "compute_metrics",
    "derive_reduced_coeffs",
    "discretize",
    "em_step",
    "error_norm",
    "full_rhs",
    "full_to_reduced",
    "hill_IPTG",
    "hill_LacI",
    "hill_TetR",
    "hill_aTc",
    "inducer_activity",
    "initial_full_state",
    "integrate_hold",
    "load_config",
    "load_policy",
    "moving_average",
    "propensities",
    "q_update",
    "reduced_rhs",
    "reward",
    "run_campaign",
    "run_closed_loop",
    "save_config",
    "save_policy",
    "select_action",
    "train",
]
