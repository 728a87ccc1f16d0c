import dataclasses

import numpy as np
import pytest

import toggleql as tq


@pytest.fixture(scope="session")
def params():
    return tq.ModelParams()


@pytest.fixture(scope="session")
def cfg():
    return tq.ExperimentConfig()


@pytest.fixture(scope="session")
def coeffs(params):
    return tq.derive_reduced_coeffs(params)


@pytest.fixture(scope="session")
def grid(cfg):
    return tq.StateGrid.build(cfg.z_ref)


@pytest.fixture(scope="session")
def actions(cfg):
    return tq.ActionSpec(u1_max=cfg.u1_max, u2_max=cfg.u2_max)


# Desk-scale training shared by the control/acceptance tests. Small enough to
# train in well under a minute, large enough to regulate the reduced model.
DESK_EPISODES = 3000
DESK_TRIALS = 3
DESK_SEED = 12345


@pytest.fixture(scope="session")
def desk_cfg(cfg):
    return dataclasses.replace(
        cfg, n_episodes=DESK_EPISODES, n_trials=DESK_TRIALS, rng_seed=DESK_SEED
    )


@pytest.fixture(scope="session")
def desk_policy(params, desk_cfg):
    env = tq.ReducedToggleEnv(params, desk_cfg)
    policy, _ = tq.train(env, desk_cfg, jobs=DESK_TRIALS)
    return policy


@pytest.fixture(scope="session")
def tiny_policy(params, cfg, grid, actions):
    """Hand-built policy table for harness tests that do not need a trained agent."""
    q = np.zeros((grid.n_states, actions.n))
    return tq.PolicyTable(
        q=q,
        grid=grid,
        actions=actions,
        z_ref=cfg.z_ref,
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        gamma=cfg.gamma,
        seed=0,
        n_episodes=0,
        n_trials=0,
        trial_index=0,
        max_abs_reward=0.0,
    )
