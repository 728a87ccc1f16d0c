import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import toggleql as tq
from toggleql.stochastic import N_REACTIONS, STOICHIOMETRY, em_step, propensities


class ZeroNoise:
    """Stands in for a Generator to force all Wiener increments to zero."""

    def standard_normal(self, n):
        return np.zeros(n)


def test_stoichiometry_shape_and_signs():
    assert STOICHIOMETRY.shape == (4, 8)
    assert np.array_equal(STOICHIOMETRY[:, :4], np.eye(4, dtype=np.int64))
    assert np.array_equal(STOICHIOMETRY[:, 4:], -np.eye(4, dtype=np.int64))


def test_propensities_at_origin(params):
    a = propensities(np.zeros(6), params)
    assert a[0] == pytest.approx(8.332, abs=1e-12)
    assert a[1] == pytest.approx(2.179, abs=1e-12)
    assert np.all(a[2:] == 0.0)


def test_propensities_linear_terms(params):
    s = np.array([10.0, 0, 0, 0, 0, 0])
    a = propensities(s, params)
    assert a[2] == pytest.approx(9.726, rel=1e-12)   # translation of x1
    assert a[4] == pytest.approx(1.386, rel=1e-12)   # degradation of x1


def test_propensities_reject_negative_state(params):
    with pytest.raises(ValueError):
        propensities(np.array([-1.0, 0, 0, 0, 0, 0]), params)


def test_drift_matches_deterministic_rhs(params):
    # S @ a reproduces the deterministic derivative of the biochemical states
    rng = np.random.default_rng(3)
    for _ in range(50):
        s = rng.uniform(0, 100, size=6) * np.array([1, 1, 10, 10, 0.3, 0.003])
        u = (rng.uniform(0, 35), rng.uniform(0, 0.35))
        drift = STOICHIOMETRY @ propensities(s, params)
        assert np.allclose(drift, tq.full_rhs(s, u, params)[:4], rtol=1e-12, atol=1e-12)


def test_zero_noise_step_equals_explicit_euler(params):
    s = np.array([5.0, 2.0, 400.0, 150.0, 3.0, 0.1])
    u = (10.0, 0.2)
    dt = 0.1
    stepped = em_step(s, u, dt, ZeroNoise(), params)
    euler = s + dt * tq.full_rhs(s, u, params)
    assert np.allclose(stepped, euler, rtol=0, atol=1e-14)


def test_zero_noise_step_from_origin(params):
    out = em_step(np.zeros(6), (0.0, 0.0), 0.1, ZeroNoise(), params)
    assert out[0] == pytest.approx(0.8332, abs=1e-12)
    assert out[1] == pytest.approx(0.2179, abs=1e-12)
    assert np.all(out[2:] == 0.0)


def test_dt_must_be_positive(params):
    with pytest.raises(ValueError):
        em_step(np.zeros(6), (0, 0), 0.0, np.random.default_rng(0), params)


def test_seeded_reproducibility(params):
    s = np.array([10.0, 1.0, 700.0, 280.0, 5.0, 0.2])
    u = (20.0, 0.1)

    def run(seed):
        rng = np.random.default_rng(seed)
        x = s.copy()
        for _ in range(500):
            x = em_step(x, u, 0.1, rng, params)
        return x

    assert np.array_equal(run(11), run(11))
    assert not np.array_equal(run(11), run(12))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31), dt=st.floats(min_value=0.5, max_value=20.0))
def test_clamping_never_negative(seed, dt):
    # large steps force negative excursions that must be clamped to zero
    p = tq.ModelParams()
    rng = np.random.default_rng(seed)
    x = np.array([0.5, 0.2, 2.0, 1.0, 0.05, 0.01])
    for _ in range(20):
        x = em_step(x, (1.0, 0.01), dt, rng, p)
        assert np.all(x >= 0.0)


def test_ensemble_mean_matches_euler_step(params):
    # Monte-Carlo oracle: the one-step ensemble mean equals the deterministic
    # Euler step within three standard errors
    s = np.array([12.0, 2.0, 750.0, 300.0, 20.0, 0.2])
    u = (10.0, 0.3)
    dt = 0.1
    n = 20000
    rng = np.random.default_rng(2024)
    samples = np.empty((n, 4))
    for i in range(n):
        samples[i] = em_step(s, u, dt, rng, params)[:4]
    euler = (s + dt * tq.full_rhs(s, u, params))[:4]
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(mean - euler) <= 3.0 * se + 1e-12)


def test_one_step_covariance_matches_diffusion(params):
    # increment covariance ~ S diag(a) S^T dt at a fixed interior state
    s = np.array([12.0, 2.0, 750.0, 300.0, 20.0, 0.2])
    u = (10.0, 0.3)
    dt = 0.1
    n = 20000
    rng = np.random.default_rng(99)
    inc = np.empty((n, 4))
    for i in range(n):
        inc[i] = em_step(s, u, dt, rng, params)[:4] - s[:4]
    a = propensities(s, params)
    cov_true = (STOICHIOMETRY * a) @ STOICHIOMETRY.T * dt
    cov_est = np.cov(inc.T)
    scale = np.sqrt(np.outer(np.diag(cov_true), np.diag(cov_true)))
    assert np.all(np.abs(cov_est - cov_true) <= 0.05 * scale + 1e-12)
