"""JIT-compiled inner loops for episodic training.

The expressions here mirror, operation for operation, the pure-Python path
(`integrate.integrate_hold` over `dynamics.reduced_rhs`, plus
`agent.select_action` / `agent.q_update`), so a trial run through these
kernels is bit-identical to the reference implementation given the same
`numpy.random.Generator` stream. Tests assert that equivalence; do not
reorder arithmetic here without updating them.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def cell_index(edges, x):
    """Index of the half-open cell [e_i, e_{i+1}) containing x, clamped to the grid."""
    i = np.searchsorted(edges, x, side="right") - 1
    hi = edges.shape[0] - 2
    if i < 0:
        i = 0
    elif i > hi:
        i = hi
    return i


@njit(cache=True)
def hold_reduced(z1, z2, f1, f2, k01, k02, kc1, kc2, dt, n):
    """Advance the reduced state through n RK4 steps with frozen inducer drive.

    f1/f2 are the precomputed repression-relief factors for the held action.
    Components are clamped to zero after each step.
    """
    half = 0.5 * dt
    sixth = dt / 6.0
    for _ in range(n):
        a1 = k01 + kc1 / (1.0 + z2 * z2 * f1) - z1
        a2 = k02 + kc2 / (1.0 + z1 * z1 * f2) - z2
        s1 = z1 + half * a1
        s2 = z2 + half * a2
        b1 = k01 + kc1 / (1.0 + s2 * s2 * f1) - s1
        b2 = k02 + kc2 / (1.0 + s1 * s1 * f2) - s2
        s1 = z1 + half * b1
        s2 = z2 + half * b2
        c1 = k01 + kc1 / (1.0 + s2 * s2 * f1) - s1
        c2 = k02 + kc2 / (1.0 + s1 * s1 * f2) - s2
        s1 = z1 + dt * c1
        s2 = z2 + dt * c2
        d1 = k01 + kc1 / (1.0 + s2 * s2 * f1) - s1
        d2 = k02 + kc2 / (1.0 + s1 * s1 * f2) - s2
        acc1 = a1 + 2.0 * b1
        acc1 = acc1 + 2.0 * c1
        acc1 = acc1 + d1
        acc2 = a2 + 2.0 * b2
        acc2 = acc2 + 2.0 * c2
        acc2 = acc2 + d2
        z1 = z1 + sixth * acc1
        z2 = z2 + sixth * acc2
        if z1 < 0.0:
            z1 = 0.0
        if z2 < 0.0:
            z2 = 0.0
    return z1, z2


@njit(cache=True)
def choose_action(qrow, epsilon, rng):
    """Epsilon-greedy with uniform random tie-breaking among exact maxima.

    Draw discipline (must match agent.select_action): one uniform for the
    explore test only when epsilon > 0; one uniform for the tie-break only
    when more than one entry attains the maximum.
    """
    n = qrow.shape[0]
    if epsilon > 0.0:
        if rng.random() < epsilon:
            k = int(rng.random() * n)
            if k >= n:
                k = n - 1
            return k
    best = qrow[0]
    for j in range(1, n):
        if qrow[j] > best:
            best = qrow[j]
    count = 0
    first = 0
    for j in range(n):
        if qrow[j] == best:
            if count == 0:
                first = j
            count += 1
    if count == 1:
        return first
    k = int(rng.random() * count)
    if k >= count:
        k = count - 1
    seen = 0
    for j in range(n):
        if qrow[j] == best:
            if seen == k:
                return j
            seen += 1
    return first


@njit(cache=True)
def train_trial(
    q,
    visits,
    edges1,
    edges2,
    f1_levels,
    f2_levels,
    k01,
    k02,
    kc1,
    kc2,
    z01,
    z02,
    zr1,
    zr2,
    n_episodes,
    steps_per_episode,
    n_substeps,
    dt_prime,
    alpha,
    gamma,
    epsilon,
    rng,
):
    """One training trial: Q and visits are updated in place.

    Returns (per-episode cumulative reward, largest |reward| observed).
    """
    n2 = edges2.shape[0] - 1
    n_actions = f1_levels.shape[0]
    ep_rewards = np.zeros(n_episodes)
    max_abs_r = 0.0
    for ep in range(n_episodes):
        z1 = z01
        z2 = z02
        cum = 0.0
        for _ in range(steps_per_episode):
            s = cell_index(edges1, z1) * n2 + cell_index(edges2, z2)
            a = choose_action(q[s], epsilon, rng)
            z1, z2 = hold_reduced(
                z1, z2, f1_levels[a], f2_levels[a], k01, k02, kc1, kc2, dt_prime, n_substeps
            )
            e1 = (zr1 - z1) / zr1
            e2 = (zr2 - z2) / zr2
            r = -(e1 * e1 + e2 * e2)
            s_next = cell_index(edges1, z1) * n2 + cell_index(edges2, z2)
            mx = q[s_next, 0]
            for j in range(1, n_actions):
                if q[s_next, j] > mx:
                    mx = q[s_next, j]
            q[s, a] = q[s, a] + alpha * (r + gamma * mx - q[s, a])
            visits[s, a] += 1
            cum = cum + r
            if -r > max_abs_r:
                max_abs_r = -r
        ep_rewards[ep] = cum
    return ep_rewards, max_abs_r
