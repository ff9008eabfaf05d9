"""Policy evaluation on tabular SCMs: fixed-point iteration on the
interventional (or observational) kernel, and a forced-action Monte Carlo
simulator as an independent check."""

from __future__ import annotations

import numpy as np

from ..rng import Rng
from .identify import interventional_dynamics, observational_dynamics
from .scm import TabularSCM

MAX_ITER = 10**6


def _policy_backup(kernel: np.ndarray, rewards: np.ndarray, policy: np.ndarray,
                   gamma: float, v: np.ndarray) -> np.ndarray:
    # (T V)(s) = sum_a pi(a|s) sum_{s',r} K[s,a,s',r] (r + gamma V(s'))
    target = rewards[None, :] + gamma * v[:, None]            # (s', r)
    q = np.einsum("sakr,kr->sa", kernel, target)
    return np.einsum("sa,sa->s", policy, q)


def value_iteration_on_kernel(kernel: np.ndarray, rewards: np.ndarray,
                              policy: np.ndarray, gamma: float,
                              tol: float = 1e-10) -> np.ndarray:
    n_s = kernel.shape[0]
    v = np.zeros(n_s)
    for _ in range(MAX_ITER):
        nxt = _policy_backup(kernel, rewards, policy, gamma, v)
        if np.max(np.abs(nxt - v)) < tol:
            return nxt
        v = nxt
    raise RuntimeError("value iteration failed to converge")


def causal_value_iteration(scm: TabularSCM, policy: np.ndarray,
                           gamma: float | None = None,
                           tol: float = 1e-10) -> np.ndarray:
    """Fixed point of the policy backup on P(s',r|s,do(a))."""
    g = scm.gamma if gamma is None else gamma
    if not (0.0 <= g < 1.0):
        raise ValueError("gamma must be < 1")
    return value_iteration_on_kernel(interventional_dynamics(scm),
                                     scm.reward_support, policy, g, tol)


def associational_value_iteration(scm: TabularSCM, policy: np.ndarray,
                                  gamma: float | None = None,
                                  tol: float = 1e-10) -> np.ndarray:
    """Same backup on the confounded observational kernel P(s',r|s,a)."""
    g = scm.gamma if gamma is None else gamma
    kernel, defined = observational_dynamics(scm)
    if np.any((policy > 0) & ~defined):
        raise ValueError("policy puts mass on actions never observed; "
                        "observational kernel undefined there")
    return value_iteration_on_kernel(kernel, scm.reward_support, policy, g, tol)


def causal_q_values(scm: TabularSCM, v: np.ndarray, gamma: float | None = None) -> np.ndarray:
    g = scm.gamma if gamma is None else gamma
    kernel = interventional_dynamics(scm)
    target = scm.reward_support[None, :] + g * v[:, None]
    return np.einsum("sakr,kr->sa", kernel, target)


def do_rollout_value(scm: TabularSCM, policy: np.ndarray, n_rollouts: int,
                     seed: int, gamma: float | None = None,
                     horizon: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo value of forcing actions from the policy (do-rollouts).

    Vectorized over rollouts; returns per-start-state (mean, 99% CI
    half-width). The horizon defaults to a geometric-tail cutoff far below
    the Monte Carlo noise floor.
    """
    g = scm.gamma if gamma is None else gamma
    if horizon is None:
        # geometric tail below 1e-6 of max reward: negligible next to MC noise
        horizon = max(1, int(np.ceil(np.log(1e-6) / np.log(max(g, 1e-9)))))
    gen = Rng(seed).split(5).generator()
    kern = scm.sau_kernel()                                   # (s, a, u, s', r)
    n_s, n_a, n_u, _, n_r = kern.shape
    flat_cdf = np.cumsum(kern.reshape(n_s * n_a * n_u, n_s * n_r), axis=1)
    policy_cdf = np.cumsum(policy, axis=1)
    prior_cdf = np.cumsum(scm.prior_u)

    means = np.zeros(n_s)
    halfwidths = np.zeros(n_s)
    for s0 in range(n_s):
        s = np.full(n_rollouts, s0, dtype=np.intp)
        returns = np.zeros(n_rollouts)
        discount = 1.0
        for _ in range(horizon):
            u = np.searchsorted(prior_cdf, gen.random(n_rollouts)).astype(np.intp)
            a = _sample_rows_cdf(policy_cdf[s], gen)
            cell = (s * n_a + a) * n_u + u
            nxt = _sample_rows_cdf(flat_cdf[cell], gen)
            s_next, r_idx = np.divmod(nxt, n_r)
            returns += discount * scm.reward_support[r_idx]
            discount *= g
            s = s_next
        means[s0] = returns.mean()
        halfwidths[s0] = 2.576 * returns.std(ddof=1) / np.sqrt(n_rollouts)
    return means, halfwidths


def _sample_rows_cdf(cdf_rows: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """One categorical draw per row given per-row cumulative distributions."""
    draws = gen.random(cdf_rows.shape[0])
    idx = (draws[:, None] > cdf_rows).sum(axis=1)
    return np.minimum(idx, cdf_rows.shape[1] - 1).astype(np.intp)
