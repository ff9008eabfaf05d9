"""Enumeration-oracle battery for the tabular operators. Each check compares
an identification operator against brute-force enumeration (or an exactly
known property) on the shipped fixtures; the CLI exposes this as
`crlbench causal-core selftest`."""

from __future__ import annotations

import numpy as np

from ..rng import Rng
from .bounds import ope_bounds
from .fixtures import binary_confounder, frontdoor_scm, transport_pair, two_state_confounded
from .identify import (
    NonConformingSCM,
    backdoor_adjust,
    counterfactual_outcome,
    exact_backdoor_inputs,
    frontdoor_adjust,
    interventional_dynamics,
    observational_dynamics,
    transport_estimate,
)
from .value import (
    _policy_backup,
    associational_value_iteration,
    causal_value_iteration,
    do_rollout_value,
)

EXACT = 1e-12


def _binary_population():
    """All (u, a) cells of the binary-confounder fixture as weighted samples."""
    scm = binary_confounder()
    exp_r = np.einsum("saukr,r->sau", scm.sau_kernel(), scm.reward_support)
    p_a = np.einsum("u,sua->sa", scm.prior_u, scm.behavior)
    g, b, m, u_of, a_of = [], [], [], [], []
    for u in range(2):
        for a in range(2):
            g.append(exp_r[0, a, u])
            b.append(p_a[0, a])
            m.append(scm.prior_u[u] * scm.behavior[0, u, a])
            u_of.append(u)
            a_of.append(a)
    return scm, map(np.asarray, (g, b, m)), (u_of, a_of)


def run_selftest(verbose: bool = True) -> list[tuple[str, bool, str]]:
    results: list[tuple[str, bool, str]] = []

    def check(name: str, ok: bool, detail: str = ""):
        results.append((name, bool(ok), detail))
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))

    binary = binary_confounder()
    obs, defined = observational_dynamics(binary)
    interv = interventional_dynamics(binary)
    exp_obs = binary.expected_reward(obs)
    exp_int = binary.expected_reward(interv)
    check("observational E[R|a=1] = 0.9", abs(exp_obs[0, 1] - 0.9) < EXACT)
    check("interventional E[R|do(a=1)] = 0.5", abs(exp_int[0, 1] - 0.5) < EXACT)
    check("observational differs from interventional under confounding",
          np.max(np.abs(exp_obs - exp_int)) > 0.1)

    cond, z_given_s, positivity = exact_backdoor_inputs(binary)
    bd, ok_mask = backdoor_adjust(cond, z_given_s, positivity)
    check("backdoor_adjust(exact) == interventional (<= 1e-12)",
          np.max(np.abs(bd - interv)) <= EXACT and np.all(ok_mask))

    fd_scm = frontdoor_scm(conforming=True)
    fd = frontdoor_adjust(fd_scm)
    fd_truth = interventional_dynamics(fd_scm)
    check("frontdoor_adjust == interventional on conforming SCM (<= 1e-12)",
          np.max(np.abs(fd - fd_truth)) <= EXACT)
    try:
        frontdoor_adjust(frontdoor_scm(conforming=False))
        check("frontdoor refuses direct action edge", False)
    except NonConformingSCM:
        check("frontdoor refuses direct action edge", True)

    pair = transport_pair(shifted=True)
    est = transport_estimate(pair)
    target_truth = pair.target.interventional()
    check("transport_estimate == target enumeration (<= 1e-12)",
          np.max(np.abs(est - target_truth)) <= EXACT)
    check("transport rows normalized",
          np.allclose(est.sum(axis=(-2, -1)), 1.0, atol=EXACT, rtol=0))

    # counterfactual consistency: deterministic fixture, same action back
    cf_same = counterfactual_outcome(binary, (0, 1, 1.0, 0), 1)
    cf_alt = counterfactual_outcome(binary, (0, 1, 1.0, 0), 0)
    check("counterfactual consistency (alt == factual action)",
          abs(cf_same[0, 1] - 1.0) <= EXACT)
    check("counterfactual flips deterministic outcome", abs(cf_alt[0, 0] - 1.0) <= EXACT)

    two = two_state_confounded()
    policy = np.array([[0.5, 0.5], [0.2, 0.8]])
    v_causal = causal_value_iteration(two, policy)
    v_assoc = associational_value_iteration(two, policy)
    mc_mean, mc_half = do_rollout_value(two, policy, n_rollouts=1_000_000, seed=77)
    check("causal VI within do-rollout 99% CI",
          bool(np.all(np.abs(v_causal - mc_mean) <= mc_half)),
          f"|diff|={np.abs(v_causal - mc_mean).max():.2e} half={mc_half.max():.2e}")
    check("causal VI differs from associational VI",
          np.max(np.abs(v_causal - v_assoc)) > 1e-3)

    # contraction of the causal backup
    gen = Rng(123).generator()
    kernel = interventional_dynamics(two)
    contraction_ok = True
    for _ in range(50):
        v1 = gen.normal(size=two.n_s)
        v2 = gen.normal(size=two.n_s)
        t1 = _policy_backup(kernel, two.reward_support, policy, two.gamma, v1)
        t2 = _policy_backup(kernel, two.reward_support, policy, two.gamma, v2)
        if np.max(np.abs(t1 - t2)) > two.gamma * np.max(np.abs(v1 - v2)) + 1e-12:
            contraction_ok = False
            break
    check("causal backup is a gamma-contraction", contraction_ok)

    # sensitivity bounds on the binary population
    scm, (g, b, m), (u_of, a_of) = _binary_population()
    pi_target = np.array([1.0 if a == 1 else 0.0 for a in a_of])
    true_do = scm.expected_reward(interventional_dynamics(scm))[0, 1]
    lo1, hi1 = ope_bounds(g, pi_target, b, 1.0, m)
    check("Gamma=1 degeneracy (lower == upper)", abs(hi1 - lo1) <= EXACT)
    true_w = np.array([0.5 / scm.behavior[0, u, a] if a == 1 else 0.0
                       for u, a in zip(u_of, a_of)])
    ratios = [w / (p / bb) for w, p, bb in zip(true_w, pi_target, b) if p > 0]
    gamma_star = max(max(r, 1 / r) for r in ratios)
    prev = (lo1, hi1)
    nested = True
    contains = []
    for gamma in (1.0, 1.5, gamma_star, gamma_star * 2, 10.0):
        lo, hi = ope_bounds(g, pi_target, b, gamma, m)
        if lo > prev[0] + EXACT or hi < prev[1] - EXACT:
            nested = False
        prev = (lo, hi)
        contains.append((gamma, lo - EXACT <= true_do <= hi + EXACT))
    check("bounds nest monotonically in Gamma", nested)
    check("truth contained for Gamma >= Gamma*",
          all(ok for gamma, ok in contains if gamma >= gamma_star - EXACT),
          f"Gamma*={gamma_star:.3f}")

    all_ok = all(ok for _, ok, _ in results)
    if verbose:
        print(f"selftest: {sum(ok for _, ok, _ in results)}/{len(results)} checks passed")
    return results


def selftest_ok() -> bool:
    return all(ok for _, ok, _ in run_selftest(verbose=True))
