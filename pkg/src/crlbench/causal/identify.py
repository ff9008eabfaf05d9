"""Identification operators: observational vs interventional dynamics,
back-door and front-door adjustment, abduction-based counterfactuals, and
cross-domain transport. Everything is an exact finite sum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scm import ATOL, TabularSCM


class NonConformingSCM(ValueError):
    """The SCM's structure violates the assumptions of the requested operator."""


def u_posterior_given_sa(scm: TabularSCM) -> tuple[np.ndarray, np.ndarray]:
    """P(u|s,a) from Bayes on the behavior policy: (n_s, n_a, n_u) plus a
    mask of (s,a) cells that are observable (P(a|s) > 0)."""
    joint = scm.behavior * scm.prior_u[None, :, None]        # (s, u, a)
    p_a_given_s = joint.sum(axis=1)                          # (s, a)
    defined = p_a_given_s > 0
    post = np.zeros((scm.n_s, scm.n_a, scm.n_u))
    for s in range(scm.n_s):
        for a in range(scm.n_a):
            if defined[s, a]:
                post[s, a] = joint[s, :, a] / p_a_given_s[s, a]
    return post, defined


def observational_dynamics(scm: TabularSCM) -> tuple[np.ndarray, np.ndarray]:
    """P(s',r|s,a) as a passive observer sees it: the confounder is weighted
    by P(u|s,a). Returns (kernel (s,a,s',r), defined mask (s,a)); rows for
    unobservable (s,a) cells are zero and excluded from comparisons."""
    post, defined = u_posterior_given_sa(scm)
    kernel = np.einsum("sau,saukr->sakr", post, scm.sau_kernel())
    return kernel, defined


def interventional_dynamics(scm: TabularSCM) -> np.ndarray:
    """P(s',r|s,do(a)): the action is severed from u, which keeps its
    natural marginal."""
    return np.einsum("u,saukr->sakr", scm.prior_u, scm.sau_kernel())


def exact_backdoor_inputs(scm: TabularSCM) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The conditionals an observer with access to z == u could estimate:
    P(s',r|s,a,z), P(z|s), and the positivity mask over (s,a,z)."""
    cond = np.transpose(scm.sau_kernel(), (0, 1, 2, 3, 4))   # (s, a, z=u, s', r)
    z_given_s = np.broadcast_to(scm.prior_u, (scm.n_s, scm.n_u)).copy()
    positivity = np.transpose(scm.behavior, (0, 2, 1)) > 0   # (s, a, z)
    return cond, z_given_s, positivity


def backdoor_adjust(
    cond: np.ndarray,
    z_given_s: np.ndarray,
    positivity: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """P(s',r|s,do(a)) = sum_z P(s',r|s,a,z) P(z|s).

    cond is (s, a, z, s', r); returns (kernel (s,a,s',r), ok mask (s,a)).
    Cells that average over a positivity violation (P(a|s,z)=0 on a stratum
    with P(z|s)>0) are flagged False: their conditional is not estimable
    from observational data even though the formula still evaluates.
    """
    kernel = np.einsum("sazkr,sz->sakr", cond, z_given_s)
    n_s, n_a = cond.shape[0], cond.shape[1]
    ok = np.ones((n_s, n_a), dtype=bool)
    if positivity is not None:
        for s in range(n_s):
            for a in range(n_a):
                needed = z_given_s[s] > 0
                ok[s, a] = bool(np.all(positivity[s, a][needed]))
    return kernel, ok


def frontdoor_adjust(scm: TabularSCM) -> np.ndarray:
    """Two-stage mediator formula:
    P(s',r|s,do(a)) = sum_m P(m|s,a) sum_a' P(a'|s) P(s',r|s,m,a').

    Uses only observational conditionals. Requires the front-door structure:
    the mediator must not depend on u, and the outcome must not depend on a
    once (s, m, u) are fixed; violations are refused with a diagnostic.
    """
    if scm.mediator is None:
        raise NonConformingSCM("front-door adjustment needs a mediator")
    med = scm.mediator                                        # (s, a, u, m)
    if np.max(np.ptp(med, axis=2)) > ATOL:
        raise NonConformingSCM("mediator kernel depends on the hidden confounder")
    out = scm.outcome                                         # (s, m, a, u, s', r)
    if np.max(np.ptp(out, axis=2)) > ATOL:
        raise NonConformingSCM("outcome has a direct action edge bypassing the mediator")

    m_given_sa = med[:, :, 0, :]                              # (s, a, m)
    post, defined = u_posterior_given_sa(scm)
    if not np.all(defined):
        raise NonConformingSCM("behavior lacks full support; observational "
                               "conditionals are not all estimable")
    # observational P(s',r|s,m,a') = sum_u P(u|s,a') P(s',r|s,m,u)
    out_u = out[:, :, 0, :, :, :]                             # (s, m, u, s', r)
    obs_out = np.einsum("sau,smukr->smakr", post, out_u)
    p_a_given_s = np.einsum("su,sua->sa", np.broadcast_to(scm.prior_u, (scm.n_s, scm.n_u)),
                            scm.behavior)
    stage2 = np.einsum("sa,smakr->smkr", p_a_given_s, obs_out)
    return np.einsum("sam,smkr->sakr", m_given_sa, stage2)


def counterfactual_outcome(
    scm: TabularSCM,
    observed: tuple[int, int, float, int],
    alt_action: int,
) -> np.ndarray:
    """Abduction-action-prediction for one logged transition.

    observed is (s, a, reward value, s'); returns the (s', r) distribution
    that would have resulted under the alternative action, holding the
    episode's exogenous state to its posterior.
    """
    s, a, r_value, s_next = observed
    matches = np.flatnonzero(np.isclose(scm.reward_support, r_value, atol=ATOL))
    if len(matches) != 1:
        raise ValueError(f"reward value {r_value} not on the support grid")
    r_idx = int(matches[0])

    kern = scm.sau_kernel()
    # abduction: P(u | s, a, s', r) ∝ P(u) P(a|s,u) P(s',r|s,a,u)
    lik = scm.prior_u * scm.behavior[s, :, a] * kern[s, a, :, s_next, r_idx]
    total = lik.sum()
    if total <= 0:
        raise ValueError("observed transition has zero probability under the SCM")
    posterior = lik / total
    # action + prediction
    return np.einsum("u,ukr->kr", posterior, kern[s, alt_action, :, :, :])


@dataclass(frozen=True)
class TransportModel:
    """Interventional pieces of one domain for the transport formula:
    z_given_s (s,z), m_given_saz (s,a,z,m), out_given_sma (s,m,a,s',r)."""

    z_given_s: np.ndarray
    m_given_saz: np.ndarray
    out_given_sma: np.ndarray
    reward_support: np.ndarray

    def __post_init__(self):
        for name in ("z_given_s", "m_given_saz", "out_given_sma", "reward_support"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        from .scm import _check_dist
        _check_dist(self.z_given_s, -1, "z_given_s")
        _check_dist(self.m_given_saz, -1, "m_given_saz")
        _check_dist(self.out_given_sma, (-2, -1), "out_given_sma")

    def interventional(self) -> np.ndarray:
        """Direct enumeration of P(s',r|s,do(a)) within this domain."""
        return np.einsum("sz,sazm,smakr->sakr",
                         self.z_given_s, self.m_given_saz, self.out_given_sma)


@dataclass(frozen=True)
class DomainPair:
    source: TransportModel
    target: TransportModel
    shared_mediator: bool = True
    shared_outcome: bool = True


def transport_estimate(pair: DomainPair) -> np.ndarray:
    """Stitch stable source mechanisms with the target covariate marginal:
    P_t(s',r|s,do(a)) = sum_z P_t(z|s) sum_m P_s(m|s,a,z) P_s(s',r|s,m,do(a)).

    Kernels flagged as shared must be bit-identical across domains; a
    dishonest flag is an error, not a silent approximation.
    """
    if pair.shared_mediator and not np.array_equal(pair.source.m_given_saz,
                                                   pair.target.m_given_saz):
        raise ValueError("mediator kernel flagged shared but differs between domains")
    if pair.shared_outcome and not np.array_equal(pair.source.out_given_sma,
                                                  pair.target.out_given_sma):
        raise ValueError("outcome kernel flagged shared but differs between domains")
    return np.einsum("sz,sazm,smakr->sakr",
                     pair.target.z_given_s,
                     pair.source.m_given_saz,
                     pair.source.out_given_sma)
