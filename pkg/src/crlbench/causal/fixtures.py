"""Shipped test SCMs. Builders here are the source of truth; the JSON files
under fixtures/ are their serialized form for external consumers."""

from __future__ import annotations

from importlib import resources

import numpy as np

from .identify import DomainPair, TransportModel
from .scm import TabularSCM, scm_from_json


def binary_confounder(accuracy: float = 0.9) -> TabularSCM:
    """One state, binary confounder and action. The behavior policy matches
    the confounder with the given accuracy and the reward is 1{a == u}, so
    observation and intervention disagree maximally: E[R|a] = accuracy but
    E[R|do(a)] = 0.5."""
    behavior = np.zeros((1, 2, 2))
    for u in range(2):
        behavior[0, u, u] = accuracy
        behavior[0, u, 1 - u] = 1.0 - accuracy
    outcome = np.zeros((1, 2, 2, 1, 2))  # (s, a, u, s', r) with r support {0, 1}
    for a in range(2):
        for u in range(2):
            outcome[0, a, u, 0, int(a == u)] = 1.0
    return TabularSCM(
        prior_u=[0.5, 0.5],
        init_s=[1.0],
        behavior=behavior,
        reward_support=[0.0, 1.0],
        outcome=outcome,
        gamma=0.0,
    )


def two_state_confounded(gamma: float = 0.9) -> TabularSCM:
    """Two states with confounded behavior and u-dependent transitions, used
    to exercise value iteration against forced-action simulation."""
    behavior = np.array([
        [[0.8, 0.2], [0.3, 0.7]],   # s=0: u=0 prefers a=0, u=1 prefers a=1
        [[0.6, 0.4], [0.1, 0.9]],
    ])
    outcome = np.zeros((2, 2, 2, 2, 3))
    support = [0.0, 0.5, 1.0]
    # hand-fixed kernels; rows normalized over (s', r)
    rows = {
        (0, 0, 0): [(0, 2, 0.6), (1, 0, 0.4)],
        (0, 0, 1): [(0, 1, 0.5), (1, 1, 0.5)],
        (0, 1, 0): [(1, 1, 0.7), (0, 0, 0.3)],
        (0, 1, 1): [(1, 2, 0.8), (0, 0, 0.2)],
        (1, 0, 0): [(0, 0, 0.5), (1, 2, 0.5)],
        (1, 0, 1): [(0, 2, 0.9), (1, 0, 0.1)],
        (1, 1, 0): [(1, 1, 1.0)],
        (1, 1, 1): [(0, 1, 0.25), (1, 2, 0.75)],
    }
    for (s, a, u), entries in rows.items():
        for (s_next, r_idx, p) in entries:
            outcome[s, a, u, s_next, r_idx] = p
    return TabularSCM(
        prior_u=[0.6, 0.4],
        init_s=[0.5, 0.5],
        behavior=behavior,
        reward_support=support,
        outcome=outcome,
        gamma=gamma,
    )


def frontdoor_scm(conforming: bool = True) -> TabularSCM:
    """Binary mediator chain u -> a (behavior), a -> m, (m, u) -> r.

    With conforming=False the outcome gains a direct action edge, which the
    front-door operator must refuse.
    """
    behavior = np.array([[[0.85, 0.15], [0.25, 0.75]]])
    mediator = np.zeros((1, 2, 2, 2))     # (s, a, u, m); no u-dependence
    for a in range(2):
        mediator[0, a, :, a] = 0.9
        mediator[0, a, :, 1 - a] = 0.1
    outcome = np.zeros((1, 2, 2, 2, 1, 2))  # (s, m, a, u, s', r)
    for m in range(2):
        for a in range(2):
            for u in range(2):
                p_r1 = 0.2 + 0.6 * float(m == u)
                if not conforming:
                    p_r1 = min(1.0, p_r1 + 0.15 * a)
                outcome[0, m, a, u, 0, 1] = p_r1
                outcome[0, m, a, u, 0, 0] = 1.0 - p_r1
    return TabularSCM(
        prior_u=[0.5, 0.5],
        init_s=[1.0],
        behavior=behavior,
        reward_support=[0.0, 1.0],
        outcome=outcome,
        mediator=mediator,
        gamma=0.0,
    )


def transport_pair(shifted: bool = True) -> DomainPair:
    """Source and target share mediator and outcome mechanisms; only the
    covariate marginal P(z|s) shifts across domains."""
    m_given_saz = np.zeros((2, 2, 2, 2))
    for z in range(2):
        for a in range(2):
            p = 0.7 + 0.2 * float(a == z)
            m_given_saz[:, a, z, 1] = p
            m_given_saz[:, a, z, 0] = 1.0 - p
    out = np.zeros((2, 2, 2, 2, 2))       # (s, m, a, s', r)
    for s in range(2):
        for m in range(2):
            for a in range(2):
                p_r1 = 0.1 + 0.5 * m + 0.2 * a
                p_s1 = 0.3 + 0.4 * float(m == a)
                for s_next, r in ((0, 0), (0, 1), (1, 0), (1, 1)):
                    p_sn = p_s1 if s_next == 1 else 1.0 - p_s1
                    p_r = p_r1 if r == 1 else 1.0 - p_r1
                    out[s, m, a, s_next, r] = p_sn * p_r
    z_source = np.array([[0.5, 0.5], [0.3, 0.7]])
    z_target = np.array([[0.9, 0.1], [0.6, 0.4]]) if shifted else z_source
    support = np.array([0.0, 1.0])
    source = TransportModel(z_source, m_given_saz, out, support)
    target = TransportModel(z_target, m_given_saz.copy(), out.copy(), support)
    return DomainPair(source, target)


_FIXTURE_BUILDERS = {
    "binary_confounder": binary_confounder,
    "two_state_confounded": two_state_confounded,
    "frontdoor": frontdoor_scm,
}


def load_fixture(name: str) -> TabularSCM:
    """Load a shipped JSON fixture by name."""
    path = resources.files("crlbench.causal").joinpath(f"fixtures/{name}.json")
    return scm_from_json(path.read_text())


def builder(name: str):
    return _FIXTURE_BUILDERS[name]
