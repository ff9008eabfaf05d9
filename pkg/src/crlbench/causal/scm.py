"""Finite structural causal models over (U, S, A, optional M) with a
discrete reward support, so every identification claim can be checked by
exact enumeration.

Kernel layouts (dense float64 arrays of conditional probabilities):
  behavior  P(a|s,u)            (n_s, n_u, n_a)
  mediator  P(m|s,a,u)          (n_s, n_a, n_u, n_m)         optional
  outcome   P(s',r|s,a,u)       (n_s, n_a, n_u, n_s, n_r)    no mediator
            P(s',r|s,m,a,u)     (n_s, n_m, n_a, n_u, n_s, n_r) with mediator
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ATOL = 1e-12


def _check_dist(arr: np.ndarray, axes, name: str):
    if np.any(arr < 0):
        raise ValueError(f"{name}: negative probabilities")
    sums = arr.sum(axis=axes)
    if not np.allclose(sums, 1.0, atol=ATOL, rtol=0):
        raise ValueError(f"{name}: rows must sum to 1 within {ATOL}")


@dataclass(frozen=True)
class TabularSCM:
    prior_u: np.ndarray
    init_s: np.ndarray
    behavior: np.ndarray
    reward_support: np.ndarray
    outcome: np.ndarray
    mediator: np.ndarray | None = None
    gamma: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, "prior_u", np.asarray(self.prior_u, dtype=np.float64))
        object.__setattr__(self, "init_s", np.asarray(self.init_s, dtype=np.float64))
        object.__setattr__(self, "behavior", np.asarray(self.behavior, dtype=np.float64))
        object.__setattr__(self, "reward_support", np.asarray(self.reward_support, dtype=np.float64))
        object.__setattr__(self, "outcome", np.asarray(self.outcome, dtype=np.float64))
        if self.mediator is not None:
            object.__setattr__(self, "mediator", np.asarray(self.mediator, dtype=np.float64))
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        _check_dist(self.prior_u, -1, "prior_u")
        _check_dist(self.init_s, -1, "init_s")
        _check_dist(self.behavior, -1, "behavior")
        if self.mediator is None:
            if self.outcome.ndim != 5:
                raise ValueError("outcome must be (s, a, u, s', r) without a mediator")
        else:
            _check_dist(self.mediator, -1, "mediator")
            if self.outcome.ndim != 6:
                raise ValueError("outcome must be (s, m, a, u, s', r) with a mediator")
        _check_dist(self.outcome, (-2, -1), "outcome")

    @property
    def n_u(self) -> int:
        return len(self.prior_u)

    @property
    def n_s(self) -> int:
        return len(self.init_s)

    @property
    def n_a(self) -> int:
        return self.behavior.shape[-1]

    @property
    def n_m(self) -> int | None:
        return None if self.mediator is None else self.mediator.shape[-1]

    @property
    def n_r(self) -> int:
        return len(self.reward_support)

    def sau_kernel(self) -> np.ndarray:
        """P(s',r|s,a,u) with any mediator marginalized out: (s, a, u, s', r)."""
        if self.mediator is None:
            return self.outcome
        # sum_m P(m|s,a,u) P(s',r|s,m,a,u)
        return np.einsum("saum,smaukr->saukr", self.mediator, self.outcome)

    def expected_reward(self, kernel: np.ndarray) -> np.ndarray:
        """E[r] under a (..., s', r) kernel, summing out (s', r)."""
        return np.einsum("...kr,r->...", kernel, self.reward_support)


def scm_to_json(scm: TabularSCM) -> str:
    payload = {
        "domains": {"u": scm.n_u, "s": scm.n_s, "a": scm.n_a,
                    "m": scm.n_m, "r": scm.n_r},
        "gamma": scm.gamma,
        "prior_u": scm.prior_u.tolist(),
        "init_s": scm.init_s.tolist(),
        "behavior": scm.behavior.tolist(),
        "reward_support": scm.reward_support.tolist(),
        "outcome": scm.outcome.tolist(),
        "mediator": None if scm.mediator is None else scm.mediator.tolist(),
    }
    return json.dumps(payload, indent=1)


def scm_from_json(text: str) -> TabularSCM:
    payload = json.loads(text)
    med = payload.get("mediator")
    return TabularSCM(
        prior_u=payload["prior_u"],
        init_s=payload["init_s"],
        behavior=payload["behavior"],
        reward_support=payload["reward_support"],
        outcome=payload["outcome"],
        mediator=None if med is None else np.asarray(med),
        gamma=payload["gamma"],
    )


def load_scm(path) -> TabularSCM:
    return scm_from_json(Path(path).read_text())


def save_scm(path, scm: TabularSCM):
    Path(path).write_text(scm_to_json(scm))
