"""Environment protocol, trajectory records, info-access auditing, rollouts."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..rng import Rng


@dataclass
class EnvStep:
    observation: np.ndarray
    reward: float
    done: bool
    info: Mapping

    def __post_init__(self):
        if not np.isfinite(self.reward):
            raise ValueError(f"non-finite reward {self.reward}")


@dataclass
class Trajectory:
    observations: list
    actions: list
    rewards: list
    infos: list
    episode_return: float = field(default=0.0)

    def __post_init__(self):
        n = len(self.observations)
        if not (len(self.actions) == len(self.rewards) == len(self.infos) == n):
            raise ValueError("trajectory fields must have equal lengths")
        self.episode_return = float(sum(self.rewards))

    def __len__(self):
        return len(self.actions)


class Environment:
    """Step/reset protocol. Subclasses set observation_dim and num_actions."""

    observation_dim: int
    num_actions: int

    def reset(self, seed: int) -> np.ndarray:
        raise NotImplementedError

    def step(self, action: int) -> EnvStep:
        raise NotImplementedError

    def _check_action(self, action: int):
        if not (0 <= int(action) < self.num_actions):
            raise ValueError(f"action {action} outside [0, {self.num_actions})")


class InfoAudit:
    """Records which info keys were read, tagged by the reader's phase.

    Used to verify the privileged-information firewall: training code wraps
    env infos through .wrap() and brackets its reads with .phase(), and tests
    assert that e.g. the action-selection path never touched "true_U".
    """

    def __init__(self):
        self.records: set[tuple[str, str]] = set()
        self._phase = "default"

    @contextmanager
    def phase(self, name: str):
        prev = self._phase
        self._phase = name
        try:
            yield self
        finally:
            self._phase = prev

    def wrap(self, info: Mapping) -> "AuditedInfo":
        return AuditedInfo(info, self)

    def saw(self, phase: str, key: str) -> bool:
        return (phase, key) in self.records


class AuditedInfo(Mapping):
    def __init__(self, info: Mapping, audit: InfoAudit):
        self._info = info
        self._audit = audit

    def __getitem__(self, key):
        self._audit.records.add((self._audit._phase, key))
        return self._info[key]

    def __iter__(self):
        return iter(self._info)

    def __len__(self):
        return len(self._info)


def rollout(
    env: Environment,
    policy: Callable[[np.ndarray], np.ndarray],
    max_steps: int,
    rng: Rng,
    episode_seed: int | None = None,
    audit: InfoAudit | None = None,
) -> Trajectory:
    """Run one episode: policy maps observation -> action probabilities.

    Ends at done or max_steps. Sampling draws come from rng only, so the
    trajectory is a pure function of (env config, seeds, policy parameters).
    """
    gen = rng.generator()
    obs = env.reset(rng.seed if episode_seed is None else episode_seed)
    observations, actions, rewards, infos = [], [], [], []
    for _ in range(max_steps):
        probs = np.asarray(policy(obs), dtype=np.float64)
        action = int(gen.choice(len(probs), p=probs / probs.sum()))
        step = env.step(action)
        observations.append(obs)
        actions.append(action)
        rewards.append(step.reward)
        infos.append(audit.wrap(step.info) if audit is not None else step.info)
        obs = step.observation
        if step.done:
            break
    return Trajectory(observations, actions, rewards, infos)
