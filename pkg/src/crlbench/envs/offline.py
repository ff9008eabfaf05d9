"""Confounded contextual bandits for offline learning (dosage, pricing,
targeting) and their logged-dataset generator.

Hidden per-decision U ~ Uniform[0,1] determines the optimal action; the log
records a noisy unbiased proxy z of U, while the behavior policy acts on a
biased estimate of U, so its errors correlate with U itself.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from ..rng import Rng

ENV_NAMES = ("dosage", "pricing", "targeting")


@dataclass(frozen=True)
class OfflineEnvSpec:
    name: str
    proxy_sigma: float = 0.1
    confounding_strength: float = 0.6
    context_dim: int = 2
    action_noise: float = 0.05

    def __post_init__(self):
        if self.name not in ENV_NAMES:
            raise ValueError(f"unknown offline env {self.name!r}; choose from {ENV_NAMES}")
        if self.confounding_strength < 0:
            raise ValueError("confounding_strength must be >= 0")

    def optimal_action(self, u: np.ndarray) -> np.ndarray:
        # dosage/pricing: a* = 1 - U; targeting: a* = U
        return u if self.name == "targeting" else 1.0 - u

    def biased_estimate(self, u: np.ndarray) -> np.ndarray:
        s = self.confounding_strength
        if self.name == "targeting":
            # systematically under-estimates high-value users
            return np.clip(u - s * u, 0.0, 1.0)
        return np.clip(u + s * (0.5 - u), 0.0, 1.0)


def reward_fn(action: np.ndarray, optimal: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - 2.0 * np.abs(action - optimal))


@dataclass
class LoggedDataset:
    contexts: np.ndarray   # (n, d)
    actions: np.ndarray    # (n,)
    rewards: np.ndarray    # (n,)
    proxies: np.ndarray    # (n,)
    u_true: np.ndarray     # (n,) evaluation only, never visible to learners

    def __len__(self):
        return len(self.actions)

    def split(self, n_first: int) -> tuple["LoggedDataset", "LoggedDataset"]:
        def take(lo, hi):
            return LoggedDataset(self.contexts[lo:hi], self.actions[lo:hi],
                                 self.rewards[lo:hi], self.proxies[lo:hi],
                                 self.u_true[lo:hi])
        return take(0, n_first), take(n_first, len(self))


def gen_dataset(spec: OfflineEnvSpec, n: int, seed: int) -> LoggedDataset:
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = Rng(seed).split(3).generator()
    u = gen.uniform(0.0, 1.0, size=n)
    z = np.clip(u + gen.normal(0.0, spec.proxy_sigma, size=n), 0.0, 1.0)
    contexts = gen.uniform(0.0, 1.0, size=(n, spec.context_dim))
    u_b = spec.biased_estimate(u)
    actions = np.clip(spec.optimal_action(u_b) + gen.normal(0.0, spec.action_noise, size=n),
                      0.0, 1.0)
    rewards = reward_fn(actions, spec.optimal_action(u))
    return LoggedDataset(contexts, actions, rewards, z, u)


Policy = Callable[[np.ndarray, np.ndarray], np.ndarray]  # (contexts, proxies) -> actions


def true_value(policy: Policy, spec: OfflineEnvSpec, n_eval: int, seed: int) -> float:
    """Ground-truth online value: Monte Carlo mean reward under fresh U draws."""
    gen = Rng(seed).split(4).generator()
    u = gen.uniform(0.0, 1.0, size=n_eval)
    z = np.clip(u + gen.normal(0.0, spec.proxy_sigma, size=n_eval), 0.0, 1.0)
    contexts = gen.uniform(0.0, 1.0, size=(n_eval, spec.context_dim))
    actions = np.clip(np.asarray(policy(contexts, z), dtype=np.float64), 0.0, 1.0)
    return float(reward_fn(actions, spec.optimal_action(u)).mean())


def save_dataset_csv(path, ds: LoggedDataset):
    d = ds.contexts.shape[1]
    header = [f"s{i}" for i in range(d)] + ["a", "r", "z", "u_true"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(ds)):
            row = [*ds.contexts[i], ds.actions[i], ds.rewards[i], ds.proxies[i], ds.u_true[i]]
            writer.writerow([f"{v:.9g}" for v in row])


def load_dataset_csv(path) -> LoggedDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = sum(1 for h in header if h.startswith("s"))
        rows = [list(map(float, row)) for row in reader]
    arr = np.asarray(rows)
    return LoggedDataset(arr[:, :d], arr[:, d], arr[:, d + 1], arr[:, d + 2], arr[:, d + 3])
