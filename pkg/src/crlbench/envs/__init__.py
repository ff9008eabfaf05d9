"""Benchmark environments and the step/reset protocol."""

from __future__ import annotations

from .cartpole import CartPoleEnv, CartPoleParams, make_variant
from .confounded import (
    ConfoundedBandit,
    ConfoundedBanditHard,
    ConfoundedBlackjack,
    ConfoundedFrozenLake,
)
from .core import AuditedInfo, Environment, EnvStep, InfoAudit, Trajectory, rollout
from .spurious import SpuriousCartPoleEnv, SpuriousConfig

_CONFOUNDED = {
    "confounded-bandit": ConfoundedBandit,
    "confounded-bandit-hard": ConfoundedBanditHard,
    "confounded-frozenlake": ConfoundedFrozenLake,
    "confounded-blackjack": ConfoundedBlackjack,
}


def make_env(name: str, mode: str = "id") -> Environment:
    """Build an environment from its CLI name.

    Names: cartpole:<variant>, cartpole-spurious:<variant> (with mode id|ood),
    and the confounded family (confounded-bandit, -bandit-hard, -frozenlake,
    -blackjack).
    """
    key = name.lower()
    if key in _CONFOUNDED:
        return _CONFOUNDED[key]()
    if key.startswith("cartpole-spurious"):
        _, _, variant = key.partition(":")
        return SpuriousCartPoleEnv(variant or "standard", mode=mode)
    if key.startswith("cartpole"):
        _, _, variant = key.partition(":")
        return CartPoleEnv(make_variant(variant or "standard"))
    raise ValueError(f"unknown environment {name!r}")


__all__ = [
    "AuditedInfo", "CartPoleEnv", "CartPoleParams", "ConfoundedBandit",
    "ConfoundedBanditHard", "ConfoundedBlackjack", "ConfoundedFrozenLake",
    "Environment", "EnvStep", "InfoAudit", "SpuriousCartPoleEnv",
    "SpuriousConfig", "Trajectory", "make_env", "make_variant", "rollout",
]
