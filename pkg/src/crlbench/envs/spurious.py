"""Spurious-feature augmentation for cart-pole: 8 extra dimensions that
encode an action shortcut during training (ID) and pure noise at test (OOD)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..rng import Rng
from .cartpole import CartPoleEnv, CartPoleParams, make_variant
from .core import Environment, EnvStep

ID = "id"
OOD = "ood"

_PATTERN_SEED = 52_0913


def _default_patterns(num_domains: int = 4, dim: int = 8) -> np.ndarray:
    """Fixed unit vectors shared by every run (seeded once, module-wide)."""
    gen = Rng(_PATTERN_SEED).generator()
    raw = gen.normal(size=(num_domains, dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


@dataclass(frozen=True)
class SpuriousConfig:
    core_dim: int = 4
    spurious_dim: int = 8
    shortcut_strength: float = 5.0
    num_train_domains: int = 4
    mode: str = ID
    id_noise_std: float = 0.1
    domain_patterns: np.ndarray = field(default_factory=_default_patterns)

    def __post_init__(self):
        if self.mode not in (ID, OOD):
            raise ValueError(f"mode must be '{ID}' or '{OOD}', got {self.mode!r}")
        if self.domain_patterns.shape != (self.num_train_domains, self.spurious_dim):
            raise ValueError("domain_patterns shape mismatch")

    @property
    def observation_dim(self) -> int:
        return self.core_dim + self.spurious_dim


def shortcut_action(core_state: np.ndarray) -> int:
    """Near-optimal balance heuristic: push right iff theta + 0.5*theta_dot > 0."""
    return int(core_state[2] + 0.5 * core_state[3] > 0)


def augment_spurious(
    core_obs: np.ndarray,
    shortcut: int,
    cfg: SpuriousConfig,
    domain_index: int,
    gen: np.random.Generator,
) -> np.ndarray:
    """Append the spurious block. ID mode encodes the shortcut along the
    domain pattern; OOD mode is standard-normal noise, independent of everything."""
    if cfg.mode == ID:
        if not (0 <= domain_index < cfg.num_train_domains):
            raise ValueError(f"domain_index {domain_index} out of range")
        signal = cfg.shortcut_strength * (2 * shortcut - 1) * cfg.domain_patterns[domain_index]
        block = signal + gen.normal(0.0, cfg.id_noise_std, size=cfg.spurious_dim)
    else:
        block = gen.normal(0.0, 1.0, size=cfg.spurious_dim)
    return np.concatenate([core_obs, block])


class SpuriousCartPoleEnv(Environment):
    """Cart-pole variant wrapped with the 12-dim spurious observation.

    The core 4 features are exactly the underlying cart-pole state in both
    modes; only the spurious block differs.
    """

    num_actions = 2

    def __init__(self, variant: str = "standard", mode: str = ID,
                 cfg: SpuriousConfig | None = None,
                 params: CartPoleParams | None = None):
        base_cfg = cfg or SpuriousConfig()
        if base_cfg.mode != mode:
            base_cfg = SpuriousConfig(
                core_dim=base_cfg.core_dim,
                spurious_dim=base_cfg.spurious_dim,
                shortcut_strength=base_cfg.shortcut_strength,
                num_train_domains=base_cfg.num_train_domains,
                mode=mode,
                id_noise_std=base_cfg.id_noise_std,
                domain_patterns=base_cfg.domain_patterns,
            )
        self.cfg = base_cfg
        self.base = CartPoleEnv(params or make_variant(variant))
        self.observation_dim = self.cfg.observation_dim
        self.domain_index = 0
        self._gen: np.random.Generator | None = None

    @property
    def params(self) -> CartPoleParams:
        return self.base.params

    def _augment(self, core: np.ndarray) -> np.ndarray:
        return augment_spurious(core, shortcut_action(core), self.cfg,
                                self.domain_index, self._gen)

    def reset(self, seed: int) -> np.ndarray:
        rng = Rng(seed)
        self._gen = rng.split(1).generator()
        self.domain_index = int(self._gen.integers(self.cfg.num_train_domains))
        core = self.base.reset(seed)
        return self._augment(core)

    def step(self, action: int) -> EnvStep:
        step = self.base.step(action)
        info = dict(step.info)
        info["domain_index"] = self.domain_index
        info["shortcut_action"] = shortcut_action(step.observation)
        return EnvStep(self._augment(step.observation), step.reward, step.done, info)
