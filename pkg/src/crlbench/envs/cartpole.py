"""Classic cart-pole dynamics with the three physics variants used in the
spurious-feature study."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rng import Rng
from .core import Environment, EnvStep


@dataclass(frozen=True)
class CartPoleParams:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    pole_length: float = 0.5  # half-length term in the classic equations
    force_magnitude: float = 10.0
    dt: float = 0.02
    angle_threshold: float = 12.0 * math.pi / 180.0
    position_threshold: float = 2.4
    max_steps: int = 500

    def __post_init__(self):
        for name in ("gravity", "cart_mass", "pole_mass", "pole_length",
                     "force_magnitude", "dt", "angle_threshold", "position_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


VARIANTS = {
    "standard": dict(pole_length=0.5, pole_mass=0.1),
    "longpole": dict(pole_length=1.0, pole_mass=0.1),
    "heavypole": dict(pole_length=0.5, pole_mass=0.3),
}


def make_variant(name: str) -> CartPoleParams:
    key = name.lower()
    if key not in VARIANTS:
        raise ValueError(f"unknown cart-pole variant {name!r}; choose from {sorted(VARIANTS)}")
    return CartPoleParams(**VARIANTS[key])


def accelerations(state, force: float, params: CartPoleParams) -> tuple[float, float]:
    """(x_ddot, theta_ddot) for the classic cart-pole equations."""
    _, _, theta, theta_dot = state
    total_mass = params.cart_mass + params.pole_mass
    pml = params.pole_mass * params.pole_length
    sin, cos = math.sin(theta), math.cos(theta)
    temp = (force + pml * theta_dot**2 * sin) / total_mass
    theta_acc = (params.gravity * sin - cos * temp) / (
        params.pole_length * (4.0 / 3.0 - params.pole_mass * cos**2 / total_mass)
    )
    x_acc = temp - pml * theta_acc * cos / total_mass
    return x_acc, theta_acc


def cartpole_step(state: np.ndarray, action: int, params: CartPoleParams) -> tuple[np.ndarray, bool]:
    """One explicit-Euler step. Returns (next_state, crossed_threshold)."""
    force = params.force_magnitude if action == 1 else -params.force_magnitude
    x_acc, theta_acc = accelerations(state, force, params)
    x, x_dot, theta, theta_dot = state
    nxt = np.array([
        x + params.dt * x_dot,
        x_dot + params.dt * x_acc,
        theta + params.dt * theta_dot,
        theta_dot + params.dt * theta_acc,
    ])
    failed = abs(nxt[0]) > params.position_threshold or abs(nxt[2]) > params.angle_threshold
    return nxt, failed


class CartPoleEnv(Environment):
    """Balance task: reward +1 per surviving step, episode capped at max_steps."""

    num_actions = 2
    observation_dim = 4

    def __init__(self, params: CartPoleParams | None = None):
        self.params = params or CartPoleParams()
        self.state: np.ndarray | None = None
        self.t = 0
        self._done = True

    def reset(self, seed: int) -> np.ndarray:
        gen = Rng(seed).split(0).generator()
        self.state = gen.uniform(-0.05, 0.05, size=4)
        self.t = 0
        self._done = False
        return self.state.copy()

    def step(self, action: int) -> EnvStep:
        if self._done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        self._check_action(action)
        self.state, failed = cartpole_step(self.state, int(action), self.params)
        self.t += 1
        self._done = failed or self.t >= self.params.max_steps
        return EnvStep(self.state.copy(), 1.0, self._done, {"steps": self.t})
