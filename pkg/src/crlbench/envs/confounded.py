"""Environments with a hidden per-episode confounder U in {0,1}.

U is drawn Bernoulli(0.5) at reset, fixed for the episode, and determines
optimal behavior. Observations carry only a noisy per-step hint about U
(no running aggregates), so reliable inference requires aggregating the
trajectory. The true U travels exclusively in info["true_U"], and each
episode ends with a normalized score in [0, 100] (100 = optimal behavior
for the realized U) in info["score"].
"""

from __future__ import annotations

import numpy as np

from ..rng import Rng
from .core import Environment, EnvStep


class _ConfoundedBase(Environment):
    hint_noise: float

    def __init__(self, hint_noise: float):
        if not (0.0 < hint_noise < 0.5):
            raise ValueError(f"hint_noise must be in (0, 0.5), got {hint_noise}")
        self.hint_noise = hint_noise
        self.U = 0
        self.t = 0
        self._done = True
        self._gen: np.random.Generator | None = None

    def _begin_episode(self, seed: int):
        self._gen = Rng(seed).split(2).generator()
        self.U = int(self._gen.random() < 0.5)
        self.t = 0
        self._done = False

    def reset_info(self) -> dict:
        """Privileged episode facts available immediately after reset."""
        return {"true_U": self.U}

    def _hint(self) -> float:
        flip = self._gen.random() < self.hint_noise
        return float(1 - self.U if flip else self.U)

    def _guard(self, action: int):
        if self._done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        self._check_action(action)


class ConfoundedBandit(_ConfoundedBase):
    """12-step two-armed bandit: arm U pays 1, the other pays 0.

    Observation is [current hint, t/horizon]; hints are i.i.d. given U with
    accuracy 1 - hint_noise.
    """

    num_actions = 2
    observation_dim = 2
    horizon = 12

    def __init__(self, hint_noise: float = 0.35):
        super().__init__(hint_noise)
        self._hits = 0

    def _obs(self) -> np.ndarray:
        return np.array([self._hint(), self.t / self.horizon])

    def reset(self, seed: int) -> np.ndarray:
        self._begin_episode(seed)
        self._hits = 0
        return self._obs()

    def step(self, action: int) -> EnvStep:
        self._guard(action)
        reward = 1.0 if int(action) == self.U else 0.0
        self._hits += int(reward)
        self.t += 1
        self._done = self.t >= self.horizon
        info = {"true_U": self.U}
        if self._done:
            info["score"] = 100.0 * self._hits / self.horizon
        return EnvStep(self._obs(), reward, self._done, info)


class ConfoundedBanditHard(ConfoundedBandit):
    """Same bandit with 45% hint noise."""

    def __init__(self, hint_noise: float = 0.45):
        super().__init__(hint_noise)


# FrozenLake: 4x4 grid, deterministic moves, holes in row 1.
# U=1 blocks the left corridor (cols 0-1), U=0 the right corridor (cols 2-3).
_HOLES = {1: ((1, 0), (1, 1)), 0: ((1, 2), (1, 3))}
_MOVES = {0: (0, -1), 1: (1, 0), 2: (0, 1), 3: (-1, 0)}  # L, D, R, U


class ConfoundedFrozenLake(_ConfoundedBase):
    """4x4 navigation: reach (3,3) from (0,0); U decides which corridor holds holes."""

    num_actions = 4
    observation_dim = 18  # one-hot cell (16) + hint + t/horizon
    horizon = 20
    size = 4

    def __init__(self, hint_noise: float = 0.35):
        super().__init__(hint_noise)
        self.pos = (0, 0)

    def _obs(self) -> np.ndarray:
        cell = np.zeros(16)
        cell[self.pos[0] * self.size + self.pos[1]] = 1.0
        return np.concatenate([cell, [self._hint(), self.t / self.horizon]])

    def reset(self, seed: int) -> np.ndarray:
        self._begin_episode(seed)
        self.pos = (0, 0)
        return self._obs()

    def step(self, action: int) -> EnvStep:
        self._guard(action)
        dr, dc = _MOVES[int(action)]
        r = min(max(self.pos[0] + dr, 0), self.size - 1)
        c = min(max(self.pos[1] + dc, 0), self.size - 1)
        self.pos = (r, c)
        self.t += 1

        reward, score = 0.0, None
        if self.pos in _HOLES[self.U]:
            self._done, score = True, 0.0
        elif self.pos == (self.size - 1, self.size - 1):
            self._done, reward, score = True, 1.0, 100.0
        elif self.t >= self.horizon:
            self._done, score = True, 0.0

        info = {"true_U": self.U}
        if score is not None:
            info["score"] = score
        return EnvStep(self._obs(), reward, self._done, info)


# Blackjack: infinite deck of 13 ranks; U=0 doubles the weight of ranks 2-6,
# U=1 doubles ranks 7 through ace.
_RANK_VALUES = np.array([2, 3, 4, 5, 6, 7, 8, 9, 10, 10, 10, 10, 11])
_LOW_BAND = _RANK_VALUES <= 6


def _deck_weights(u: int) -> np.ndarray:
    w = np.ones(13)
    w[_LOW_BAND if u == 0 else ~_LOW_BAND] = 2.0
    return w / w.sum()


def _hand_value(cards: list[int]) -> tuple[int, bool]:
    """(best total, usable ace) with aces demoted from 11 to 1 as needed."""
    total = sum(cards)
    aces = cards.count(11)
    while total > 21 and aces:
        total -= 10
        aces -= 1
    return total, aces > 0


class ConfoundedBlackjack(_ConfoundedBase):
    """Player-vs-dealer blackjack against a hidden deck bias.

    Actions: 1 = hit, 0 = stand. Dealer stands on any 17. Score: win 100,
    draw 50, loss 0. The observation includes a summary of cards seen so far
    (fractions of low/high ranks), a legitimate observable that correlates
    with the deck bias.
    """

    num_actions = 2
    observation_dim = 6
    horizon = 24  # generous cap; episodes resolve much sooner

    def __init__(self, hint_noise: float = 0.35):
        super().__init__(hint_noise)
        self.player: list[int] = []
        self.dealer_up = 0
        self._seen: list[int] = []

    def _draw(self) -> int:
        value = int(_RANK_VALUES[self._gen.choice(13, p=_deck_weights(self.U))])
        self._seen.append(value)
        return value

    def _obs(self) -> np.ndarray:
        total, usable = _hand_value(self.player)
        low = sum(1 for v in self._seen if v <= 6)
        high = len(self._seen) - low
        n = max(len(self._seen), 1)
        return np.array([
            total / 21.0,
            self.dealer_up / 10.0,
            float(usable),
            self._hint(),
            low / n,
            high / n,
        ])

    def reset(self, seed: int) -> np.ndarray:
        self._begin_episode(seed)
        self._seen = []
        self.player = [self._draw(), self._draw()]
        self.dealer_up = self._draw()
        return self._obs()

    def _resolve(self) -> float:
        """Dealer plays out; returns the episode score."""
        player_total, _ = _hand_value(self.player)
        dealer = [self.dealer_up, self._draw()]
        while _hand_value(dealer)[0] < 17:
            dealer.append(self._draw())
        dealer_total, _ = _hand_value(dealer)
        if dealer_total > 21 or player_total > dealer_total:
            return 100.0
        if player_total == dealer_total:
            return 50.0
        return 0.0

    def step(self, action: int) -> EnvStep:
        self._guard(action)
        self.t += 1
        score = None
        if int(action) == 1:
            self.player.append(self._draw())
            total, _ = _hand_value(self.player)
            if total > 21:
                score = 0.0
            elif self.t >= self.horizon:
                score = self._resolve()
        else:
            score = self._resolve()

        info = {"true_U": self.U}
        reward = 0.0
        if score is not None:
            self._done = True
            info["score"] = score
            reward = score / 100.0
        return EnvStep(self._obs(), reward, self._done, info)
