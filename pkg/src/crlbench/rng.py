"""Splittable, platform-stable random number streams.

Built on numpy's counter-based Philox generator: identical (seed, stream)
pairs produce identical draw sequences on every platform, and independent
streams never collide. Components derive child streams per purpose so that
e.g. environment noise and policy sampling stay decoupled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_MIX = 0x9E3779B97F4A7C15  # 64-bit golden-ratio increment


@dataclass(frozen=True)
class Rng:
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = ((self.seed & _MASK64) << 64) | (self.stream & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

    def split(self, k: int) -> "Rng":
        """Derive an independent child stream; deterministic in (stream, k)."""
        child = ((self.stream * _MIX) + k + 1) & _MASK64
        return Rng(self.seed, child)
