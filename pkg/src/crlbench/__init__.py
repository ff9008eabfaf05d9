"""crlbench: desk-scale causal reinforcement learning benchmark and algorithms."""

__version__ = "0.1.0"
