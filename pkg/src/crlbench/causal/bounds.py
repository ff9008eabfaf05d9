"""Partial-identification bounds for off-policy evaluation under a
marginal sensitivity model: per-sample importance weights may deviate from
their nominal values by at most a factor Gamma, and the estimate is
self-normalized over the admissible set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UnboundedWeightsError(ValueError):
    """A target-supported action has zero behavior propensity: the weight
    ratio is unbounded and no finite interval exists."""


@dataclass(frozen=True)
class SensitivityModel:
    gamma: float

    def __post_init__(self):
        if self.gamma < 1.0:
            raise ValueError("sensitivity Gamma must be >= 1")

    def box(self, nominal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return nominal / self.gamma, nominal * self.gamma


def weight_box_bounds(
    returns: np.ndarray,
    nominal_weights: np.ndarray,
    gamma: float,
    masses: np.ndarray | None = None,
) -> tuple[float, float]:
    """inf/sup of the self-normalized weighted mean over the weight box.

    The objective sum(m w g)/sum(m w) is linear-fractional in w, so each
    extreme sits at a box vertex with a threshold structure in g: to push
    the value up, weights above the threshold go to the cap and the rest to
    the floor. Scanning the n+1 split points of the g-sorted samples visits
    every such vertex exactly.
    """
    g = np.asarray(returns, dtype=np.float64)
    w0 = np.asarray(nominal_weights, dtype=np.float64)
    m = np.ones_like(g) if masses is None else np.asarray(masses, dtype=np.float64)
    if np.any(~np.isfinite(w0)) or np.any(w0 <= 0):
        raise UnboundedWeightsError("nominal weights must be finite and positive")
    model = SensitivityModel(gamma)
    lo_w, hi_w = model.box(w0)

    order = np.argsort(-g, kind="stable")
    g_s, m_s = g[order], m[order]
    lo_s, hi_s = lo_w[order] * m_s, hi_w[order] * m_s

    def scan(num_hi: np.ndarray, den_hi: np.ndarray,
             num_lo: np.ndarray, den_lo: np.ndarray) -> np.ndarray:
        # split k: first k samples (largest g) at cap, rest at floor
        c_num_hi = np.concatenate([[0.0], np.cumsum(num_hi)])
        c_den_hi = np.concatenate([[0.0], np.cumsum(den_hi)])
        t_num_lo = np.concatenate([[np.sum(num_lo)], np.sum(num_lo) - np.cumsum(num_lo)])
        t_den_lo = np.concatenate([[np.sum(den_lo)], np.sum(den_lo) - np.cumsum(den_lo)])
        return (c_num_hi + t_num_lo) / (c_den_hi + t_den_lo)

    upper_candidates = scan(hi_s * g_s, hi_s, lo_s * g_s, lo_s)
    lower_candidates = scan(lo_s * g_s, lo_s, hi_s * g_s, hi_s)
    return float(lower_candidates.min()), float(upper_candidates.max())


def ope_bounds(
    returns: np.ndarray,
    target_propensities: np.ndarray,
    behavior_propensities: np.ndarray,
    gamma: float,
    masses: np.ndarray | None = None,
) -> tuple[float, float]:
    """Bounds on the target policy's value from logged returns.

    Nominal weights are the target/behavior likelihood ratios; Gamma = 1
    collapses the interval to the self-normalized importance-sampling point.
    """
    pi = np.asarray(target_propensities, dtype=np.float64)
    b = np.asarray(behavior_propensities, dtype=np.float64)
    if np.any((b <= 0) & (pi > 0)):
        raise UnboundedWeightsError(
            "target-supported action has zero behavior propensity")
    keep = pi > 0
    if not np.any(keep):
        raise ValueError("target policy has no support on the logged data")
    g = np.asarray(returns, dtype=np.float64)
    m = None if masses is None else np.asarray(masses, dtype=np.float64)[keep]
    return weight_box_bounds(g[keep], pi[keep] / b[keep], gamma, m)


def snips_estimate(returns, target_propensities, behavior_propensities,
                   masses=None) -> float:
    """Self-normalized importance sampling (the Gamma = 1 point)."""
    lo, hi = ope_bounds(returns, target_propensities, behavior_propensities,
                        1.0, masses)
    return 0.5 * (lo + hi)
