"""Welfare and equality metrics over end-of-episode wealth vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "one_minus_gini",
    "welfare",
    "rawlsian",
    "aie",
    "jain_index",
    "MetricsRow",
]


def one_minus_gini(wealths: np.ndarray) -> float:
    """Equality index in [0, 1]: 1 - (1 / 2 n^2 mu) * sum_ij |w_i - w_j|.

    Defined only for a positive mean wealth; otherwise returns NaN as a
    sentinel so downstream reporting can flag the row instead of quietly
    producing a meaningless number (exploitative regimes do drive mean
    wealth to zero or below).
    """
    w = np.asarray(wealths, dtype=np.float64)
    if w.size == 0:
        raise ValueError("wealth vector must be non-empty")
    mu = w.mean()
    if mu <= 0:
        return math.nan
    n = w.size
    diff_sum = np.abs(w[:, None] - w[None, :]).sum()
    return float(1.0 - diff_sum / (2.0 * n * n * mu))


def welfare(wealths: np.ndarray) -> float:
    """Total wealth over all parties."""
    w = np.asarray(wealths, dtype=np.float64)
    if w.size == 0:
        raise ValueError("wealth vector must be non-empty")
    return float(w.sum())


def rawlsian(wealths: np.ndarray) -> float:
    """Wealth of the poorest party."""
    w = np.asarray(wealths, dtype=np.float64)
    if w.size == 0:
        raise ValueError("wealth vector must be non-empty")
    return float(w.min())


def aie(one_minus_gini_value: float, welfare_value: float) -> float:
    """Equality-weighted welfare: (1 - Gini) * welfare, per evaluation unit."""
    return one_minus_gini_value * welfare_value


def jain_index(wealths: np.ndarray) -> float:
    """Jain's fairness index (sum w)^2 / (n * sum w^2); 1 at perfect equality."""
    w = np.asarray(wealths, dtype=np.float64)
    sq = float((w * w).sum())
    if sq == 0.0:
        return 1.0
    return float(w.sum()) ** 2 / (w.size * sq)


@dataclass(frozen=True)
class MetricsRow:
    """Metric snapshot for one training iteration of one seed."""

    iteration: int
    seed: int
    wealths: tuple[float, ...]  # mean episodic wealth per party
    one_minus_gini: float
    welfare: float
    rawlsian: float
    aie: float

    @classmethod
    def from_wealths(cls, iteration: int, seed: int, wealths: np.ndarray) -> "MetricsRow":
        g = one_minus_gini(wealths)
        w = welfare(wealths)
        return cls(
            iteration=iteration,
            seed=seed,
            wealths=tuple(float(x) for x in wealths),
            one_minus_gini=g,
            welfare=w,
            rawlsian=rawlsian(wealths),
            aie=aie(g, w),
        )
