"""
Interval Engine — Confidence intervals from bootstrap populations.
Populations are merged into one multiset and cut at nearest-rank
quantiles ((1 - level)/2, (1 + level)/2).
"""

from dataclasses import dataclass

import numpy as np

from engine.estimators import frozen_population


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    pooled_count: int

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError(f"Confidence level must lie in (0, 1), got {self.level}")
        if self.lower > self.upper:
            raise ValueError(f"Interval bounds out of order: {self.lower} > {self.upper}")

    def contains(self, alpha):
        return self.lower <= alpha <= self.upper


def ci_resample_population(pseudo, alpha_tilde, n_replicas, stream, config=None):
    """Independent replicas with the seeds solved under the frozen tail median α̃."""
    return frozen_population(pseudo, alpha_tilde, n_replicas, stream, "ci-resample", config)


def quantile_levels(level):
    # Rounded so that e.g. level 0.9 cuts at exactly 0.05 / 0.95
    return np.round([(1 - level) / 2, (1 + level) / 2], 12)


def confidence_interval(populations, level=0.9):
    """Nearest-rank interval on the merge of `populations`."""
    if not 0 < level < 1:
        raise ValueError(f"Confidence level must lie in (0, 1), got {level}")
    populations = list(populations)
    if not populations:
        raise ValueError("At least one bootstrap population is required")

    merged = np.concatenate([p.estimates for p in populations])
    lower, upper = np.quantile(merged, quantile_levels(level), method="inverted_cdf")
    return ConfidenceInterval(float(lower), float(upper), float(level), len(populations))


def consecutive_intervals(populations, level=0.9, pool_size=3):
    """
    One interval per window of `pool_size` consecutive populations.

    n populations yield n - pool_size + 1 intervals (48 for 50 samples and
    windows of three); fewer populations than the window give one interval
    on all of them.
    """
    populations = list(populations)
    if not populations:
        raise ValueError("At least one bootstrap population is required")
    size = min(pool_size, len(populations))
    return [
        confidence_interval(populations[start:start + size], level)
        for start in range(len(populations) - size + 1)
    ]


def coverage(intervals, true_alpha):
    """Fraction of intervals containing `true_alpha`."""
    intervals = list(intervals)
    if not intervals:
        raise ValueError("Coverage needs at least one interval")
    return sum(iv.contains(true_alpha) for iv in intervals) / len(intervals)
