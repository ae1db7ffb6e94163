"""
Pseudo-sample Engine — Kendall statistics of a bivariate sample.

t_i is the fraction of the other points dominated coordinate-wise by
point i (strict inequalities, ties never count). Zero and one counts are
pulled half a count step inside the unit interval so that log t_i stays
finite. The Hazen plotting positions of the t's form the seed pool used
by the bootstrap estimators.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

# Rows compared per block in the O(m^2) dominance count
BLOCK_ROWS = 1024


@dataclass(frozen=True)
class PseudoSample:
    """Clamped Kendall statistics `t` plus the unclamped values `raw`."""

    t: np.ndarray
    raw: np.ndarray

    @classmethod
    def from_values(cls, t):
        """Wrap already-computed statistics (used for constructed instances)."""
        values = np.asarray(t, dtype=float).ravel()
        if values.size < 1 or np.any((values <= 0) | (values >= 1)):
            raise ValueError("Pseudo-sample values must lie strictly inside (0, 1)")
        return cls(t=values, raw=values.copy())

    @property
    def m(self):
        return int(self.t.size)

    @property
    def s1(self):
        return math.fsum(self.t)

    @property
    def s2(self):
        return math.fsum(np.log(self.t))


def continuity_eps(m):
    """Half a count step, 1 / (2 (m - 1))."""
    return 1.0 / (2.0 * (m - 1))


def dominance_counts(points):
    """For each point, the number of points strictly below it in both coordinates."""
    points = np.asarray(points, dtype=float)
    x1, x2 = points[:, 0], points[:, 1]
    counts = np.empty(len(points), dtype=np.int64)
    for start in range(0, len(points), BLOCK_ROWS):
        stop = start + BLOCK_ROWS
        below = (x1[None, :] < x1[start:stop, None]) & (x2[None, :] < x2[start:stop, None])
        counts[start:stop] = below.sum(axis=1)
    return counts


def pseudo_sample(points):
    """Compute the pseudo-sample of an (m, 2) array of bivariate points."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError(f"Expected an (m, 2) array of points, got shape {points.shape}")
    m = len(points)
    if m < 2:
        raise ValueError(f"A pseudo-sample needs at least 2 points, got {m}")
    if not np.all(np.isfinite(points)):
        raise ValueError("Sample contains non-finite coordinates")

    raw = dominance_counts(points) / (m - 1)
    eps = continuity_eps(m)
    return PseudoSample(t=np.clip(raw, eps, 1.0 - eps), raw=raw)


def ecdf_values(pseudo):
    """Hazen plotting positions (r_i - 0.5) / m of the t's, average ranks for ties."""
    ranks = rankdata(pseudo.t, method="average")
    return (ranks - 0.5) / pseudo.m
