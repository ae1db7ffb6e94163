"""
Estimator Engine — Maximum likelihood and bootstrap estimators of α.

The bootstrap estimator splits Kendall's function into two dummy CDFs,
t (α+1)/α and t^(α+1)/α, whose sufficient statistics are s1 = Σ t_i and
s2 = Σ log t_i. Each replica draws m seeds u_i from the seed pool, solves
the seed equation

    w1 α/(α+1) = (α (w1 - u))^(1/(α+1))

for w1, and pairs the two estimates

    α̂1 = s1 / (Σ w1 - s1)
    α̂2 = root of (Σ log(w1 - u) + m log α) / (α + 1) = s2

into α̂ = (α̂1 + α̂2) / 2.

Modes:
  - dummy:       seeds solved under the true α (validation only)
  - fixed point: seeds solved under a smoothed running estimate started
                 at the MLE; the tail median is the final estimate
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import bisect, minimize_scalar

from engine.copula import EPS, bisect_monotone, check_alpha, clamp_unit
from engine.pseudo import ecdf_values

DEFAULT_BRACKET = (1e-4, 100.0)
SEED_DRAWS = ("ecdf", "uniform")
PROVENANCES = ("dummy", "fixed-point-tail", "ci-resample")


class BoundaryWarning(UserWarning):
    """An optimiser or root finder ended at (or next to) its bracket."""


class ReplicaRejected(RuntimeError):
    """A single seed replica cannot produce an estimate and must be redrawn."""

    def __init__(self, reason, message):
        super().__init__(message)
        self.reason = reason


class ReplicaExhaustedError(RuntimeError):
    """Too many consecutive replicas were rejected."""

    def __init__(self, attempts, rejected_sum, rejected_root):
        super().__init__(
            f"No usable seed replica after {attempts} attempts "
            f"({rejected_sum} sum rejections, {rejected_root} root failures)"
        )
        self.rejected_sum = rejected_sum
        self.rejected_root = rejected_root


class NonFiniteUpdateError(RuntimeError):
    """The mean-field update produced a non-finite α; carries the partial trace."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


# ── Configuration & result types ────────────────────────────

@dataclass
class AiConfig:
    """Settings of the fixed-point bootstrap estimator."""

    burn_in_steps: int = 300
    tail_steps: int = 300
    smoothing_eta: float = 0.1
    replica_retry_limit: int = 100
    alpha_bracket: tuple = DEFAULT_BRACKET
    seed_draw: str = "ecdf"

    def __post_init__(self):
        self.alpha_bracket = tuple(float(b) for b in self.alpha_bracket)
        lo, hi = self.alpha_bracket
        if self.burn_in_steps < 1 or self.tail_steps < 1:
            raise ValueError("burn_in_steps and tail_steps must be at least 1")
        if not 0 < self.smoothing_eta <= 1:
            raise ValueError(f"smoothing_eta must lie in (0, 1], got {self.smoothing_eta}")
        if self.replica_retry_limit < 1:
            raise ValueError("replica_retry_limit must be at least 1")
        if not 0 < lo < hi or not math.isfinite(hi):
            raise ValueError(f"Invalid alpha bracket: {self.alpha_bracket}")
        if self.seed_draw not in SEED_DRAWS:
            raise ValueError(f"seed_draw must be one of {SEED_DRAWS}, got {self.seed_draw!r}")

    @classmethod
    def from_manifest(cls, section):
        section = section or {}
        if not isinstance(section, dict):
            raise ValueError(f"ai_config must be a mapping, got {type(section).__name__}")
        defaults = cls()
        return cls(
            burn_in_steps=int(section.get("burn_in_steps", defaults.burn_in_steps)),
            tail_steps=int(section.get("tail_steps", defaults.tail_steps)),
            smoothing_eta=float(section.get("smoothing_eta", defaults.smoothing_eta)),
            replica_retry_limit=int(section.get("replica_retry_limit", defaults.replica_retry_limit)),
            alpha_bracket=tuple(section.get("alpha_bracket", defaults.alpha_bracket)),
            seed_draw=section.get("seed_draw", defaults.seed_draw),
        )

    def to_manifest(self):
        return {
            "burn_in_steps": self.burn_in_steps,
            "tail_steps": self.tail_steps,
            "smoothing_eta": self.smoothing_eta,
            "replica_retry_limit": self.replica_retry_limit,
            "alpha_bracket": list(self.alpha_bracket),
            "seed_draw": self.seed_draw,
        }


@dataclass
class SeedReplica:
    """One accepted draw of m seeds u_i with their solutions w1_i = u_i + d_i."""

    w1: np.ndarray
    u: np.ndarray
    diffs: np.ndarray
    alpha_used: float
    alpha1: float
    alpha2: float
    rejected_sum: int = 0
    rejected_root: int = 0

    @property
    def estimate(self):
        return 0.5 * (self.alpha1 + self.alpha2)


@dataclass
class MeanFieldTrace:
    """Per-step record of the fixed-point loop; `start` is the MLE seed value."""

    start: float
    steps: list = field(default_factory=list)
    alpha1: list = field(default_factory=list)
    alpha2: list = field(default_factory=list)
    smoothed: list = field(default_factory=list)

    def record(self, step, alpha1, alpha2, smoothed):
        self.steps.append(int(step))
        self.alpha1.append(float(alpha1))
        self.alpha2.append(float(alpha2))
        self.smoothed.append(float(smoothed))

    def __len__(self):
        return len(self.steps)

    def to_frame(self):
        return pd.DataFrame({
            "step": self.steps,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "alpha_smoothed": self.smoothed,
        })


@dataclass
class BootstrapPopulation:
    """A multiset of α estimates and where it came from."""

    estimates: np.ndarray
    provenance: str
    rejected: int = 0

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=float).ravel()
        if self.estimates.size == 0:
            raise ValueError("A bootstrap population cannot be empty")
        if np.any(~np.isfinite(self.estimates)) or np.any(self.estimates <= 0):
            raise ValueError("Bootstrap estimates must be positive and finite")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"Unknown provenance: {self.provenance!r}")

    def __len__(self):
        return int(self.estimates.size)

    def median(self):
        return float(np.median(self.estimates))

    def to_frame(self):
        return pd.DataFrame({"alpha_hat": self.estimates})


# ── Maximum likelihood ──────────────────────────────────────

def log_likelihood(pseudo, alpha):
    """Σ log k(α, t_i); `alpha` may be a scalar or an array of candidates."""
    alpha = np.asarray(alpha, dtype=float)
    log_t = np.log(np.sort(pseudo.t))
    # log(1 - t^α) for every (alpha, t) combination
    log_tail = np.log(-np.expm1(alpha[..., None] * log_t))
    total = pseudo.m * (np.log1p(alpha) - np.log(alpha)) + log_tail.sum(axis=-1)
    return float(total) if total.ndim == 0 else total


def mle(pseudo, bracket=DEFAULT_BRACKET):
    """
    Maximise the Kendall log-likelihood over α inside `bracket`.

    Bounded Brent search on log α, so xatol=1e-8 is a relative tolerance
    on α. Emits a BoundaryWarning when the maximiser is within 1% of an
    endpoint.
    """
    lo, hi = (check_alpha(b) for b in bracket)
    if lo >= hi:
        raise ValueError(f"Invalid bracket: {bracket}")

    result = minimize_scalar(
        lambda x: -log_likelihood(pseudo, math.exp(x)),
        bounds=(math.log(lo), math.log(hi)),
        method="bounded",
        options={"xatol": 1e-8},
    )
    alpha = float(min(max(math.exp(result.x), lo), hi))

    if alpha <= lo * 1.01 or alpha >= hi * 0.99:
        warnings.warn(
            f"MLE {alpha:.6g} lies within 1% of the bracket {bracket}",
            BoundaryWarning,
            stacklevel=2,
        )
    return alpha


# ── Seed equation ───────────────────────────────────────────

def seed_equation_residual(alpha, u, diffs):
    """|w1 α/(α+1) - (α d)^(1/(α+1))| with w1 = u + d."""
    alpha = check_alpha(alpha)
    diffs = np.asarray(diffs, dtype=float)
    lhs = (u + diffs) * alpha / (alpha + 1)
    rhs = (alpha * np.maximum(diffs, 0.0)) ** (1 / (alpha + 1))
    return np.abs(lhs - rhs)


def solve_seed_diff(alpha, u):
    """
    Seed difference d = w1 - u for each u.

    d is tiny next to u for small u and large α (about 7e-14 at u=0.01,
    α=5), so it is solved for directly instead of through w1. With x = log d
    the seed equation reads

        f(x) = log(u + eˣ) + log(α/(α+1)) - (log α + x)/(α+1) = 0

    f is convex, non-negative at x = (α+1) log(uα/(α+1)) - log α and
    negative at x = log((α+1)/α - u), so the root is unique.
    """
    alpha = check_alpha(alpha)
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("Seeds must lie strictly inside (0, 1)")
    log_ratio = math.log(alpha / (alpha + 1))
    log_alpha = math.log(alpha)
    power = 1 / (alpha + 1)
    log_u = np.log(u)

    def f(x):
        return np.logaddexp(log_u, x) + log_ratio - power * (log_alpha + x)

    lo = (alpha + 1) * (log_u + log_ratio) - log_alpha
    hi = np.log((alpha + 1) / alpha - u)
    x = bisect_monotone(f, lo, hi, decreasing=True)
    d = np.exp(x)
    return float(d) if d.ndim == 0 else d


def solve_seed_w1(alpha, u):
    """Second seed w1 = u + d for each u, i.e. (α+1)/α · K⁻¹(u)."""
    return u + solve_seed_diff(alpha, u)


# ── Paired estimators ───────────────────────────────────────

def alpha1_hat(sum_t, sum_w1):
    """α̂1 = Σ t / (Σ w1 - Σ t); rejects the replica when Σ w1 <= Σ t."""
    if sum_w1 <= sum_t:
        raise ReplicaRejected("sum", f"Σw1 = {sum_w1:.6g} does not exceed Σt = {sum_t:.6g}")
    return sum_t / (sum_w1 - sum_t)


def alpha2_hat(s2, diffs, m, bracket=DEFAULT_BRACKET):
    """
    Root α of (Σ log diffs + m log α) / (α + 1) - s2 on `bracket`.

    Returns (alpha, degenerate). Without a sign change on the bracket the
    endpoint with the smaller |g| is returned and `degenerate` is True.
    """
    diffs = np.asarray(diffs, dtype=float)
    if s2 >= 0:
        raise ValueError(f"s2 must be negative (a sum of log unit values), got {s2}")
    if m < 1 or diffs.size != m:
        raise ValueError(f"Expected {m} seed differences, got {diffs.size}")
    if np.any(~(diffs > 0)):
        raise ValueError("Seed differences w1 - u must be positive")

    log_diffs = float(np.sum(np.log(diffs)))

    def g(alpha):
        return (log_diffs + m * math.log(alpha)) / (alpha + 1) - s2

    lo, hi = bracket
    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0:
        return lo, False
    if g_hi == 0:
        return hi, False
    if (g_lo > 0) == (g_hi > 0):
        return (lo if abs(g_lo) <= abs(g_hi) else hi), True
    return float(bisect(g, lo, hi, xtol=1e-10)), False


# ── Replicas ────────────────────────────────────────────────

def _seed_pool(pseudo):
    # sorted, so replicas do not depend on the order of the input rows
    return np.sort(ecdf_values(pseudo))


def _seed_table(alpha_ref, seed_pool, config):
    """Seed differences for every pool value, or None when seeds are drawn uniformly."""
    if config.seed_draw == "uniform":
        return None
    return solve_seed_diff(alpha_ref, seed_pool)


def _draw_replica(pseudo, alpha_ref, seed_pool, table, stream, config):
    m = pseudo.m
    s1, s2 = pseudo.s1, pseudo.s2
    lo, hi = config.alpha_bracket
    rejected_sum = rejected_root = 0

    for _ in range(config.replica_retry_limit):
        if table is None:
            u = clamp_unit(stream.uniform(m), eps=EPS)
            diffs = solve_seed_diff(alpha_ref, u)
        else:
            idx = stream.integers(len(seed_pool), size=m)
            u, diffs = seed_pool[idx], table[idx]
        w1 = u + diffs

        try:
            a1 = alpha1_hat(s1, float(np.sum(w1)))
            if not lo <= a1 <= hi:
                raise ReplicaRejected("sum", f"α̂1 = {a1:.6g} outside {config.alpha_bracket}")
            if np.any(diffs <= 0):
                raise ReplicaRejected("root", "Seed difference underflowed to zero")
            a2, degenerate = alpha2_hat(s2, diffs, m, config.alpha_bracket)
            if degenerate:
                raise ReplicaRejected("root", "No α̂2 root inside the bracket")
        except ReplicaRejected as e:
            if e.reason == "sum":
                rejected_sum += 1
            else:
                rejected_root += 1
            continue

        return SeedReplica(
            w1=w1, u=u, diffs=diffs, alpha_used=alpha_ref, alpha1=a1, alpha2=a2,
            rejected_sum=rejected_sum, rejected_root=rejected_root,
        )

    raise ReplicaExhaustedError(config.replica_retry_limit, rejected_sum, rejected_root)


def replica_estimate(pseudo, alpha_ref, seed_pool, stream, config=None):
    """
    Draw one seed replica under `alpha_ref` and return (α̂, replica).

    s1 and s2 always come from the observed pseudo-sample; only the seeds
    are resampled. Rejected replicas are redrawn up to the retry limit.
    """
    config = config or AiConfig()
    alpha_ref = check_alpha(alpha_ref)
    seed_pool = np.asarray(seed_pool, dtype=float)
    table = _seed_table(alpha_ref, seed_pool, config)
    replica = _draw_replica(pseudo, alpha_ref, seed_pool, table, stream, config)
    return replica.estimate, replica


def frozen_population(pseudo, alpha_ref, n_replicas, stream, provenance, config=None):
    """Independent replicas under a fixed α, replica r on substream r."""
    config = config or AiConfig()
    alpha_ref = check_alpha(alpha_ref)
    if n_replicas < 1:
        raise ValueError(f"n_replicas must be at least 1, got {n_replicas}")
    seed_pool = _seed_pool(pseudo)
    table = _seed_table(alpha_ref, seed_pool, config)

    estimates = np.empty(n_replicas)
    rejected = 0
    for r in range(n_replicas):
        replica = _draw_replica(pseudo, alpha_ref, seed_pool, table, stream.substream(r), config)
        estimates[r] = replica.estimate
        rejected += replica.rejected_sum + replica.rejected_root
    return BootstrapPopulation(estimates, provenance, rejected=rejected)


def dummy_ai_estimate(pseudo, true_alpha, n_replicas, stream, config=None):
    """Validation mode: seeds solved under the known α; returns (median, population)."""
    population = frozen_population(pseudo, true_alpha, n_replicas, stream, "dummy", config)
    return population.median(), population


# ── Fixed point ─────────────────────────────────────────────

def ai_estimate(pseudo, config=None, stream=None):
    """
    Mean-field fixed-point estimator.

    Starts at the MLE, redraws a replica every step under the current
    smoothed α, and smooths the paired mean with coefficient η. Raw
    values of the last `tail_steps` steps form the tail population whose
    median is the estimate. Returns (estimate, trace, population).
    """
    config = config or AiConfig()
    if stream is None:
        raise ValueError("ai_estimate needs a RandomStream")
    seed_pool = _seed_pool(pseudo)
    eta = config.smoothing_eta

    current = mle(pseudo, config.alpha_bracket)
    trace = MeanFieldTrace(start=current)
    tail = []
    rejected = 0

    total_steps = config.burn_in_steps + config.tail_steps
    for step in range(1, total_steps + 1):
        table = _seed_table(current, seed_pool, config)
        replica = _draw_replica(pseudo, current, seed_pool, table, stream.substream(step), config)
        rejected += replica.rejected_sum + replica.rejected_root

        raw = replica.estimate
        updated = (1 - eta) * current + eta * raw
        if not (math.isfinite(raw) and math.isfinite(updated) and updated > 0):
            raise NonFiniteUpdateError(
                f"Mean-field update became non-finite at step {step} "
                f"(α̂1={replica.alpha1}, α̂2={replica.alpha2}, previous={current})",
                trace,
            )
        current = updated
        trace.record(step, replica.alpha1, replica.alpha2, current)
        if step > config.burn_in_steps:
            tail.append(raw)

    population = BootstrapPopulation(tail, "fixed-point-tail", rejected=rejected)
    return population.median(), trace, population
