"""
Experiment Engine — The (α, m) experimental plan and the Sklar demo.

Each cell of the plan draws `samples_per_cell` Clayton samples of size m
and runs the MLE next to either the dummy estimator (seeds under the true
α) or the fixed-point estimator plus a confidence interval.

Substream scheme (master seed → key path):
    (mode, round(α·10⁶), m, sample)        one sample
        ... , 0                            the bivariate data
        ... , 1 [, replica | step]         the estimator
        ... , 2 , j                        the j-th CI resample population
Keys depend only on the cell values and indices, so results never change
with plan ordering, plan restriction or worker count.
"""

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import expon, kstest, norm

from engine.copula import check_alpha, kendall_cdf, sample_pairs
from engine.estimators import (
    AiConfig,
    BoundaryWarning,
    NonFiniteUpdateError,
    ReplicaExhaustedError,
    ai_estimate,
    dummy_ai_estimate,
    mle,
)
from engine.intervals import (
    ci_resample_population,
    confidence_interval,
    consecutive_intervals,
    coverage,
)
from engine.pseudo import pseudo_sample
from engine.streams import RandomStream

MODES = ("dummy", "fixed-point")
MODE_KEYS = {"dummy": 0, "fixed-point": 1}
POOLINGS = ("consecutive", "independent")
DEFAULT_SEED = 42

DATA_STREAM, ESTIMATOR_STREAM, CI_STREAM = 0, 1, 2


# ── Plan ────────────────────────────────────────────────────

@dataclass
class ExperimentPlan:
    """The experimental grid and the protocol constants."""

    alphas: list = field(default_factory=lambda: [0.8, 1.7, 3.0, 5.0])
    sizes: list = field(default_factory=lambda: [20, 30, 100])
    samples_per_cell: int = 50
    replicas: int = 300
    ai_config: AiConfig = field(default_factory=AiConfig)
    master_seed: int = DEFAULT_SEED
    ci_level: float = 0.9
    ci_pooling: str = "consecutive"
    ci_pool_size: int = 3
    keep_traces: int = 1

    def __post_init__(self):
        self.alphas = [check_alpha(a) for a in self.alphas]
        self.sizes = [int(m) for m in self.sizes]
        if not self.alphas or not self.sizes:
            raise ValueError("A plan needs at least one α and one sample size")
        if any(m < 2 for m in self.sizes):
            raise ValueError(f"Sample sizes must be at least 2: {self.sizes}")
        if self.samples_per_cell < 1 or self.replicas < 1:
            raise ValueError("samples_per_cell and replicas must be at least 1")
        if not 0 < self.ci_level < 1:
            raise ValueError(f"ci_level must lie in (0, 1), got {self.ci_level}")
        if self.ci_pooling not in POOLINGS:
            raise ValueError(f"ci_pooling must be one of {POOLINGS}, got {self.ci_pooling!r}")
        if self.ci_pool_size < 1:
            raise ValueError("ci_pool_size must be at least 1")

    @classmethod
    def from_manifest(cls, manifest):
        """Build a plan from a loaded YAML/JSON document; missing keys keep defaults."""
        manifest = manifest or {}
        if not isinstance(manifest, dict):
            raise ValueError(f"plan must be a mapping, got {type(manifest).__name__}")
        defaults = cls()
        intervals = manifest.get("intervals") or {}
        if not isinstance(intervals, dict):
            raise ValueError(f"intervals must be a mapping, got {type(intervals).__name__}")
        return cls(
            alphas=manifest.get("alphas", defaults.alphas),
            sizes=manifest.get("sizes", defaults.sizes),
            samples_per_cell=int(manifest.get("samples_per_cell", defaults.samples_per_cell)),
            replicas=int(manifest.get("replicas", defaults.replicas)),
            ai_config=AiConfig.from_manifest(manifest.get("ai_config", {})),
            master_seed=int(manifest.get("master_seed", defaults.master_seed)),
            ci_level=float(intervals.get("level", defaults.ci_level)),
            ci_pooling=intervals.get("pooling", defaults.ci_pooling),
            ci_pool_size=int(intervals.get("pool_size", defaults.ci_pool_size)),
            keep_traces=int(manifest.get("keep_traces", defaults.keep_traces)),
        )

    def to_manifest(self):
        return {
            "alphas": list(self.alphas),
            "sizes": list(self.sizes),
            "samples_per_cell": self.samples_per_cell,
            "replicas": self.replicas,
            "master_seed": self.master_seed,
            "keep_traces": self.keep_traces,
            "ai_config": self.ai_config.to_manifest(),
            "intervals": {
                "level": self.ci_level,
                "pooling": self.ci_pooling,
                "pool_size": self.ci_pool_size,
            },
        }

    def cells(self):
        return [(alpha, m) for alpha in self.alphas for m in self.sizes]


def sample_stream(master_seed, mode, alpha, m, sample_index):
    root = RandomStream(master_seed, MODE_KEYS[mode])
    return root.substream(int(round(alpha * 1_000_000)), m, sample_index)


# ── Per-sample records ──────────────────────────────────────

@dataclass
class SampleRecord:
    sample_id: int
    ai_estimate: float = math.nan
    mle_estimate: float = math.nan
    mle_at_boundary: bool = False
    population: object = None
    ci_populations: list = field(default_factory=list)
    interval: object = None
    trace: object = None
    rejected: int = 0
    error: str = None

    @property
    def ok(self):
        return self.error is None


@dataclass
class CellResult:
    """All sample records of one (α, m) cell plus their aggregates."""

    alpha: float
    m: int
    mode: str
    records: list
    intervals: list = field(default_factory=list)
    ai_mean: float = math.nan
    ai_std: float = math.nan
    mle_mean: float = math.nan
    mle_std: float = math.nan
    coverage: float = math.nan
    single_sample: bool = False

    @property
    def n_failed(self):
        return sum(not r.ok for r in self.records)

    @property
    def valid_records(self):
        return [r for r in self.records if r.ok]


def _mean_std(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    if values.size == 1:
        return float(values[0]), 0.0
    return float(np.mean(values)), float(np.std(values, ddof=1))


def run_sample(alpha, m, plan, mode, sample_index):
    """One sample of a cell: data, pseudo-sample, MLE and the AI estimate."""
    stream = sample_stream(plan.master_seed, mode, alpha, m, sample_index)
    record = SampleRecord(sample_id=sample_index)
    config = plan.ai_config

    try:
        pseudo = pseudo_sample(sample_pairs(alpha, m, stream.substream(DATA_STREAM)))

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", BoundaryWarning)
            record.mle_estimate = mle(pseudo, config.alpha_bracket)
            record.mle_at_boundary = any(issubclass(w.category, BoundaryWarning) for w in caught)

            estimator_stream = stream.substream(ESTIMATOR_STREAM)
            if mode == "dummy":
                estimate, population = dummy_ai_estimate(
                    pseudo, alpha, plan.replicas, estimator_stream, config
                )
                record.population = population
                record.rejected = population.rejected
            else:
                estimate, trace, tail = ai_estimate(pseudo, config, estimator_stream)
                record.population = tail
                record.rejected = tail.rejected
                if sample_index < plan.keep_traces:
                    record.trace = trace

                ci_stream = stream.substream(CI_STREAM)
                n_pools = plan.ci_pool_size if plan.ci_pooling == "independent" else 1
                record.ci_populations = [
                    ci_resample_population(pseudo, estimate, plan.replicas, ci_stream.substream(j), config)
                    for j in range(n_pools)
                ]
                if plan.ci_pooling == "independent":
                    record.interval = confidence_interval(record.ci_populations, plan.ci_level)
        record.ai_estimate = estimate

    except NonFiniteUpdateError as e:
        record.error = f"non-finite update: {e}"
    except ReplicaExhaustedError as e:
        record.error = f"replica exhaustion: {e}"
    except (ValueError, RuntimeError, FloatingPointError) as e:
        record.error = f"{type(e).__name__}: {e}"
    return record


def assemble_cell(alpha, m, mode, records, plan):
    """Attach intervals and compute the aggregates from index-ordered records."""
    records = sorted(records, key=lambda r: r.sample_id)
    cell = CellResult(alpha=alpha, m=m, mode=mode, records=records)
    valid = cell.valid_records

    cell.ai_mean, cell.ai_std = _mean_std([r.ai_estimate for r in valid])
    cell.mle_mean, cell.mle_std = _mean_std([r.mle_estimate for r in valid])
    cell.single_sample = len(valid) == 1

    if mode == "fixed-point" and valid:
        if plan.ci_pooling == "consecutive":
            pools = [r.ci_populations[0] for r in valid]
            cell.intervals = consecutive_intervals(pools, plan.ci_level, plan.ci_pool_size)
            for record, interval in zip(valid, cell.intervals):
                record.interval = interval
        else:
            cell.intervals = [r.interval for r in valid]
        cell.coverage = coverage(cell.intervals, alpha)
    return cell


def _run_task(args):
    alpha, m, plan, mode, sample_index = args
    return run_sample(alpha, m, plan, mode, sample_index)


def _map_samples(tasks, jobs):
    if jobs <= 1:
        return [_run_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks, chunksize=1))


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"Mode must be one of {MODES}, got {mode!r}")


def run_cell(alpha, m, plan, mode, jobs=1):
    """Evaluate one (α, m) cell."""
    _check_mode(mode)
    alpha = check_alpha(alpha)
    tasks = [(alpha, int(m), plan, mode, k) for k in range(plan.samples_per_cell)]
    return assemble_cell(alpha, int(m), mode, _map_samples(tasks, jobs), plan)


def run_plan(plan, mode, jobs=1):
    """Evaluate every cell; the result list follows plan.cells() order."""
    _check_mode(mode)
    tasks = [
        (alpha, m, plan, mode, k)
        for alpha, m in plan.cells()
        for k in range(plan.samples_per_cell)
    ]
    records = _map_samples(tasks, jobs)

    results = []
    per_cell = plan.samples_per_cell
    for index, (alpha, m) in enumerate(plan.cells()):
        chunk = records[index * per_cell:(index + 1) * per_cell]
        results.append(assemble_cell(alpha, m, mode, chunk, plan))
    return results


# ── Diagnostics ────────────────────────────────────────────

def correction_table(cell, max_degree=5):
    """Mean-field corrections AI - MLE against the MLE start, with a polynomial fit."""
    valid = cell.valid_records
    mle_values = np.array([r.mle_estimate for r in valid])
    ai_values = np.array([r.ai_estimate for r in valid])
    correction = ai_values - mle_values
    fit = correction.copy()
    if len(valid) >= 2 and np.ptp(mle_values) > 0:
        degree = min(max_degree, len(valid) - 1)
        fit = np.polynomial.Polynomial.fit(mle_values, correction, degree)(mle_values)
    return pd.DataFrame({
        "alpha": cell.alpha,
        "m": cell.m,
        "sample_id": [r.sample_id for r in valid],
        "mle": mle_values,
        "ai": ai_values,
        "correction": correction,
        "fit": fit,
    })


def histogram_table(cell, bins=20, scale=100.0):
    """Bin counts of estimates ×100: AI and MLE across samples, plus one population."""
    valid = cell.valid_records
    series = {
        "ai": [r.ai_estimate for r in valid],
        "mle": [r.mle_estimate for r in valid],
    }
    if valid and valid[0].population is not None:
        series["population"] = valid[0].population.estimates

    frames = []
    for name, values in series.items():
        values = np.asarray(values, dtype=float) * scale
        if values.size == 0:
            continue
        counts, edges = np.histogram(values, bins=bins)
        frames.append(pd.DataFrame({
            "alpha": cell.alpha,
            "m": cell.m,
            "estimator": name,
            "bin_left": edges[:-1],
            "bin_right": edges[1:],
            "count": counts,
        }))
    if not frames:
        return pd.DataFrame(columns=["alpha", "m", "estimator", "bin_left", "bin_right", "count"])
    return pd.concat(frames, ignore_index=True)


# ── Margins & Sklar composition ─────────────────────────────

@dataclass(frozen=True)
class MarginSpec:
    """A continuous margin: negative exponential with rate λ or Gaussian (μ, σ)."""

    kind: str
    rate: float = None
    mu: float = None
    sigma: float = None

    def __post_init__(self):
        if self.kind == "negative-exponential":
            if self.rate is None or not self.rate > 0:
                raise ValueError(f"Negative exponential rate must be positive, got {self.rate}")
        elif self.kind == "gaussian":
            if self.mu is None or self.sigma is None or not self.sigma > 0:
                raise ValueError(f"Gaussian margin needs μ and σ > 0, got {self.mu}, {self.sigma}")
        else:
            raise ValueError(f"Unknown margin kind: {self.kind!r}")

    @classmethod
    def negative_exponential(cls, rate):
        return cls("negative-exponential", rate=float(rate))

    @classmethod
    def gaussian(cls, mu, sigma):
        return cls("gaussian", mu=float(mu), sigma=float(sigma))

    @classmethod
    def parse(cls, text):
        """Parse `negexp:44` or `gauss:0.5,0.15`."""
        kind, _, params = text.partition(":")
        values = [float(p) for p in params.split(",") if p.strip()]
        if kind in ("negexp", "negative-exponential") and len(values) == 1:
            return cls.negative_exponential(values[0])
        if kind in ("gauss", "gaussian") and len(values) == 2:
            return cls.gaussian(*values)
        raise ValueError(f"Cannot parse margin {text!r} (expected negexp:λ or gauss:μ,σ)")

    def quantile(self, u):
        if self.kind == "negative-exponential":
            # F(x) = 1 - exp(-λx), so F⁻¹(u) = -log(1 - u)/λ
            return expon.ppf(u, scale=1.0 / self.rate)
        return norm.ppf(u, loc=self.mu, scale=self.sigma)


FIGURE_MARGINS = (MarginSpec.negative_exponential(44), MarginSpec.gaussian(0.5, 0.15))


def sklar_compose(margins, alpha, m, stream):
    """Draw m Clayton pairs and push them through the margin quantile functions."""
    first, second = margins
    u = sample_pairs(alpha, m, stream)
    return np.column_stack((first.quantile(u[:, 0]), second.quantile(u[:, 1])))


def kendall_distance(pseudo, alpha):
    """Sup-distance between the pseudo-sample ECDF and K(·; α)."""
    alpha = check_alpha(alpha)
    return float(kstest(pseudo.t, lambda t: kendall_cdf(alpha, t)).statistic)


def kendall_ecdf_table(pseudo, alpha):
    """ECDF of the t's next to Kendall's function at each observed t."""
    t = np.sort(pseudo.t)
    return pd.DataFrame({
        "t": t,
        "ecdf": np.searchsorted(t, t, side="right") / t.size,
        "kendall_cdf": kendall_cdf(alpha, t),
    })
