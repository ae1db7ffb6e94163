"""
Copula Engine — Clayton copula primitives.
Distribution and density functions, the generator, Kendall's function and
its inverse, and the conditional-inversion sampler.

All functions broadcast over numpy arrays and accept plain floats.
Unit-interval outputs are clamped into [EPS, 1 - EPS].
"""

import math

import numpy as np

EPS = 1e-12
MAX_BISECTIONS = 200


def check_alpha(alpha):
    """Validate a Clayton parameter and return it as a float."""
    value = float(alpha)
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"Clayton parameter must be positive and finite, got {alpha!r}")
    return value


def clamp_unit(values, eps=EPS):
    return np.clip(values, eps, 1.0 - eps)


def _check_closed_unit(name, values):
    arr = np.asarray(values, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def _scalar(result):
    """Unwrap 0-d arrays so scalar calls return floats."""
    return float(result) if np.ndim(result) == 0 else result


def bisect_monotone(func, lo, hi, decreasing=False, max_iter=MAX_BISECTIONS):
    """
    Vectorized bisection for functions with a single sign change on [lo, hi].

    Halves every bracket until its midpoint collapses onto an endpoint
    (machine precision) or max_iter is reached. `decreasing=True` means
    func is positive left of the root.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all((mid <= lo) | (mid >= hi)):
            break
        value = func(mid)
        go_right = value > 0 if decreasing else value < 0
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return mid


# ── Generator & copula ──────────────────────────────────────

def generator_phi(alpha, u):
    """Clayton generator (u^-α - 1) / α, with φ(1) = 0."""
    alpha = check_alpha(alpha)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0) or np.any(u > 1):
        raise ValueError("Generator argument must lie in (0, 1]")
    return _scalar(np.expm1(-alpha * np.log(u)) / alpha)


def _log_sum_minus_one(alpha, u1, u2):
    """log(u1^-α + u2^-α - 1), stable when the powers overflow."""
    a = -alpha * np.log(u1)
    b = -alpha * np.log(u2)
    s = np.logaddexp(a, b)
    return s + np.log1p(-np.exp(-s))


def copula_cdf(alpha, u1, u2):
    """C_α(u1, u2) = (u1^-α + u2^-α - 1)^(-1/α)."""
    alpha = check_alpha(alpha)
    u1 = _check_closed_unit("u1", u1)
    u2 = _check_closed_unit("u2", u2)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_a = _log_sum_minus_one(alpha, u1, u2)
        result = np.exp(-log_a / alpha)
    # C(0, v) = 0 on the lower boundary
    result = np.where((u1 == 0) | (u2 == 0), 0.0, result)
    return _scalar(result)


def copula_pdf(alpha, u1, u2):
    """
    Copula density c_α(u1, u2).

    Evaluated in log space; near the origin the density saturates to +inf
    instead of raising on overflow.
    """
    alpha = check_alpha(alpha)
    u1 = clamp_unit(_check_closed_unit("u1", u1))
    u2 = clamp_unit(_check_closed_unit("u2", u2))
    log_a = _log_sum_minus_one(alpha, u1, u2)
    log_c = (
        math.log(alpha + 1)
        - (alpha + 1) * (np.log(u1) + np.log(u2))
        - (1 / alpha + 2) * log_a
    )
    with np.errstate(over="ignore"):
        return _scalar(np.exp(log_c))


def conditional_cdf(alpha, u2, given_u1):
    """C_α(u2 | u1) = (u1^-α + u2^-α - 1)^(-1/α - 1) u1^(-α - 1)."""
    alpha = check_alpha(alpha)
    u1 = clamp_unit(_check_closed_unit("given_u1", given_u1))
    u2 = clamp_unit(_check_closed_unit("u2", u2))
    log_a = _log_sum_minus_one(alpha, u1, u2)
    log_value = -(1 / alpha + 1) * log_a - (alpha + 1) * np.log(u1)
    return _scalar(np.exp(log_value))


# ── Sampling ────────────────────────────────────────────────

def invert_seeds(alpha, v1, v2):
    """
    Map independent uniform seeds (v1, v2) to a Clayton pair (u1, u2).

    u1 = v1 and u2 solves C_α(u2 | u1) = v2 in closed form:
    u2 = [1 + u1^-α (v2^(-α/(α+1)) - 1)]^(-1/α).
    """
    alpha = check_alpha(alpha)
    u1 = clamp_unit(np.asarray(v1, dtype=float))
    v2 = clamp_unit(np.asarray(v2, dtype=float))
    with np.errstate(over="ignore"):
        # log of u1^-α (v2^(-α/(α+1)) - 1), kept finite for tiny u1
        log_term = -alpha * np.log(u1) + np.log(np.expm1(-alpha / (alpha + 1) * np.log(v2)))
        log_inner = np.logaddexp(0.0, log_term)
        u2 = np.exp(-log_inner / alpha)
    return clamp_unit(u1), clamp_unit(u2)


def sample_pair(alpha, stream):
    """Draw one (u1, u2) pair from Clayton(α) using two uniform seeds."""
    v1, v2 = stream.uniform(2)
    u1, u2 = invert_seeds(alpha, v1, v2)
    return float(u1), float(u2)


def sample_pairs(alpha, m, stream):
    """Draw m pairs at once; returns an (m, 2) array with columns u1, u2."""
    if m < 1:
        raise ValueError(f"Sample size must be positive, got {m}")
    seeds = stream.uniform((int(m), 2))
    u1, u2 = invert_seeds(alpha, seeds[:, 0], seeds[:, 1])
    return np.column_stack((u1, u2))


# ── Kendall's function ──────────────────────────────────────

def kendall_cdf(alpha, t):
    """K(t) = t (α - t^α + 1) / α on [0, 1]."""
    alpha = check_alpha(alpha)
    t = _check_closed_unit("t", t)
    return _scalar(t * (alpha - t ** alpha + 1) / alpha)


def kendall_pdf(alpha, t):
    """k(t) = (α + 1)(1 - t^α) / α, the derivative of K."""
    alpha = check_alpha(alpha)
    t = _check_closed_unit("t", t)
    return _scalar((alpha + 1) * -np.expm1(alpha * np.log(np.maximum(t, 1e-300))) / alpha)


def kendall_inverse(alpha, u):
    """Solve K(t) = u for t on [0, 1] by bisection to machine precision."""
    alpha = check_alpha(alpha)
    u = _check_closed_unit("u", u)
    t = bisect_monotone(
        lambda t: t * (alpha - t ** alpha + 1) / alpha - u,
        np.zeros_like(u), np.ones_like(u),
    )
    return _scalar(t)


def kendall_tau(alpha):
    """Kendall's tau of the Clayton copula, α / (α + 2)."""
    alpha = check_alpha(alpha)
    return alpha / (alpha + 2)
