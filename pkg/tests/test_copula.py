"""Clayton primitives: closed forms, derivative cross-checks and the sampler."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.stats import kendalltau

from engine.copula import (
    check_alpha,
    conditional_cdf,
    copula_cdf,
    copula_pdf,
    generator_phi,
    invert_seeds,
    kendall_cdf,
    kendall_inverse,
    kendall_pdf,
    kendall_tau,
    sample_pair,
    sample_pairs,
)
from engine.streams import RandomStream

from conftest import TEST_ALPHAS

valid_alpha = st.floats(min_value=0.05, max_value=30.0, allow_nan=False, allow_infinity=False)
open_unit = st.floats(min_value=1e-6, max_value=1 - 1e-6, allow_nan=False)


def _mixed_difference(alpha, u, v, h=1e-4):
    return (
        copula_cdf(alpha, u + h, v + h)
        - copula_cdf(alpha, u + h, v - h)
        - copula_cdf(alpha, u - h, v + h)
        + copula_cdf(alpha, u - h, v - h)
    ) / (4 * h * h)


# ── Parameter validation ────────────────────────────────────

@pytest.mark.parametrize("alpha", [0.0, -1.0, math.nan, math.inf])
def test_invalid_alpha_rejected(alpha):
    with pytest.raises(ValueError):
        check_alpha(alpha)


# ── Generator & copula ──────────────────────────────────────

@pytest.mark.parametrize("alpha, u, expected", [
    (1.0, 1.0, 0.0),
    (1.0, 0.5, 1.0),
    (2.0, 0.5, 1.5),
])
def test_generator_values(alpha, u, expected):
    assert generator_phi(alpha, u) == pytest.approx(expected, abs=1e-15)


def test_generator_rejects_zero():
    with pytest.raises(ValueError):
        generator_phi(1.0, 0.0)


@pytest.mark.parametrize("alpha, u1, u2, expected", [
    (1.0, 1.0, 0.3, 0.3),
    (1.0, 0.5, 0.5, 1 / 3),
    (2.0, 0.5, 0.5, 1 / math.sqrt(7)),
])
def test_copula_cdf_values(alpha, u1, u2, expected):
    assert copula_cdf(alpha, u1, u2) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("alpha", TEST_ALPHAS)
def test_copula_cdf_uniform_margins(alpha):
    u = np.linspace(0.01, 0.99, 99)
    assert np.allclose(copula_cdf(alpha, u, 1.0), u, rtol=0, atol=1e-12)
    assert np.allclose(copula_cdf(alpha, 1.0, u), u, rtol=0, atol=1e-12)


def test_copula_cdf_zero_on_lower_boundary():
    assert copula_cdf(2.0, 0.0, 0.4) == 0.0
    assert copula_cdf(2.0, 0.4, 0.0) == 0.0


@given(alpha=valid_alpha, u=open_unit, v=open_unit)
def test_copula_cdf_between_independence_and_upper_bound(alpha, u, v):
    value = copula_cdf(alpha, u, v)
    assert u * v * (1 - 1e-9) <= value <= min(u, v) * (1 + 1e-12)


@given(alpha=valid_alpha, u=open_unit, v=open_unit)
def test_copula_cdf_symmetry(alpha, u, v):
    assert math.isclose(copula_cdf(alpha, u, v), copula_cdf(alpha, v, u), rel_tol=1e-12)


def test_copula_pdf_closed_form():
    assert copula_pdf(1.0, 0.5, 0.5) == pytest.approx(32 / 27, rel=1e-12)


@pytest.mark.parametrize("alpha, u, v", [
    (2.0, 0.5, 0.5),
    (1.0, 0.9, 0.9),
    (0.8, 0.3, 0.7),
    (0.8, 0.7, 0.3),
    (2.0, 0.3, 0.5),
    (2.0, 0.7, 0.7),
])
def test_copula_pdf_matches_mixed_difference(alpha, u, v):
    assert copula_pdf(alpha, u, v) == pytest.approx(_mixed_difference(alpha, u, v), rel=1e-5)


def test_copula_pdf_saturates_near_origin():
    value = copula_pdf(5.0, 0.0, 0.0)
    assert value > 1e6 and not math.isnan(value)


# ── Conditional distribution & sampler ──────────────────────

def test_conditional_cdf_values():
    assert conditional_cdf(1.0, 1.0, 0.5) == pytest.approx(1.0, abs=1e-9)
    assert conditional_cdf(1.0, 0.5, 0.5) == pytest.approx(4 / 9, rel=1e-12)


def test_invert_seeds_closed_form():
    u1, u2 = invert_seeds(2.0, 0.5, 0.5)
    assert float(u1) == 0.5
    # [1 + 4 (2^(2/3) - 1)]^(-1/2)
    assert float(u2) == pytest.approx((1 + 4 * (2 ** (2 / 3) - 1)) ** -0.5, rel=1e-14)
    assert float(u2) == pytest.approx(0.546391, abs=1e-6)
    assert conditional_cdf(2.0, u2, 0.5) == pytest.approx(0.5, abs=1e-12)


def test_invert_seeds_top_quantile():
    _, u2 = invert_seeds(1.0, 0.3, 1.0)
    assert float(u2) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("alpha", TEST_ALPHAS)
def test_conditional_roundtrip_reproduces_seed(alpha):
    seeds = RandomStream(2024).substream(int(alpha * 10)).uniform((10_000, 2))
    u1, u2 = invert_seeds(alpha, seeds[:, 0], seeds[:, 1])
    error = np.abs(conditional_cdf(alpha, u2, u1) - seeds[:, 1])
    assert error.max() < 1e-10


def test_sample_pair_is_deterministic():
    assert sample_pair(1.7, RandomStream(42, 1)) == sample_pair(1.7, RandomStream(42, 1))
    u1, u2 = sample_pair(1.7, RandomStream(42, 1))
    assert 0 < u1 < 1 and 0 < u2 < 1


def test_sample_pairs_shape_and_determinism():
    a = sample_pairs(0.8, 50, RandomStream(42))
    b = sample_pairs(0.8, 50, RandomStream(42))
    assert a.shape == (50, 2)
    assert np.array_equal(a, b)


def test_sample_pairs_rejects_empty():
    with pytest.raises(ValueError):
        sample_pairs(1.0, 0, RandomStream(1))


@pytest.mark.slow
@pytest.mark.parametrize("alpha", TEST_ALPHAS)
def test_empirical_kendall_tau(alpha):
    pairs = sample_pairs(alpha, 100_000, RandomStream(7).substream(int(alpha * 10)))
    tau = kendalltau(pairs[:, 0], pairs[:, 1]).statistic
    assert abs(tau - kendall_tau(alpha)) < 0.01


# ── Kendall's function ──────────────────────────────────────

@pytest.mark.parametrize("alpha, t, expected", [
    (0.8, 1.0, 1.0),
    (1.0, 0.5, 0.75),
    (2.0, 0.5, 0.6875),
])
def test_kendall_cdf_values(alpha, t, expected):
    assert kendall_cdf(alpha, t) == pytest.approx(expected, rel=1e-14)


def test_kendall_pdf_values():
    assert kendall_pdf(1.0, 1.0) == 0.0
    assert kendall_pdf(1.0, 0.5) == pytest.approx(1.0, rel=1e-14)


def test_kendall_pdf_is_derivative_at_reference_point():
    h = 1e-6
    numeric = (kendall_cdf(3.0, 0.4 + h) - kendall_cdf(3.0, 0.4 - h)) / (2 * h)
    assert numeric == pytest.approx(kendall_pdf(3.0, 0.4), abs=1e-6)


@pytest.mark.parametrize("alpha", TEST_ALPHAS)
def test_kendall_cdf_increasing_with_matching_density(alpha):
    t = np.round(np.arange(0.01, 1.0, 0.01), 2)
    values = kendall_cdf(alpha, t)
    assert np.all(np.diff(values) > 0)
    h = 1e-6
    numeric = (kendall_cdf(alpha, t + h) - kendall_cdf(alpha, t - h)) / (2 * h)
    assert np.allclose(numeric, kendall_pdf(alpha, t), rtol=0, atol=1e-6)


@pytest.mark.parametrize("alpha", TEST_ALPHAS)
def test_kendall_pdf_integrates_to_one(alpha):
    total, _ = quad(lambda t: kendall_pdf(alpha, t), 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_kendall_inverse_values():
    assert kendall_inverse(1.0, 0.75) == pytest.approx(0.5, abs=1e-14)
    assert kendall_inverse(0.8, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert abs(kendall_cdf(0.8, kendall_inverse(0.8, 1.0)) - 1.0) <= 1e-12
    assert kendall_inverse(0.8, 0.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("alpha", TEST_ALPHAS)
def test_kendall_inverse_roundtrip(alpha):
    u = np.linspace(0.001, 0.999, 500)
    assert np.abs(kendall_cdf(alpha, kendall_inverse(alpha, u)) - u).max() < 1e-10


@given(alpha=valid_alpha, u=st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=200)
def test_kendall_inverse_stays_in_unit_interval(alpha, u):
    t = kendall_inverse(alpha, u)
    assert 0.0 <= t <= 1.0
    # K(t) >= t, so the inverse never exceeds its argument
    assert t <= u + 1e-15


@pytest.mark.parametrize("alpha, expected", [
    (2.0, 0.5),
    (0.8, 0.8 / 2.8),
    (1e-12, 0.0),
])
def test_kendall_tau_formula(alpha, expected):
    assert kendall_tau(alpha) == pytest.approx(expected, abs=1e-12)
