from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from sbbeta import measure
from sbbeta.measure import ProcessParams
from sbbeta.quadrature import QuadratureConfig, QuadratureError, tanh_sinh

# [DERIVED] mpmath (30 digits) on the w-space integral, frozen.
ROUND_DENSITY_ORACLE = [
    ((0.3, 2, 0.5), 0.90479803401363816),
    ((0.05, 4, 0.5), 2.0812222442726288),
    ((0.2, 3, 2.0), 1.7526670249212513),
    ((0.01, 6, 3.0), 15.828723254468264),
    ((0.7, 5, 1.5), 0.001065755060770529),
    ((0.001, 10, 1.0), 98.689161235201985),
]
# [DERIVED] mpmath: int f_i(pi) (1 - (1 - pi)**5) dpi at alpha = 2.
XI_PROFILE_ORACLE = [0.71428571428571429, 0.58027210884353741, 0.45092430623042868]


def test_levy_density_worked_examples():
    assert measure.levy_density(0.5, 1.0) == pytest.approx(2.0, rel=1e-14)
    assert measure.levy_density(0.25, 2.0) == pytest.approx(6.0, rel=1e-14)
    assert measure.levy_density(0.9, 3.0) == pytest.approx(1 / 30, rel=1e-12)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, np.nan])
def test_levy_density_rejects_closed_interval(bad):
    with pytest.raises(ValueError):
        measure.levy_density(bad, 1.0)


@pytest.mark.parametrize("alpha", [0.0, -1.0, np.inf, np.nan])
def test_bad_alpha(alpha):
    with pytest.raises(ValueError):
        measure.levy_density(0.5, alpha)
    with pytest.raises(ValueError):
        ProcessParams(alpha, 1.0)


def test_round_density_worked_examples():
    e = math.exp(-1.0)
    assert measure.round_density(0.3, 1, 2.0) == pytest.approx(1.4, rel=1e-14)
    assert measure.round_density(e, 2, 1.0) == pytest.approx(1.0, rel=1e-9)
    assert measure.round_density(e, 3, 1.0) == pytest.approx(0.5, rel=1e-9)


@pytest.mark.parametrize("args,want", ROUND_DENSITY_ORACLE)
def test_round_density_matches_high_precision_oracle(args, want):
    p, i, a = args
    assert measure.round_density(p, i, a) == pytest.approx(want, rel=1e-9)


def test_alpha_one_closed_form():
    pis = np.linspace(0.01, 0.99, 50)
    got = measure.round_densities(pis, 12, 1.0)
    want = np.stack([np.log(1 / pis) ** (i - 1) / math.factorial(i - 1) for i in range(1, 13)], axis=-1)
    np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-300)


def test_extreme_weights_and_small_alpha():
    # endpoint singularity (w - pi)**(alpha - 1) with alpha << 1, and pi near 0
    vals = measure.round_densities(np.array([0.99935, 1e-100]), 6, 0.068)
    assert np.all(np.isfinite(vals)) and np.all(vals > 0)


@pytest.mark.parametrize("i,alpha", [(1, 0.5), (2, 0.5), (3, 2.0), (5, 1.0), (8, 3.0)])
def test_round_densities_normalize(i, alpha):
    # integrate in u = ln(1/pi) so deep rounds (mass near 0) are resolved
    def g(u):
        p = math.exp(-u)
        return float(measure.round_density(p, i, alpha)) * p

    upper = 60.0 + 20.0 * i / alpha
    total, _ = integrate.quad(g, 0, upper, limit=400)
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("i,alpha", [(2, 0.7), (4, 2.0), (6, 1.3)])
def test_joint_density_marginalizes_to_round_density(i, alpha):
    p = 0.05
    got, _ = integrate.quad(lambda w: float(measure.joint_round_density(p, w, i, alpha)), p, 1, limit=200)
    assert got == pytest.approx(float(measure.round_density(p, i, alpha)), rel=1e-6)


def test_joint_density_support():
    assert measure.joint_round_density(0.5, 0.4, 3, 1.0) == 0.0
    with pytest.raises(ValueError):
        measure.joint_round_density(0.2, 0.5, 1, 1.0)


def test_expected_round_weight_matches_density_mean():
    for i, alpha in ((1, 2.0), (3, 0.5), (4, 3.0)):
        m, _ = integrate.quad(lambda u: float(measure.round_density(math.exp(-u), i, alpha)) * math.exp(-2 * u),
                              0, 200, limit=400)
        assert measure.expected_round_weight(i, alpha) == pytest.approx(m, rel=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
def test_density_sum_identity(alpha):
    pis = np.linspace(0.01, 0.99, 99)
    R = int(math.ceil(math.log(1e-12) / math.log(alpha / (1 + alpha)))) + 40
    total = measure.round_densities(pis, R, alpha).sum(axis=-1)
    np.testing.assert_allclose(total, measure.levy_density(pis, alpha), rtol=1e-6)


def test_tail_density():
    pis = np.linspace(0.05, 0.95, 10)
    np.testing.assert_allclose(measure.tail_density(pis, 2.0, 0), measure.levy_density(pis, 2.0))
    np.testing.assert_allclose(measure.tail_density(pis, 2.0, 1), 2.0 * (1 - pis) ** 2 / pis, rtol=1e-8)
    assert np.all(measure.tail_density(pis, 2.0, 400) >= 0)


def test_observed_rate_profile_oracle():
    np.testing.assert_allclose(measure.observed_rate_profile(2.0, 5, 3), XI_PROFILE_ORACLE, rtol=1e-10)


@pytest.mark.parametrize("alpha,gamma,M", [(1.0, 1.0, 1), (1.0, 1.0, 3), (3.0, 4.0, 10), (0.4, 2.0, 50)])
def test_xi_sums_to_expected_observed(alpha, gamma, M):
    p = ProcessParams(alpha, gamma)
    R = 60
    while measure.observed_rate_tail_bound(R, p, M) > 1e-12:
        R += 20
    got = gamma * measure.observed_rate_profile(alpha, M, R).sum()
    assert got == pytest.approx(measure.expected_observed_atoms(p, M), rel=1e-9)


def test_xi_zero_draws_and_single_round():
    assert np.all(measure.observed_rate_profile(1.0, 0, 5) == 0)
    assert measure.observed_atom_rate_xi(1, ProcessParams(2.0, 3.0), 4) == pytest.approx(3.0 * 4 / 6)


def test_observed_fraction_against_beta_expectation():
    alpha, M, w = 1.7, 6, 0.4
    want, _ = integrate.quad(lambda v: alpha * (1 - v) ** (alpha - 1) * (1 - (1 - v * w) ** M), 0, 1)
    assert float(measure.observed_fraction(w, alpha, M)) == pytest.approx(want, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(p=st.floats(1e-6, 1 - 1e-6), i=st.integers(2, 12), alpha=st.floats(0.2, 6.0))
def test_round_density_positive_and_below_levy(p, i, alpha):
    f = float(measure.round_density(p, i, alpha))
    assert 0 <= f <= float(measure.levy_density(p, alpha)) * (1 + 1e-9)


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.2, 5.0), M=st.integers(1, 40))
def test_xi_profile_nonincreasing_in_round(alpha, M):
    prof = measure.observed_rate_profile(alpha, M, 20)
    assert np.all(prof > 0)
    assert np.all(np.diff(prof) <= 1e-12)


def test_quadrature_endpoint_singularity():
    val = tanh_sinh(lambda x, lo, hi: lo ** -0.5, 0.0, 1.0)
    assert val == pytest.approx(2.0, rel=1e-10)


def test_quadrature_vector_valued():
    val = tanh_sinh(lambda x, lo, hi: np.stack([x, x * x], axis=-1), 0.0, 2.0)
    np.testing.assert_allclose(val, [2.0, 8 / 3], rtol=1e-12)


def test_quadrature_raises_when_unconverged():
    with pytest.raises(QuadratureError):
        tanh_sinh(lambda x, lo, hi: np.sin(1 / lo), 0.0, 1.0, QuadratureConfig(rtol=1e-14, atol=0, max_level=3))
