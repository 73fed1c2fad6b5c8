from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbbeta import construct, truncation
from sbbeta.measure import ProcessParams, expected_observed_atoms

P11 = ProcessParams(1.0, 1.0)
P34 = ProcessParams(3.0, 4.0)


def test_zero_draws_give_zero():
    for R in (0, 3, 10):
        assert truncation.theorem3_bound(P34, 0, R) == 0.0
        assert truncation.legacy_bound(P34, 0, R) == 0.0
    assert truncation.simple_function_bound(P11, 0, 0, 2) == 0.0


def test_closed_forms():
    assert truncation.theorem3_bound(P11, 1, 0) == pytest.approx(1 - math.exp(-1), abs=1e-9)
    assert truncation.corollary1_bound(P11, 1, 0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert truncation.corollary1_bound(P34, 500, 20) == pytest.approx(0.99824, abs=5e-6)
    assert truncation.legacy_bound(P34, 500, 20) == pytest.approx(-math.expm1(-2 * 2000 * 0.75**20), rel=1e-14)
    assert truncation.legacy_bound(P34, 500, 20) == pytest.approx(0.999997, abs=1e-6)
    assert truncation.expected_missing_ones(ProcessParams(1.0, 2.0), 10, 3) == pytest.approx(2.5)
    assert truncation.expected_missing_ones(P34, 7, 0) == pytest.approx(28.0)
    assert truncation.corollary1_bound(P34, 500, 2000) < 1e-200


@pytest.mark.parametrize("alpha,gamma,M", [(1.0, 1.0, 1), (1.0, 1.0, 3), (3.0, 4.0, 10), (0.5, 2.0, 100)])
def test_theorem3_at_zero_rounds(alpha, gamma, M):
    p = ProcessParams(alpha, gamma)
    want = -math.expm1(-expected_observed_atoms(p, M))
    assert truncation.theorem3_bound(p, M, 0) == pytest.approx(want, abs=1e-8)


def test_missing_atom_rate():
    assert truncation.missing_atom_rate(P11, 0, math.exp(-1)) == pytest.approx(1.0, rel=1e-9)
    assert truncation.missing_atom_rate(P11, 0, 1 - 1e-12) < 1e-10
    with pytest.raises(ValueError):
        truncation.missing_atom_rate(P11, 0, 0.0)


def test_missing_atom_rate_by_simulation(rng):
    p, R, eps = ProcessParams(2.0, 3.0), 1, 0.05
    counts = np.empty(3000)
    for j in range(counts.size):
        H = construct.draw_beta_process(p, 40, rng)
        counts[j] = np.count_nonzero((H.rounds > R) & (H.pi >= eps))
    mean = truncation.missing_atom_rate(p, R, eps)
    assert abs(counts.mean() - mean) < 3.5 * math.sqrt(mean / counts.size)
    assert counts.var(ddof=1) == pytest.approx(counts.mean(), rel=0.15)


def test_expected_missing_ones_by_simulation(rng):
    p, M, R = ProcessParams(1.0, 2.0), 4, 2
    ones = np.empty(3000)
    for j in range(ones.size):
        H = construct.draw_beta_process(p, 40, rng)
        X = construct.draw_bernoulli_process(H, M, rng).indicators
        ones[j] = X[:, H.rounds > R].sum()
    want = truncation.expected_missing_ones(p, M, R)
    assert abs(ones.mean() - want) < 3.5 * ones.std(ddof=1) / math.sqrt(ones.size)


def test_simple_function_converges_from_below():
    exact = truncation.theorem3_bound(P11, 1, 0)
    errs = [exact - truncation.simple_function_bound(P11, 1, 0, n) for n in (100, 1000, 10000)]
    assert all(e > 0 for e in errs)
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] == pytest.approx(10, rel=0.3)


def test_bound_sweep_flags_and_gap():
    curve = truncation.bound_sweep(P34, 500, range(1, 101))
    assert all(curve.invariant_flags().values())
    assert truncation.l1_gap(curve) == pytest.approx(0.46, abs=0.05)
    with pytest.raises(KeyError):
        curve.values("nope")
    with pytest.raises(ValueError):
        truncation.bound_sweep(P34, 500, [])


def test_gap_grid_shape():
    grid = truncation.l1_gap_grid([1.0, 2.0], [1.0, 2.0, 4.0], 100, range(1, 40))
    assert grid.shape == (2, 3)
    assert np.all(grid >= 0)


def test_rejects_negative_counts():
    with pytest.raises(ValueError):
        truncation.theorem3_bound(P11, -1, 0)
    with pytest.raises(ValueError):
        truncation.corollary1_bound(P11, 1, -2)
    with pytest.raises(ValueError):
        truncation.simple_function_bound(P11, 1, 0, 1)


def test_truncation_event_simulation(rng):
    hits = truncation.simulate_truncation_event(P11, 2, 1, 2000, rng)
    b = truncation.theorem3_bound(P11, 2, 1)
    assert abs(hits.mean() - b) < 3.5 * math.sqrt(b * (1 - b) / hits.size)


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(0.3, 6.0), gamma=st.floats(0.2, 8.0), M=st.integers(1, 300))
def test_ordering_and_monotonicity(alpha, gamma, M):
    curve = truncation.bound_sweep(ProcessParams(alpha, gamma), M, range(0, 30))
    assert all(curve.invariant_flags().values())


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(0.3, 5.0), gamma=st.floats(0.2, 5.0), R=st.integers(0, 8), M=st.integers(1, 50))
def test_theorem3_nondecreasing_in_M(alpha, gamma, R, M):
    p = ProcessParams(alpha, gamma)
    assert truncation.theorem3_bound(p, M, R) <= truncation.theorem3_bound(p, M + 1, R) + 1e-12
