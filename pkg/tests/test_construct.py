from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from sbbeta import construct, measure
from sbbeta.measure import ProcessParams


def _z(mean, target, se):
    return abs(mean - target) / se


def test_round_atom_counts_are_poisson(rng):
    counts = np.array([len(construct.draw_round(2, ProcessParams(1.0, 3.0), rng)) for _ in range(5000)])
    assert _z(counts.mean(), 3.0, math.sqrt(3.0 / counts.size)) < 4
    assert _z(counts.var(ddof=1), 3.0, 3.0 * math.sqrt(2 / counts.size) * 1.8) < 4


@pytest.mark.parametrize("i,alpha", [(1, 2.0), (2, 0.5), (4, 2.0)])
def test_round_weights_match_density(rng, i, alpha):
    w = construct.round_weights(i, alpha, 4000, rng)
    # compare to the CDF obtained by integrating f_i in log space
    grid = np.exp(-np.linspace(1e-9, 40, 4001))[::-1]
    dens = measure.round_densities(grid, i, alpha)[:, -1] * grid
    u = -np.log(grid)
    cdf_u = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * -np.diff(u))])

    def cdf(x):
        return np.interp(x, grid, cdf_u / cdf_u[-1])

    assert stats.kstest(w, cdf).pvalue > 1e-3


def test_round_weights_with_aux(rng):
    pi, w = construct.round_weights_and_aux(3, 1.5, 1000, rng)
    assert np.all(pi < w) and np.all(w < 1)
    pi1, w1 = construct.round_weights_and_aux(1, 1.5, 10, rng)
    assert np.all(np.isnan(w1))


def test_beta_process_structure(rng):
    H = construct.draw_beta_process(ProcessParams(2.0, 5.0), 7, rng)
    assert H.rounds_kept == 7
    assert np.all(np.diff(H.rounds) >= 0)
    assert np.all((H.pi > 0) & (H.pi < 1)) and np.all((H.theta >= 0) & (H.theta < 1))
    assert len(H.atoms) == len(H)
    with pytest.raises(ValueError):
        H.pi[0] = 0.5


def test_total_mass_mean(rng):
    p = ProcessParams(1.5, 2.0)
    masses = np.array([construct.draw_beta_process(p, 60, rng).total_mass() for _ in range(3000)])
    assert _z(masses.mean(), p.gamma, masses.std(ddof=1) / math.sqrt(masses.size)) < 4


def test_seeded_determinism():
    p = ProcessParams(1.0, 3.0)
    a = construct.draw_beta_process(p, 12, np.random.default_rng(5))
    b = construct.draw_beta_process(p, 12, np.random.default_rng(5))
    assert np.array_equal(a.pi, b.pi) and np.array_equal(a.theta, b.theta) and np.array_equal(a.rounds, b.rounds)


def test_general_construction_constant_alpha_matches_homogeneous(rng):
    base = construct.PartitionedBase([construct.Cell(1.0, lambda t: np.full(t.shape, 2.0)),
                                      construct.Cell(2.0, lambda t: np.full(t.shape, 2.0))])
    masses = np.array([construct.draw_beta_process_general(base, 40, rng).total_mass() for _ in range(3000)])
    assert _z(masses.mean(), 3.0, masses.std(ddof=1) / math.sqrt(masses.size)) < 4


def test_general_construction_rejects_bad_alpha(rng):
    base = construct.PartitionedBase([construct.Cell(5.0, lambda t: -np.ones(t.shape))])
    with pytest.raises(ValueError):
        construct.draw_beta_process_general(base, 3, rng)
    with pytest.raises(ValueError):
        construct.PartitionedBase([construct.Cell(-1.0, lambda t: t)])


def test_bernoulli_process_frequencies(rng):
    H = construct.draw_beta_process(ProcessParams(1.0, 4.0), 3, rng)
    X = construct.draw_bernoulli_process(H, 20000, rng)
    np.testing.assert_allclose(X.indicators.mean(axis=0), H.pi, atol=5 * 0.5 / math.sqrt(20000))


def test_ibp_row_totals_and_unique_atoms(rng):
    p = ProcessParams(2.0, 3.0)
    n = 4
    allocs = [construct.draw_ibp(n, p, rng) for _ in range(4000)]
    totals = np.concatenate([a.row_totals() for a in allocs])
    assert _z(totals.mean(), 3.0, math.sqrt(3.0 / totals.size)) < 4
    uniq = np.array([a.n_observed_atoms() for a in allocs])
    mean = measure.expected_observed_atoms(p, n)
    assert _z(uniq.mean(), mean, math.sqrt(mean / uniq.size)) < 4


def test_ibp_zero_mass_tuple(rng):
    a = construct.draw_ibp(5, (1.0, 0.0), rng)
    assert a.indicators.shape == (5, 0)


def test_feature_allocation_validation():
    with pytest.raises(ValueError):
        construct.FeatureAllocation((0,), np.array([[2]], dtype=np.int8))
    with pytest.raises(ValueError):
        construct.FeatureAllocation((0, 1), np.zeros((3, 1), dtype=np.int8))


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(0.1, 10.0), gamma=st.floats(0.1, 8.0), R=st.integers(1, 15), seed=st.integers(0, 2**31))
def test_draw_invariants(alpha, gamma, R, seed):
    H = construct.draw_beta_process(ProcessParams(alpha, gamma), R, np.random.default_rng(seed))
    assert np.all((H.pi > 0) & (H.pi < 1))
    assert np.all((H.rounds >= 1) & (H.rounds <= R))
    X = construct.draw_bernoulli_process(H, 3, np.random.default_rng(seed + 1))
    assert X.indicators.shape == (3, len(H))
