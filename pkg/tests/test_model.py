from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbbeta import _kernels, model
from sbbeta.model import Dataset, FactorState, SyntheticConfig


def test_canonical_patterns():
    P = model.canonical_patterns()
    assert P.shape == (16, 20)
    assert set(np.unique(P)) == {0.0, 1.0}
    assert len({tuple(c) for c in P.T}) == 20
    np.testing.assert_array_equal(P[:, 18], np.ones(16))
    assert P[:, 0].reshape(4, 4)[0].sum() == 4 and P[:, 4].reshape(4, 4)[:, 0].sum() == 4


def test_synthetic_dims_and_determinism():
    a = model.generate_synthetic(SyntheticConfig(), np.random.default_rng(1))
    b = model.generate_synthetic(SyntheticConfig(), np.random.default_rng(1))
    data, truth, pi = a
    assert data.Y.shape == (16, 500) and truth.Z.shape == (20, 500)
    np.testing.assert_array_equal(data.Y, b[0].Y)
    assert np.all(truth.Z.any(axis=1))
    np.testing.assert_allclose(pi[:4], [0.5, 0.5, 0.25, 0.25])


def test_synthetic_column_sums(rng):
    cfg = SyntheticConfig(N=2000, require_all_used=False)
    _, truth, pi = model.generate_synthetic(cfg, rng)
    sums = truth.Z.sum(axis=1)
    se = np.sqrt(cfg.N * pi * (1 - pi))
    assert np.all(np.abs(sums - cfg.N * pi) < 4 * se + 1)


def test_synthetic_rejects_bad_dims():
    with pytest.raises(ValueError):
        model.generate_synthetic(SyntheticConfig(D=9), np.random.default_rng(0))
    with pytest.raises(ValueError):
        model.generate_synthetic(SyntheticConfig(K_true=21), np.random.default_rng(0))


def test_dataset_and_state_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        FactorState(np.ones((2, 1)), np.ones((1, 3)), np.ones((1, 3)), 0.0)
    with pytest.raises(ValueError):
        FactorState(np.ones((2, 2)), np.ones((1, 3)), np.ones((1, 3)), 1.0)


def test_log_likelihood_identities(rng):
    Theta, W = rng.standard_normal((3, 2)), rng.standard_normal((2, 4))
    Z = np.ones((2, 4), dtype=np.int8)
    state = FactorState(Theta, W, Z, 0.7)
    exact = Dataset(state.mean())
    assert model.log_likelihood(state, exact) == pytest.approx(-0.5 * 12 * math.log(2 * math.pi * 0.7))
    r = rng.standard_normal((3, 4))
    unit = FactorState(Theta, W, Z, 1.0)
    l1 = model.log_likelihood(unit, Dataset(unit.mean() + r))
    l2 = model.log_likelihood(unit, Dataset(unit.mean() + 2 * r))
    assert l1 - l2 == pytest.approx(1.5 * np.sum(r * r))
    naive = sum(-0.5 * math.log(2 * math.pi) - 0.5 * v * v for v in r.ravel())
    assert l1 == pytest.approx(naive, rel=1e-9)


def _z_frequencies(y, Theta, pi, noise_var, singleton, sweeps, rng):
    data = Dataset(np.array([[y]]))
    state = FactorState(Theta.copy(), np.zeros((2, 1)), np.zeros((2, 1), dtype=np.int8), noise_var)
    counts = np.zeros(4)
    for _ in range(sweeps):
        model.gibbs_update_Z(state, pi, data, rng, singleton=singleton)
        if singleton:
            model.gibbs_update_linear_gaussian(state, data, rng, sample_noise=False)
        counts[2 * state.Z[0, 0] + state.Z[1, 0]] += 1
    return counts / sweeps


def test_z_toy_matches_enumeration(rng):
    # W integrated: y | Z ~ N(0, noise + sum_k z_k theta_k^2)
    y, Theta, pi, s2 = 1.3, np.array([[1.0, 2.0]]), np.array([0.3, 0.6]), 0.5
    want = []
    for z in itertools.product((0, 1), repeat=2):
        var = s2 + sum(zk * t * t for zk, t in zip(z, Theta[0]))
        prior = np.prod([p if zk else 1 - p for zk, p in zip(z, pi)])
        want.append(prior * math.exp(-0.5 * y * y / var) / math.sqrt(var))
    want = np.array(want) / sum(want)
    got = _z_frequencies(y, Theta, pi, s2, False, 40_000, rng)
    se = np.sqrt(want * (1 - want) / 40_000) * 2.0  # allow for autocorrelation
    assert np.all(np.abs(got - want) < 3 * se + 1e-3)


def test_z_toy_with_collapsed_loadings_matches_enumeration(rng):
    # Theta and W both integrated against their N(0, 1) priors (Monte Carlo oracle)
    y, pi, s2 = 1.3, np.array([0.3, 0.6]), 0.5
    mc = np.random.default_rng(99)
    tw = mc.standard_normal((4, 2_000_000))
    prod = tw[0:2] * tw[2:4]
    want = []
    for z in itertools.product((0, 1), repeat=2):
        mean = z[0] * prod[0] + z[1] * prod[1]
        lik = np.mean(np.exp(-0.5 * (y - mean) ** 2 / s2))
        prior = np.prod([p if zk else 1 - p for zk, p in zip(z, pi)])
        want.append(prior * lik)
    want = np.array(want) / sum(want)
    got = _z_frequencies(y, np.array([[0.5, -0.5]]), pi, s2, True, 40_000, rng)
    se = np.sqrt(want * (1 - want) / 40_000) * 2.0
    assert np.all(np.abs(got - want) < 3 * se + 2e-3)


def test_degenerate_weights_force_z():
    rng = np.random.default_rng(0)
    data = Dataset(rng.standard_normal((2, 5)))
    state = FactorState(rng.standard_normal((2, 2)), rng.standard_normal((2, 5)),
                        np.array([[1] * 5, [0] * 5], dtype=np.int8), 1.0)
    model.gibbs_update_Z(state, np.array([0.0, 1.0]), data, rng)
    assert np.all(state.Z[0] == 0) and np.all(state.Z[1] == 1)


def test_flat_likelihood_gives_prior_odds(rng):
    data = Dataset(rng.standard_normal((3, 20000)))
    state = FactorState(rng.standard_normal((3, 1)), np.zeros((1, 20000)), np.zeros((1, 20000)), 1e12)
    model.gibbs_update_Z(state, np.array([0.3]), data, rng, singleton=False)
    assert state.Z.mean() == pytest.approx(0.3, abs=4 * math.sqrt(0.21 / 20000))


def test_w_conditional_matches_grid_oracle():
    Theta = np.array([[1.0, 0.5], [-0.3, 1.2]])
    y = np.array([[0.8], [-0.4]])
    s2 = 0.5
    Z = np.ones((2, 1), dtype=np.int8)

    def draw(eps):
        W = np.zeros((2, 1))
        _kernels.w_column_kernel(y, Theta, W, Z, s2, eps.reshape(2, 1))
        return W[:, 0]

    mean = draw(np.zeros(2))
    A = np.stack([draw(np.eye(2)[j]) - mean for j in range(2)], axis=1)
    cov = A @ A.T
    g = np.linspace(-6, 6, 1201)
    w1, w2 = np.meshgrid(g, g, indexing="ij")
    r1 = y[0, 0] - Theta[0, 0] * w1 - Theta[0, 1] * w2
    r2 = y[1, 0] - Theta[1, 0] * w1 - Theta[1, 1] * w2
    dens = np.exp(-0.5 * (w1 ** 2 + w2 ** 2) - 0.5 * (r1 ** 2 + r2 ** 2) / s2)
    dens /= dens.sum()
    m = np.array([(dens * w1).sum(), (dens * w2).sum()])
    c = np.array([[(dens * (w1 - m[0]) ** 2).sum(), (dens * (w1 - m[0]) * (w2 - m[1])).sum()],
                  [0.0, (dens * (w2 - m[1]) ** 2).sum()]])
    c[1, 0] = c[0, 1]
    np.testing.assert_allclose(mean, m, atol=1e-3)
    np.testing.assert_allclose(cov, c, atol=1e-3)


def test_unused_factor_weights_from_prior(rng):
    data = Dataset(rng.standard_normal((4, 20000)))
    state = FactorState(rng.standard_normal((4, 1)), np.zeros((1, 20000)), np.zeros((1, 20000)), 1.0)
    model.gibbs_update_linear_gaussian(state, data, rng, sample_noise=False)
    assert abs(state.W.mean()) < 4 / math.sqrt(20000)
    assert state.W.var() == pytest.approx(1.0, abs=0.05)


def test_loading_conditional(rng):
    # one factor: each Theta row is N(mean, 1 / prec) with prec = 1 + |w|^2 / s2
    Y = np.array([[1.0, -0.5, 0.2], [0.3, 0.9, -1.1]])
    W = np.array([[0.7, -1.2, 0.4]])
    s2 = 0.25
    prec = 1 + (W[0] ** 2).sum() / s2
    mean = (Y @ W[0]) / s2 / prec
    state = FactorState(np.zeros((2, 1)), W, np.ones((1, 3)), s2)
    draws = np.empty((20000, 2))
    for j in range(draws.shape[0]):
        model.update_loadings(state, Dataset(Y), rng)
        draws[j] = state.Theta[:, 0]
    se = 1 / math.sqrt(prec * draws.shape[0])
    assert np.all(np.abs(draws.mean(axis=0) - mean) < 4 * se)
    np.testing.assert_allclose(draws.var(axis=0), 1 / prec, rtol=0.05)


def test_noise_conditional(rng):
    Y = np.array([[1.0, -0.5, 0.2], [0.3, 0.9, -1.1]])
    state = FactorState(np.full((2, 1), 0.5), np.array([[0.7, -1.2, 0.4]]), np.ones((1, 3)), 1.0)
    r = Y - state.mean()
    a = model.NOISE_PRIOR[0] + 0.5 * r.size
    b = model.NOISE_PRIOR[1] + 0.5 * float((r * r).sum())
    draws = np.empty(20000)
    for j in range(draws.size):
        model.update_noise(state, Dataset(Y), rng)
        draws[j] = state.noise_var
    # inverse gamma: mean b / (a - 1), variance mean^2 / (a - 2)
    sd = b / (a - 1) / math.sqrt(a - 2)
    assert abs(draws.mean() - b / (a - 1)) < 4 * sd / math.sqrt(draws.size)


def test_rss_decreases_on_noiseless_data(rng):
    data, truth, pi = model.generate_synthetic(SyntheticConfig(N=100, noise_var=1e-6), rng)
    state = model.init_factors(20, data, rng, np.full(20, 0.3))
    rss0 = float(((data.Y - state.mean()) ** 2).sum())
    for _ in range(10):
        model.gibbs_update_Z(state, np.full(20, 0.3), data, rng)
        model.gibbs_update_linear_gaussian(state, data, rng)
    assert float(((data.Y - state.mean()) ** 2).sum()) < 0.5 * rss0


def test_sufficient_statistics(rng):
    data, truth, pi = model.generate_synthetic(SyntheticConfig(N=50), rng)
    state = truth.copy()
    m1 = model.gibbs_update_Z(state, pi, data, rng)
    np.testing.assert_array_equal(m1, state.Z.sum(axis=1))


def test_hook_reindex(rng):
    data, truth, pi = model.generate_synthetic(SyntheticConfig(N=30), rng)
    hook = model.LinearGaussianHook(data, truth.copy(), store_loadings=True)
    hook.reindex(np.array([0, 2, 5]), 4, rng)
    assert hook.factors.Theta.shape == (16, 7) and hook.factors.Z.shape == (7, 30)
    assert not hook.factors.Z[3:].any()


def test_match_loadings_sign_and_permutation_invariant(rng):
    P = model.canonical_patterns()
    perm = rng.permutation(20)
    signs = rng.choice([-1.0, 1.0], 20)
    est = P[:, perm] * signs * rng.uniform(0.5, 3.0, 20) + 0.01 * rng.standard_normal((16, 20))
    n, pairs = model.match_loadings(P, est)
    assert n == 20
    assert all(perm[j] == i for i, j, _ in pairs)
    assert model.match_loadings(P, np.zeros((16, 0)))[0] == 0
    assert model.match_loadings(P, P[:, :5])[0] == 5


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), singleton=st.booleans())
def test_z_sweep_keeps_binary_and_finite(seed, singleton):
    rng = np.random.default_rng(seed)
    data = Dataset(rng.standard_normal((4, 6)))
    state = model.init_factors(5, data, rng, rng.uniform(0.05, 0.95, 5))
    model.gibbs_update_Z(state, rng.uniform(0.05, 0.95, 5), data, rng, singleton=singleton)
    assert set(np.unique(state.Z)) <= {0, 1}
    assert np.all(np.isfinite(state.Theta)) and np.all(np.isfinite(state.W))


@pytest.mark.slow
def test_joint_geweke_with_factor_model():
    from sbbeta.diagnostics import model_geweke_test
    from sbbeta.mcmc import Hyperparams, SamplerConfig

    cfg = SamplerConfig(pi_steps=20, w_steps=20, w_init_steps=200, sigma_pi=0.15, sigma_w=0.15, mode="exact",
                        tail_tol=1e-4)
    res = model_geweke_test(20_000, 10_000, 2, 4, Hyperparams(2, 2, 2, 2), cfg, np.random.default_rng(11))
    print(res.report())
    assert res.passed(3.0)
