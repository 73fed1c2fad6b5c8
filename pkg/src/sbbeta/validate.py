"""Fast invariant suites, one per module, run by ``sbbeta validate``.

Each check returns a :class:`Check`; suites take a seeded generator and
finish in seconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import construct, mcmc, measure, model, truncation
from .measure import ProcessParams


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


def _close(name, got, want, tol, rel=True):
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    err = np.abs(got - want)
    if rel:
        err = err / np.maximum(np.abs(want), 1e-300)
    worst = float(np.max(err))
    return Check(name, worst <= tol, f"max {'rel' if rel else 'abs'} err {worst:.2e} (tol {tol:g})")


def _within_se(name, mean, target, se, k=3.0):
    z = (mean - target) / se if se > 0 else 0.0
    return Check(name, abs(z) < k, f"mean {mean:.5g} vs {target:.5g}, z={z:+.2f}")


def measure_suite(rng=None) -> list[Check]:
    out = []
    out.append(_close("levy_density examples", [measure.levy_density(0.5, 1), measure.levy_density(0.25, 2),
                                                measure.levy_density(0.9, 3)], [2.0, 6.0, 1 / 30], 1e-12))
    e = math.exp(-1)
    out.append(_close("round_density examples", [measure.round_density(0.3, 1, 2), measure.round_density(e, 2, 1),
                                                 measure.round_density(e, 3, 1)], [1.4, 1.0, 0.5], 1e-9))
    pis = np.linspace(0.01, 0.99, 25)
    dens = measure.round_densities(pis, 8, 1.0)
    closed = np.stack([np.log(1 / pis) ** (i - 1) / math.factorial(i - 1) for i in range(1, 9)], axis=-1)
    out.append(_close("closed form at alpha=1", dens, closed, 1e-8, rel=False))
    for alpha in (0.5, 1.0, 3.0):
        R = int(math.ceil(math.log(1e-12) / math.log(alpha / (1 + alpha)))) + 40
        total = measure.round_densities(pis, R, alpha).sum(axis=-1)
        out.append(_close(f"density sum alpha={alpha}", total, measure.levy_density(pis, alpha), 1e-6))
    for a, g, M in ((1.0, 1.0, 3), (3.0, 4.0, 10)):
        p = ProcessParams(a, g)
        got = g * measure.observed_rate_profile(a, M, 400).sum()
        out.append(_close(f"xi identity {(a, g, M)}", got, measure.expected_observed_atoms(p, M), 1e-6))
    out.append(_close("tail density R=1", measure.tail_density(pis, 2.0, 1), 2.0 * (1 - pis) ** 2 / pis, 1e-6))
    return out


def construct_suite(rng: np.random.Generator) -> list[Check]:
    out = []
    p = ProcessParams(1.0, 2.0)
    counts = np.array([len(construct.draw_round(1, p, rng)) for _ in range(4000)])
    out.append(_within_se("round atom count", counts.mean(), 2.0, math.sqrt(2.0 / counts.size)))
    w = construct.round_weights(4, 2.0, 20000, rng)
    out.append(_within_se("round-4 weight mean", w.mean(), measure.expected_round_weight(4, 2.0),
                          w.std(ddof=1) / math.sqrt(w.size)))
    masses = np.array([construct.draw_beta_process(p, 60, rng).total_mass() for _ in range(2000)])
    out.append(_within_se("total mass", masses.mean(), 2.0, masses.std(ddof=1) / math.sqrt(masses.size)))
    seed = int(rng.integers(2**31))
    a = construct.draw_beta_process(p, 10, np.random.default_rng(seed))
    b = construct.draw_beta_process(p, 10, np.random.default_rng(seed))
    out.append(Check("seeded determinism", bool(np.array_equal(a.pi, b.pi) and np.array_equal(a.theta, b.theta))))
    uniq = np.array([construct.draw_ibp(3, ProcessParams(1.0, 1.0), rng).n_observed_atoms() for _ in range(4000)])
    out.append(_within_se("IBP unique atoms", uniq.mean(), 11 / 6, math.sqrt(11 / 6 / uniq.size)))
    return out


def truncation_suite(rng=None) -> list[Check]:
    out = []
    for a, g, M in ((1.0, 1.0, 1), (1.0, 1.0, 3), (3.0, 4.0, 10)):
        p = ProcessParams(a, g)
        want = -math.expm1(-measure.expected_observed_atoms(p, M))
        out.append(_close(f"R=0 closed form {(a, g, M)}", truncation.theorem3_bound(p, M, 0), want, 1e-6, rel=False))
    flags_ok = True
    for a in (0.5, 2.0):
        for g in (1.0, 6.0):
            for M in (1, 50):
                flags = truncation.bound_sweep(ProcessParams(a, g), M, range(0, 40)).invariant_flags()
                flags_ok &= all(flags.values())
    out.append(Check("ordering and monotonicity", flags_ok))
    out.append(_close("corollary example", truncation.corollary1_bound(ProcessParams(3, 4), 500, 20), 0.99824, 1e-5,
                      rel=False))
    curve = truncation.bound_sweep(ProcessParams(3.0, 4.0), 500, range(1, 101))
    gap = truncation.l1_gap(curve)
    out.append(Check("L1 gap at (3, 4, 500)", abs(gap - 0.46) <= 0.05, f"gap {gap:.4f}"))
    p = ProcessParams(1.0, 1.0)
    exact = truncation.theorem3_bound(p, 1, 0)
    errs = [exact - truncation.simple_function_bound(p, 1, 0, n) for n in (100, 1000)]
    out.append(Check("simple function from below", 0 < errs[1] < errs[0], f"errors {errs[0]:.2e}, {errs[1]:.2e}"))
    return out


def mcmc_suite(rng: np.random.Generator) -> list[Check]:
    out = []
    h = mcmc.Hyperparams()
    st = mcmc.McmcState([0.3, 0.2], [1, 2], [np.nan, 0.8], [1, 1], 4, 1.0, 1.0, h)
    shape, rate = mcmc.alpha_conditional_params(st)
    out.append(_close("alpha conditional", [shape, rate], [4.0, 1 - math.log(0.7) - math.log(0.6)], 1e-12))
    st = mcmc.McmcState(np.full(5, 0.5), np.ones(5), np.full(5, np.nan), np.ones(5), 4, 1.0, 1.0, h)
    out.append(_close("gamma conditional", mcmc.gamma_conditional_params(st), [6.0, 1 + 25 / 12], 1e-12))
    st = mcmc.McmcState([0.5], [1], [np.nan], [3], 10, 2.0, 1.0, h)
    draws = np.empty(4000)
    for j in range(draws.size):
        mcmc.mh_update_pi(st, rng, 10, 0.2)
        draws[j] = st.pi[0]
    from .diagnostics import batch_means_se
    out.append(_within_se("conjugate pi chain", draws.mean(), 4 / 13, batch_means_se(draws)))
    return out


def model_suite(rng: np.random.Generator) -> list[Check]:
    out = []
    data, truth, pi = model.generate_synthetic(model.SyntheticConfig(), rng)
    out.append(Check("synthetic dims", data.Y.shape == (16, 500) and truth.Z.shape == (20, 500)))
    state = truth.copy()
    r = data.Y - state.mean()
    naive = sum(-0.5 * math.log(2 * math.pi * state.noise_var) - 0.5 * v * v / state.noise_var for v in r.ravel())
    out.append(_close("log likelihood oracle", model.log_likelihood(state, data), naive, 1e-9))
    m1 = model.gibbs_update_Z(state, pi, data, rng)
    out.append(Check("sufficient statistics", bool(np.array_equal(m1, state.Z.sum(axis=1)))))
    return out


SUITES = {
    "measure": measure_suite,
    "construct": construct_suite,
    "truncation": truncation_suite,
    "mcmc": mcmc_suite,
    "model": model_suite,
}


def run_suites(names, rng: np.random.Generator) -> list[tuple[str, Check]]:
    results = []
    for name in names:
        for check in SUITES[name](rng):
            results.append((name, check))
    return results
