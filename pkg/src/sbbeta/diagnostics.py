"""Geweke joint-distribution test for the beta-Bernoulli sampler and
Monte Carlo helpers shared by the validation suites.

The marginal-conditional simulator draws (alpha, gamma, H, X) forward from
the prior; the successive-conditional simulator alternates one sampler sweep
given X with a fresh X drawn given the sampled atoms. Both must produce the
same joint law if the sweep leaves the posterior invariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .construct import round_weights_and_aux
from .mcmc import BernoulliHook, Hyperparams, McmcState, SamplerConfig, sweep

STATS = ("alpha", "gamma", "T", "sum_pi", "sum_d")


def batch_means_se(x, n_batches: int = 50) -> float:
    """Standard error of the mean of an autocorrelated series by batch means."""
    x = np.asarray(x, dtype=float)
    size = x.size // n_batches
    if size < 1:
        return float(np.std(x, ddof=1) / math.sqrt(x.size))
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def _rounds_needed(alpha, gamma, M, tail_tol):
    ratio = alpha / (1.0 + alpha)
    return max(1, int(math.ceil(math.log(tail_tol / (gamma * M)) / math.log(ratio))))


@dataclass
class ForwardDraw:
    alpha: float
    gamma: float
    pi: np.ndarray
    w: np.ndarray
    d: np.ndarray
    X: np.ndarray  # M x K, observed atoms only


def forward_draw(M: int, hyper: Hyperparams, rng: np.random.Generator, tail_tol: float = 1e-6) -> ForwardDraw:
    """Prior draw of (alpha, gamma, H, X), keeping only the atoms X hits."""
    alpha = rng.gamma(hyper.tau1, 1.0 / hyper.tau2)
    gamma = rng.gamma(hyper.kappa1, 1.0 / hyper.kappa2)
    R = _rounds_needed(alpha, gamma, M, tail_tol)
    counts = rng.poisson(gamma, size=R)
    pis, ws, ds = [], [], []
    for i, c in enumerate(counts, start=1):
        if c:
            pi, w = round_weights_and_aux(i, alpha, c, rng)
            pis.append(pi)
            ws.append(w)
            ds.append(np.full(c, i))
    if pis:
        pi, w, d = np.concatenate(pis), np.concatenate(ws), np.concatenate(ds)
    else:
        pi, w, d = np.empty(0), np.empty(0), np.empty(0, dtype=np.int64)
    X = (rng.random((M, pi.size)) < pi).astype(np.int8)
    obs = X.any(axis=0)
    w = np.where(d > 1, np.maximum(w, np.nextafter(pi, 1.0)), np.nan)
    return ForwardDraw(alpha, gamma, pi[obs], w[obs], d[obs], X[:, obs])


def draw_statistics(alpha, gamma, pi, d) -> np.ndarray:
    return np.array([alpha, gamma, pi.size, pi.sum(), d.sum()], dtype=float)


def marginal_conditional(n: int, M: int, hyper: Hyperparams, rng: np.random.Generator,
                         tail_tol: float = 1e-6) -> np.ndarray:
    out = np.empty((n, len(STATS)))
    for j in range(n):
        f = forward_draw(M, hyper, rng, tail_tol)
        out[j] = draw_statistics(f.alpha, f.gamma, f.pi, f.d)
    return out


def successive_conditional(n: int, M: int, hyper: Hyperparams, config: SamplerConfig,
                           rng: np.random.Generator) -> np.ndarray:
    """Statistics after each of ``n`` (sweep given X, redraw X) cycles."""
    f = forward_draw(M, hyper, rng)
    state = McmcState(f.pi, f.d, f.w, f.X.sum(axis=0), M, f.alpha, f.gamma, hyper)
    hook = BernoulliHook(f.X, resample=True)
    out = np.empty((n, len(STATS)))
    for j in range(n):
        sweep(state, hook, rng, config)
        obs = state.observed
        out[j] = draw_statistics(state.alpha, state.gamma, state.pi[obs], state.d[obs])
    return out


@dataclass
class GewekeResult:
    stats: tuple
    forward_mean: np.ndarray
    forward_se: np.ndarray
    chain_mean: np.ndarray
    chain_se: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return (self.chain_mean - self.forward_mean) / np.sqrt(self.forward_se ** 2 + self.chain_se ** 2)

    def passed(self, threshold: float = 3.0) -> bool:
        return bool(np.all(np.abs(self.z) < threshold))

    def report(self) -> str:
        lines = []
        for name, fm, fs, cm, cs, z in zip(self.stats, self.forward_mean, self.forward_se,
                                           self.chain_mean, self.chain_se, self.z):
            lines.append(f"{name:>7}: forward {fm:.4f} +/- {fs:.4f}   chain {cm:.4f} +/- {cs:.4f}   z={z:+.2f}")
        return "\n".join(lines)


def geweke_test(n_forward: int, n_chain: int, M: int, hyper: Hyperparams, config: SamplerConfig,
                rng: np.random.Generator, burn_in: int = 200) -> GewekeResult:
    fwd = marginal_conditional(n_forward, M, hyper, rng)
    chain = successive_conditional(n_chain + burn_in, M, hyper, config, rng)[burn_in:]
    return GewekeResult(
        STATS,
        fwd.mean(axis=0),
        fwd.std(axis=0, ddof=1) / math.sqrt(n_forward),
        chain.mean(axis=0),
        np.array([batch_means_se(chain[:, j]) for j in range(chain.shape[1])]),
    )


# -- joint test with the linear-Gaussian factor model ------------------------------

MODEL_STATS = ("alpha", "gamma", "T", "log_noise_var", "theta_sq", "sum_pi")


def _model_statistics(alpha, gamma, pi, noise_var, Theta) -> np.ndarray:
    theta_sq = float(np.mean(Theta ** 2)) if Theta.size else 0.0
    return np.array([alpha, gamma, pi.size, math.log(noise_var), theta_sq, pi.sum()], dtype=float)


def model_forward_draw(D: int, N: int, hyper: Hyperparams, rng: np.random.Generator, noise_prior=(1.0, 1.0)):
    """Forward draw of the full factor model, keeping the observed atoms.

    Returns ``(ForwardDraw, FactorState, Dataset)``.
    """
    from .model import Dataset, FactorState

    f = forward_draw(N, hyper, rng)
    K = f.pi.size
    noise_var = noise_prior[1] / rng.gamma(noise_prior[0])
    Theta = rng.standard_normal((D, K))
    W = rng.standard_normal((K, N))
    Z = f.X.T.copy()
    factors = FactorState(Theta, W, Z, noise_var)
    Y = factors.mean() + math.sqrt(noise_var) * rng.standard_normal((D, N))
    return f, factors, Dataset(Y)


def model_marginal_conditional(n: int, D: int, N: int, hyper: Hyperparams, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((n, len(MODEL_STATS)))
    for j in range(n):
        f, factors, _ = model_forward_draw(D, N, hyper, rng)
        out[j] = _model_statistics(f.alpha, f.gamma, f.pi, factors.noise_var, factors.Theta)
    return out


def model_successive_conditional(n: int, D: int, N: int, hyper: Hyperparams, config: SamplerConfig,
                                 rng: np.random.Generator) -> np.ndarray:
    """Alternate one full sweep (sampler and factor updates) with a fresh Y given the state."""
    from .model import Dataset, LinearGaussianHook

    f, factors, data = model_forward_draw(D, N, hyper, rng)
    state = McmcState(f.pi, f.d, f.w, f.X.sum(axis=0), N, f.alpha, f.gamma, hyper)
    hook = LinearGaussianHook(data, factors)
    out = np.empty((n, len(MODEL_STATS)))
    for j in range(n):
        sweep(state, hook, rng, config)
        fs = hook.factors
        hook.data = Dataset(fs.mean() + math.sqrt(fs.noise_var) * rng.standard_normal((D, N)))
        obs = state.observed
        out[j] = _model_statistics(state.alpha, state.gamma, state.pi[obs], fs.noise_var, fs.Theta[:, obs])
    return out


def model_geweke_test(n_forward: int, n_chain: int, D: int, N: int, hyper: Hyperparams, config: SamplerConfig,
                      rng: np.random.Generator, burn_in: int = 200) -> GewekeResult:
    fwd = model_marginal_conditional(n_forward, D, N, hyper, rng)
    chain = model_successive_conditional(n_chain + burn_in, D, N, hyper, config, rng)[burn_in:]
    return GewekeResult(
        MODEL_STATS,
        fwd.mean(axis=0),
        fwd.std(axis=0, ddof=1) / math.sqrt(n_forward),
        chain.mean(axis=0),
        np.array([batch_means_se(chain[:, j]) for j in range(chain.shape[1])]),
    )
