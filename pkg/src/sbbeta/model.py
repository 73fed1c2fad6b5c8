"""Linear-Gaussian factor model with a beta-Bernoulli prior on the factor usage.

``Y = Theta (W o Z) + noise`` with ``W_kn ~ N(0, 1)``, ``Theta_dk ~ N(0, 1)``,
``Z_kn ~ Bernoulli(pi_k)`` and noise variance under an InvGamma(1, 1) prior.
Observations are the columns of ``Y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .measure import expected_round_weight

NOISE_PRIOR = (1.0, 1.0)


def _block(r0, c0, h, w):
    p = np.zeros((4, 4))
    p[r0:r0 + h, c0:c0 + w] = 1.0
    return p


def canonical_patterns() -> np.ndarray:
    """The 20 ground-truth 4x4 loadings, vectorized row-major into a 16 x 20 matrix.

    Order: 4 row bars, 4 column bars, 4 corner blocks, 4 edge-midpoint
    blocks, main and anti diagonal, full patch, centre block.
    """
    pats = [_block(r, 0, 1, 4) for r in range(4)]
    pats += [_block(0, c, 4, 1) for c in range(4)]
    pats += [_block(r, c, 2, 2) for r, c in ((0, 0), (0, 2), (2, 0), (2, 2))]
    pats += [_block(r, c, 2, 2) for r, c in ((0, 1), (2, 1), (1, 0), (1, 2))]
    pats += [np.eye(4), np.fliplr(np.eye(4)), np.ones((4, 4)), _block(1, 1, 2, 2)]
    return np.stack([p.reshape(-1) for p in pats], axis=1)


@dataclass(frozen=True)
class Dataset:
    Y: np.ndarray  # D x N

    def __post_init__(self):
        if self.Y.ndim != 2 or not np.all(np.isfinite(self.Y)):
            raise ValueError("Y must be a finite 2-D array")

    @property
    def D(self) -> int:
        return self.Y.shape[0]

    @property
    def N(self) -> int:
        return self.Y.shape[1]


@dataclass
class FactorState:
    Theta: np.ndarray  # D x K
    W: np.ndarray  # K x N
    Z: np.ndarray  # K x N, int8
    noise_var: float

    def __post_init__(self):
        self.Z = np.asarray(self.Z, dtype=np.int8)
        if not self.noise_var > 0:
            raise ValueError("noise_var must be > 0")
        if self.Theta.shape[1] != self.W.shape[0] or self.W.shape != self.Z.shape:
            raise ValueError("Theta, W and Z have inconsistent shapes")

    @property
    def K(self) -> int:
        return self.Z.shape[0]

    def mean(self) -> np.ndarray:
        return self.Theta @ (self.W * self.Z)

    def copy(self) -> "FactorState":
        return FactorState(self.Theta.copy(), self.W.copy(), self.Z.copy(), self.noise_var)


@dataclass(frozen=True)
class SyntheticConfig:
    D: int = 16
    N: int = 500
    K_true: int = 20
    alpha: float = 1.0
    gamma: float = 2.0
    noise_var: float = 0.01
    require_all_used: bool = True


def synthetic_weights(K: int, alpha: float, gamma: float) -> np.ndarray:
    """Expected atom weights, ``round(gamma)`` atoms per round in round order."""
    per_round = max(1, int(round(gamma)))
    return np.array([expected_round_weight(k // per_round + 1, alpha) for k in range(K)])


def generate_synthetic(config: SyntheticConfig, rng: np.random.Generator):
    """Returns ``(Dataset, FactorState truth, pi_true)``.

    With ``require_all_used`` every factor is conditioned to be used by at
    least one observation (rows of Z with no ones are redrawn).
    """
    if config.D != 16 or config.K_true > 20:
        raise ValueError("the canonical patterns need D = 16 and K_true <= 20")
    Theta = canonical_patterns()[:, : config.K_true]
    pi = synthetic_weights(config.K_true, config.alpha, config.gamma)
    Z = (rng.random((config.K_true, config.N)) < pi[:, None]).astype(np.int8)
    if config.require_all_used:
        for k in range(config.K_true):
            while not Z[k].any():
                Z[k] = rng.random(config.N) < pi[k]
    W = rng.standard_normal((config.K_true, config.N))
    Y = Theta @ (W * Z) + math.sqrt(config.noise_var) * rng.standard_normal((config.D, config.N))
    return Dataset(Y), FactorState(Theta, W, Z, config.noise_var), pi


def log_likelihood(state: FactorState, data: Dataset) -> float:
    """Gaussian log density of ``Y - Theta (W o Z)`` with per-entry variance ``noise_var``."""
    r = data.Y - state.mean()
    n = r.size
    return float(-0.5 * n * math.log(2.0 * math.pi * state.noise_var) - 0.5 * np.sum(r * r) / state.noise_var)


def _log_odds(pi):
    pi = np.asarray(pi, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(pi) - np.log1p(-pi)


def gibbs_update_Z(state: FactorState, pi: np.ndarray, data: Dataset, rng: np.random.Generator,
                   singleton: bool = True) -> np.ndarray:
    """One sweep over all entries of Z; returns the per-atom counts of ones.

    Each (Z_kn, W_kn) pair is drawn jointly: the flip odds integrate W_kn out
    and W_kn is then drawn from its conditional (the N(0, 1) prior if off).
    With ``singleton`` an atom that no other observation uses is updated
    together with its loading column instead, which lets new factors start
    from the residual they would explain.
    """
    K, N = state.Z.shape
    uniforms = rng.random((K, N))
    normals = rng.standard_normal((K, N))
    theta_normals = rng.standard_normal((K, N, data.D)) if singleton else np.empty((0, 0, 0))
    state.Theta = np.ascontiguousarray(state.Theta, dtype=float)
    _kernels.z_block_kernel(data.Y, state.Theta, state.W, state.Z, _log_odds(pi),
                            float(state.noise_var), uniforms, normals, bool(singleton), theta_normals)
    return state.Z.sum(axis=1)


def update_weights(state: FactorState, data: Dataset, rng: np.random.Generator) -> None:
    """W columns from their Gaussian full conditionals; entries with Z = 0 from the prior."""
    K, N = state.Z.shape
    _kernels.w_column_kernel(data.Y, np.ascontiguousarray(state.Theta), state.W, state.Z,
                             float(state.noise_var), rng.standard_normal((K, N)))


def update_loadings(state: FactorState, data: Dataset, rng: np.random.Generator) -> None:
    """Rows of Theta given W o Z share the precision ``I + A A^T / noise_var``;
    unused factors get their loadings from the prior."""
    K = state.K
    active = np.flatnonzero(state.Z.any(axis=1))
    Theta = rng.standard_normal((data.D, K))
    if active.size:
        A = state.W[active] * state.Z[active]
        L = np.linalg.cholesky(np.eye(active.size) + A @ A.T / state.noise_var)
        rhs = A @ data.Y.T / state.noise_var  # Ka x D
        mean = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        draw = mean + np.linalg.solve(L.T, rng.standard_normal((active.size, data.D)))
        Theta[:, active] = draw.T
    state.Theta = Theta


def update_noise(state: FactorState, data: Dataset, rng: np.random.Generator, noise_prior=NOISE_PRIOR) -> None:
    r = data.Y - state.mean()
    a0, b0 = noise_prior
    state.noise_var = float((b0 + 0.5 * float(np.sum(r * r))) / rng.gamma(a0 + 0.5 * r.size))


def gibbs_update_linear_gaussian(state: FactorState, data: Dataset, rng: np.random.Generator,
                                 noise_prior=NOISE_PRIOR, sample_noise: bool = True) -> FactorState:
    """Conjugate updates of W, Theta and (optionally) the noise variance, in that order."""
    update_weights(state, data, rng)
    update_loadings(state, data, rng)
    if sample_noise:
        update_noise(state, data, rng, noise_prior)
    return state


class LinearGaussianHook:
    """Plugs the factor model into :func:`sbbeta.mcmc.run_chain`."""

    def __init__(self, data: Dataset, factors: FactorState, store_loadings: bool = False,
                 singleton: bool = True, sample_noise: bool = True):
        self.data = data
        self.factors = factors
        self.M = data.N
        self.store_loadings = store_loadings
        self.singleton = singleton
        self.sample_noise = sample_noise

    def reindex(self, keep, n_new, rng):
        f = self.factors
        D, N = self.data.D, self.data.N
        f.Theta = np.concatenate([f.Theta[:, keep], rng.standard_normal((D, n_new))], axis=1)
        f.W = np.concatenate([f.W[keep], rng.standard_normal((n_new, N))], axis=0)
        f.Z = np.concatenate([f.Z[keep], np.zeros((n_new, N), dtype=np.int8)], axis=0)

    def update(self, state, rng):
        m1 = gibbs_update_Z(self.factors, state.pi, self.data, rng, self.singleton)
        gibbs_update_linear_gaussian(self.factors, self.data, rng, sample_noise=self.sample_noise)
        return m1

    def snapshot(self, state):
        out = {"noise_var": self.factors.noise_var}
        if self.store_loadings:
            out["loadings"] = self.factors.Theta[:, state.observed].copy()
        return out


def init_factors(K: int, data: Dataset, rng: np.random.Generator, pi: np.ndarray,
                 noise_var: float = 1.0) -> FactorState:
    """Random start: loadings and weights from their priors, Z from Bernoulli(pi)."""
    Z = (rng.random((K, data.N)) < pi[:, None]).astype(np.int8)
    return FactorState(rng.standard_normal((data.D, K)), rng.standard_normal((K, data.N)), Z, noise_var)


def match_loadings(truth: np.ndarray, estimate: np.ndarray, threshold: float = 0.9):
    """Greedy one-to-one matching by absolute cosine similarity.

    Returns ``(n_matched, pairs)`` with pairs ``(true_index, est_index, similarity)``
    taken in decreasing order of similarity; matches at or below ``threshold``
    do not count.
    """
    if estimate.shape[1] == 0:
        return 0, []
    t = truth / np.linalg.norm(truth, axis=0, keepdims=True)
    norms = np.linalg.norm(estimate, axis=0, keepdims=True)
    e = estimate / np.where(norms > 0, norms, 1.0)
    sim = np.abs(t.T @ e)
    pairs = []
    sim = sim.copy()
    for _ in range(min(sim.shape)):
        i, j = np.unravel_index(np.argmax(sim), sim.shape)
        if sim[i, j] < 0:
            break
        pairs.append((int(i), int(j), float(sim[i, j])))
        sim[i, :] = -1.0
        sim[:, j] = -1.0
    return sum(1 for _, _, s in pairs if s > threshold), pairs
