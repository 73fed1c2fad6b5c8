"""MCMC for stick-breaking beta processes.

Each tracked atom carries a weight ``pi``, a round indicator ``d`` and, for
``d > 1``, the auxiliary product factor ``w`` with ``pi < w < 1``. Atoms hit by
at least one Bernoulli row (``m1 >= 1``) are "observed"; the rest are
re-drawn every sweep when the rounds are completed.

Two variants of the round/concentration updates are available:

``mode="paper"``
    d is drawn with prior weight ``xi_i`` times the round likelihood, alpha
    from the Gamma full conditional over the observed atoms, new atoms from
    the plain round law.
``mode="exact"``
    d is drawn from ``f_i(pi, w)`` alone (a Uniform(pi, 1) pseudo-prior
    stands in for ``w`` when ``d = 1``), alpha by an independence MH step
    that corrects the Gamma proposal by ``exp(-gamma sum alpha/(alpha+n))``,
    and new atoms are drawn from the round law tilted by ``(1 - pi)**M``.
    This variant leaves the beta-Bernoulli posterior invariant.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Protocol

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .construct import round_weights_and_aux
from .measure import observed_rate_profile, round_densities
from .quadrature import QuadratureConfig

log = logging.getLogger(__name__)

MODES = ("paper", "exact")
MAX_ROUND = 100_000


@dataclass(frozen=True)
class Hyperparams:
    tau1: float = 1.0
    tau2: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"{k} must be > 0, got {v!r}")


@dataclass(frozen=True)
class SamplerConfig:
    pi_steps: int = 50
    w_steps: int = 50
    w_init_steps: int = 500
    sigma_pi: float = math.sqrt(1e-3)
    sigma_w: float = math.sqrt(1e-3)
    extra_rounds: int = 1
    tail_tol: float | None = None
    mode: str = "paper"
    sample_alpha: bool = True
    sample_gamma: bool = True
    quad_rtol: float = 1e-8

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if min(self.pi_steps, self.w_steps, self.w_init_steps, self.extra_rounds) < 0:
            raise ValueError("step counts and extra_rounds must be >= 0")
        if not (self.sigma_pi > 0 and self.sigma_w > 0):
            raise ValueError("proposal scales must be > 0")

    @property
    def quad(self) -> QuadratureConfig:
        return QuadratureConfig(rtol=self.quad_rtol, atol=1e-300, max_level=14)


@dataclass(frozen=True)
class McmcAtomState:
    pi: float
    w: float | None
    d: int
    m1: int
    m0: int


class ChainError(RuntimeError):
    """A sweep failed; ``state`` holds the last consistent state."""

    def __init__(self, message, state, iteration):
        super().__init__(message)
        self.state = state
        self.iteration = iteration


@dataclass
class McmcState:
    """Mutable chain state. Per-atom arrays share one index; ``w`` is NaN when ``d == 1``."""

    pi: np.ndarray
    d: np.ndarray
    w: np.ndarray
    m1: np.ndarray
    M: int
    alpha: float
    gamma: float
    hyper: Hyperparams = field(default_factory=Hyperparams)
    theta: np.ndarray | None = None
    iteration: int = 0

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.d = np.asarray(self.d, dtype=np.int64)
        self.w = np.asarray(self.w, dtype=float)
        self.m1 = np.asarray(self.m1, dtype=np.int64)
        if self.theta is None:
            self.theta = np.zeros(self.pi.size)

    @property
    def K(self) -> int:
        return self.pi.size

    @property
    def m0(self) -> np.ndarray:
        return self.M - self.m1

    @property
    def observed(self) -> np.ndarray:
        return self.m1 > 0

    @property
    def T(self) -> int:
        return int(np.count_nonzero(self.observed))

    def atom(self, k: int) -> McmcAtomState:
        w = None if self.d[k] == 1 else float(self.w[k])
        return McmcAtomState(float(self.pi[k]), w, int(self.d[k]), int(self.m1[k]), int(self.M - self.m1[k]))

    def select(self, keep: np.ndarray) -> None:
        for name in ("pi", "d", "w", "m1", "theta"):
            setattr(self, name, getattr(self, name)[keep])

    def append(self, pi, d, w, theta) -> None:
        self.pi = np.concatenate([self.pi, pi])
        self.d = np.concatenate([self.d, np.asarray(d, dtype=np.int64)])
        self.w = np.concatenate([self.w, w])
        self.m1 = np.concatenate([self.m1, np.zeros(len(pi), dtype=np.int64)])
        self.theta = np.concatenate([self.theta, theta])

    def copy(self) -> "McmcState":
        return McmcState(self.pi.copy(), self.d.copy(), self.w.copy(), self.m1.copy(), self.M,
                         self.alpha, self.gamma, self.hyper, self.theta.copy(), self.iteration)


def check_state(state: McmcState) -> None:
    """Raise AssertionError if any atom violates its invariants."""
    pi, w, d = state.pi, state.w, state.d
    assert np.all((pi > 0) & (pi < 1)), "pi outside (0, 1)"
    assert np.all(d >= 1), "round index below 1"
    aux = d > 1
    assert np.all(np.isnan(w[~aux])), "w present on a round-1 atom"
    assert np.all((w[aux] > pi[aux]) & (w[aux] < 1)), "w outside (pi, 1)"
    assert np.all((state.m1 >= 0) & (state.m1 <= state.M)), "m1 outside [0, M]"
    assert state.alpha > 0 and state.gamma > 0


# -- weights and auxiliaries ---------------------------------------------------

def pi_log_target(pi, w, d, m1, m0, alpha) -> float:
    """Log of ``pi**m1 (1-pi)**m0 f_d(pi | w, alpha)`` up to a constant; -inf off support."""
    upper = w if d > 1 else 1.0
    return _kernels.log_pi_target(float(pi), float(upper), int(m1), int(m0), float(alpha))


def w_log_target(w, pi, d, alpha) -> float:
    return _kernels.log_w_target(float(w), float(pi), int(d), float(alpha))


def mh_update_pi(state: McmcState, rng: np.random.Generator, steps: int, sigma: float,
                 idx: np.ndarray | None = None) -> int:
    """Random-walk MH on ``pi`` for atoms ``idx`` (default: observed atoms)."""
    if idx is None:
        idx = np.flatnonzero(state.observed)
    if idx.size == 0 or steps == 0:
        return 0
    normals = rng.standard_normal((idx.size, steps))
    uniforms = rng.random((idx.size, steps))
    pi = state.pi[idx].copy()
    w = np.where(state.d[idx] > 1, state.w[idx], 1.0)
    acc = _kernels.mh_pi_kernel(pi, w, state.d[idx], state.m1[idx], state.m0[idx],
                                float(state.alpha), float(sigma), normals, uniforms)
    state.pi[idx] = pi
    return int(acc)


def mh_update_w(state: McmcState, rng: np.random.Generator, steps, sigma: float,
                idx: np.ndarray | None = None) -> int:
    """Random-walk MH on ``w`` for atoms ``idx`` with ``d > 1``.

    ``steps`` may be per-atom (aligned with ``idx``).
    """
    if idx is None:
        idx = np.flatnonzero(state.observed)
    idx = np.asarray(idx, dtype=np.int64)
    steps = np.broadcast_to(np.asarray(steps, dtype=np.int64), idx.shape)
    aux = state.d[idx] > 1
    idx, steps = idx[aux], np.ascontiguousarray(steps[aux])
    if idx.size == 0:
        return 0
    width = int(steps.max()) if steps.size else 0
    if width == 0:
        return 0
    normals = rng.standard_normal((idx.size, width))
    uniforms = rng.random((idx.size, width))
    w = state.w[idx].copy()
    acc = _kernels.mh_w_kernel(state.pi[idx].copy(), w, state.d[idx], float(state.alpha), float(sigma),
                               normals, uniforms, steps)
    state.w[idx] = w
    return int(acc)


# -- round indicators -----------------------------------------------------------

class RateCache:
    """Observed-atom rate profile ``xi_i / gamma`` for the current alpha, grown on demand."""

    def __init__(self, alpha: float, M: int, quad: QuadratureConfig):
        self.alpha, self.M, self.quad = alpha, M, quad
        self.profile = observed_rate_profile(alpha, M, 64, quad) if M > 0 else np.zeros(64)

    def get(self, imax: int) -> np.ndarray:
        if imax > self.profile.size:
            size = max(imax, 2 * self.profile.size)
            self.profile = observed_rate_profile(self.alpha, self.M, size, self.quad) \
                if self.M > 0 else np.zeros(size)
        return self.profile[:imax]


def _log_retained_likelihood(rounds, pi, w, alpha):
    """Log of the round-``i`` joint density at (pi, w) for ``i >= 2`` and of
    ``alpha (1-pi)**(alpha-1)`` for ``i = 1``."""
    rounds = np.asarray(rounds)
    ell = -math.log(w)
    with np.errstate(divide="ignore"):
        out = (rounds * math.log(alpha) - gammaln(np.maximum(rounds - 1.0, 1.0))
               - math.log(w) + (rounds - 2.0) * math.log(ell) + (alpha - 1.0) * math.log(w - pi))
    if ell == 0.0:
        out = np.where(rounds == 2, rounds * math.log(alpha) - math.log(w) + (alpha - 1.0) * math.log(w - pi), -np.inf)
    first = math.log(alpha) + (alpha - 1.0) * math.log1p(-pi)
    return np.where(rounds == 1, first, out)


class RoundConditional:
    """Unnormalized log probabilities of an atom's round indicator.

    ``kind`` selects the likelihood: ``"retained"`` uses the current (pi, w),
    ``"marginal"`` integrates ``w`` out numerically (giving ``f_i(pi)``).
    With ``use_rates`` the round prior ``xi_i`` multiplies the likelihood, and
    ``first_factor`` rescales the ``i = 1`` term (pseudo-prior density of w).
    """

    BLOCK = 32

    def __init__(self, pi, w, alpha, kind, rates: RateCache | None, quad, first_factor=1.0):
        self.pi, self.w, self.alpha, self.kind = pi, w, alpha, kind
        self.rates, self.quad, self.first_factor = rates, quad, first_factor
        self._cache = np.empty(0)
        top = -math.log(pi) if kind == "marginal" else -math.log(w)
        # beyond this index every factor is nonincreasing in i
        self.monotone_from = int(math.ceil(alpha * top)) + 2

    def _extend(self, imax):
        if imax <= self._cache.size:
            return
        imax = max(imax, self._cache.size + self.BLOCK)
        rounds = np.arange(1, imax + 1)
        if self.kind == "marginal":
            with np.errstate(divide="ignore"):
                vals = np.log(round_densities(self.pi, imax, self.alpha, self.quad))
        else:
            vals = _log_retained_likelihood(rounds, self.pi, self.w, self.alpha)
        vals = vals.astype(float)
        vals[0] += math.log(self.first_factor)
        if self.rates is not None:
            with np.errstate(divide="ignore"):
                vals = vals + np.log(self.rates.get(imax))
        self._cache = vals

    def log_p(self, imax: int) -> np.ndarray:
        self._extend(imax)
        return self._cache[:imax]


@dataclass
class DrawInfo:
    depth: int
    envelope_depth: int


def slice_sample_round(cond: RoundConditional, current: int, rng: np.random.Generator,
                       envelope: Callable[[float], int] | None = None) -> tuple[int, DrawInfo]:
    """One slice-sampling move for a discrete variable on {1, 2, ...}.

    Draws a level under the current probability, enumerates rounds until the
    probabilities are past their monotone region and below the level, and
    picks uniformly among rounds above the level.
    """
    lp_cur = cond.log_p(current)[current - 1]
    level = lp_cur + math.log(rng.random())
    i = 0
    candidates = []
    while True:
        i += 1
        lp = cond.log_p(i)[i - 1]
        if lp > level:
            candidates.append(i)
        elif i >= cond.monotone_from:
            break
        if i >= MAX_ROUND:
            raise FloatingPointError(f"round enumeration exceeded {MAX_ROUND} (level {level})")
    depth = i
    env_depth = envelope(level) if envelope is not None else depth
    choice = candidates[int(rng.integers(len(candidates)))]
    return choice, DrawInfo(depth, env_depth)


def _envelope_depth(cond: RoundConditional, M: int):
    """Depth predicted by a decaying envelope on the round probabilities.

    Past ``monotone_from`` the likelihood factor is at most its value there;
    with the rate prior, ``xi_i / gamma <= M alpha**-1 (alpha/(1+alpha))**i``
    supplies geometric decay, otherwise the Poisson-shaped likelihood decays
    by at least ``alpha ell / (i - 1)`` per round.
    """
    alpha = cond.alpha
    i0 = cond.monotone_from

    def depth(level):
        lp0 = float(cond.log_p(i0)[i0 - 1])
        i = i0
        if cond.rates is None:
            ell = -math.log(cond.pi if cond.kind == "marginal" else cond.w)
            env = lp0
            while env >= level:
                env += math.log(alpha * ell) - math.log(i - 1) if ell > 0 else -np.inf
                i += 1
            return i
        lik0 = lp0 - math.log(cond.rates.get(i0)[i0 - 1])
        log_ratio = math.log(alpha / (1.0 + alpha))
        while math.log(M) - math.log(alpha) + i * log_ratio + lik0 >= level:
            i += 1
        return i

    return depth


def gibbs_update_d(state: McmcState, rng: np.random.Generator, config: SamplerConfig,
                   rates: RateCache | None = None, idx: np.ndarray | None = None,
                   record: list | None = None) -> np.ndarray:
    """Update the round indicator of each observed atom; returns indices of
    atoms whose ``w`` was freshly initialized (moved from round 1)."""
    if idx is None:
        idx = np.flatnonzero(state.observed)
    quad = config.quad
    alpha = float(state.alpha)
    if config.mode == "paper" and rates is None:
        rates = RateCache(alpha, state.M, quad)
    fresh = []
    for k in idx:
        pi, d = float(state.pi[k]), int(state.d[k])
        if config.mode == "paper":
            if d > 1:
                cond = RoundConditional(pi, float(state.w[k]), alpha, "retained", rates, quad)
            else:
                cond = RoundConditional(pi, None, alpha, "marginal", rates, quad)
        else:
            if d == 1:
                state.w[k] = rng.uniform(pi, 1.0)  # refresh the pseudo-prior draw
            cond = RoundConditional(pi, float(state.w[k]), alpha, "retained", None, quad,
                                    first_factor=1.0 / (1.0 - pi))
        new_d, info = slice_sample_round(cond, d, rng, _envelope_depth(cond, state.M) if record is not None else None)
        if record is not None:
            record.append(info)
        if new_d == 1:
            state.w[k] = np.nan
        elif d == 1 and config.mode == "paper":
            state.w[k] = rng.uniform(pi, 1.0)
            fresh.append(k)
        state.d[k] = new_d
    fresh = np.asarray(fresh, dtype=np.int64)
    if fresh.size:
        mh_update_w(state, rng, config.w_init_steps, config.sigma_w, fresh)
    return fresh


# -- concentration and mass -------------------------------------------------------

def harmonic_rate(alpha: float, M: int) -> float:
    """``sum_{n<M} alpha / (alpha + n)``."""
    return float(np.sum(alpha / (alpha + np.arange(M, dtype=float))))


def alpha_conditional_params(state: McmcState) -> tuple[float, float]:
    """Shape and rate of the Gamma full conditional of alpha over the observed atoms
    (``w`` taken as 1 for round-1 atoms)."""
    obs = state.observed
    d = state.d[obs]
    w = np.where(d > 1, state.w[obs], 1.0)
    shape = state.hyper.tau1 + float(d.sum())
    rate = state.hyper.tau2 - float(np.sum(np.log(w - state.pi[obs])))
    if not rate > 0:
        raise FloatingPointError(f"non-positive Gamma rate {rate!r} for alpha")
    return shape, rate


def gamma_conditional_params(state: McmcState) -> tuple[float, float]:
    return (state.hyper.kappa1 + state.T,
            state.hyper.kappa2 + harmonic_rate(state.alpha, state.M))


def gibbs_update_alpha(state: McmcState, rng: np.random.Generator, mode: str = "paper") -> float:
    shape, rate = alpha_conditional_params(state)
    prop = rng.gamma(shape, 1.0 / rate)
    if mode == "exact":
        log_ratio = -state.gamma * (harmonic_rate(prop, state.M) - harmonic_rate(state.alpha, state.M))
        if math.log(rng.random()) >= log_ratio:
            return state.alpha
    state.alpha = float(prop)
    return state.alpha


def gibbs_update_gamma(state: McmcState, rng: np.random.Generator) -> float:
    shape, rate = gamma_conditional_params(state)
    state.gamma = float(rng.gamma(shape, 1.0 / rate))
    return state.gamma


# -- completing the rounds -------------------------------------------------------

def _tilted_round_draws(i, alpha, M, count, rng):
    """``count`` (pi, w) draws from the round-``i`` law reweighted by ``(1-pi)**M``."""
    pis, ws = [], []
    need = count
    while need > 0:
        batch = max(16, 2 * need)
        pi, w = round_weights_and_aux(i, alpha, batch, rng)
        keep = rng.random(batch) < np.exp(M * np.log1p(-pi))
        pis.append(pi[keep][:need])
        ws.append(w[keep][:need])
        need -= pis[-1].size
    return np.concatenate(pis), np.concatenate(ws)


def rounds_to_complete(state: McmcState, config: SamplerConfig) -> int:
    obs = state.observed
    deepest = int(state.d[obs].max()) if obs.any() else 0
    rounds = deepest + config.extra_rounds
    if config.tail_tol is not None and state.M > 0:
        ratio = state.alpha / (1.0 + state.alpha)
        need = math.log(config.tail_tol / (state.gamma * state.M)) / math.log(ratio)
        rounds = max(rounds, int(math.ceil(need)))
    return rounds


def sample_new_atoms(state: McmcState, rng: np.random.Generator, config: SamplerConfig,
                     rates: RateCache | None = None, n_rounds: int | None = None):
    """Drop unobserved atoms and redraw them for each round up to ``n_rounds``.

    Round ``i`` receives ``Poisson(gamma - xi_i)`` atoms at uniform locations.
    Returns ``(keep, n_new)``: indices of retained atoms and the number appended.
    """
    keep = np.flatnonzero(state.observed)
    state.select(keep)
    if n_rounds is None:
        n_rounds = rounds_to_complete(state, config)
    if n_rounds == 0:
        return keep, 0
    if rates is None or rates.alpha != state.alpha:
        rates = RateCache(float(state.alpha), state.M, config.quad)
    means = state.gamma * (1.0 - rates.get(n_rounds))
    if np.any(means < 0):
        log.warning("negative unobserved-atom mean clamped to 0 (gamma=%g)", state.gamma)
        means = np.maximum(means, 0.0)
    counts = rng.poisson(means)
    total = int(counts.sum())
    if total == 0:
        return keep, 0
    pis, ws, ds = [], [], []
    for i, c in enumerate(counts, start=1):
        if c == 0:
            continue
        if config.mode == "exact":
            pi, w = _tilted_round_draws(i, state.alpha, state.M, c, rng)
        else:
            pi, w = round_weights_and_aux(i, state.alpha, c, rng)
        pis.append(pi)
        ws.append(w)
        ds.append(np.full(c, i))
    pi = np.concatenate(pis)
    w = np.concatenate(ws)
    # auxiliaries that collapse onto pi (tiny weights) would leave the support
    w = np.where(np.concatenate(ds) > 1, np.maximum(w, np.nextafter(pi, 1.0)), np.nan)
    state.append(pi, np.concatenate(ds), np.minimum(w, np.nextafter(1.0, 0.0)), rng.random(total))
    return keep, total


# -- driver -----------------------------------------------------------------------

class LikelihoodHook(Protocol):
    """Model-specific part of the sweep: owns the binary matrix over atoms."""

    M: int

    def reindex(self, keep: np.ndarray, n_new: int, rng: np.random.Generator) -> None: ...

    def update(self, state: McmcState, rng: np.random.Generator) -> np.ndarray: ...

    def snapshot(self, state: McmcState) -> dict: ...


@dataclass(frozen=True)
class Schedule:
    iterations: int
    burn_in: int = 0
    thin: int = 1

    def __post_init__(self):
        if self.iterations < 0 or self.burn_in < 0 or self.thin < 1:
            raise ValueError(f"invalid schedule {self}")

    def keep(self, it: int) -> bool:
        return it >= self.burn_in and (it - self.burn_in) % self.thin == 0


@dataclass
class SampleArchive:
    iteration: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    T: list = field(default_factory=list)
    pi: list = field(default_factory=list)
    d: list = field(default_factory=list)
    extras: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.iteration)

    def add(self, state: McmcState, extra: dict | None):
        obs = state.observed
        self.iteration.append(state.iteration)
        self.alpha.append(state.alpha)
        self.gamma.append(state.gamma)
        self.T.append(state.T)
        self.pi.append(state.pi[obs].copy())
        self.d.append(state.d[obs].copy())
        self.extras.append(extra or {})


def sweep(state: McmcState, hook: LikelihoodHook, rng: np.random.Generator, config: SamplerConfig,
          timings: dict | None = None) -> None:
    """One iteration: pi, w, d, alpha, gamma, new atoms, then the model update."""
    clock = time.perf_counter
    t0 = clock()
    mh_update_pi(state, rng, config.pi_steps, config.sigma_pi)
    mh_update_w(state, rng, config.w_steps, config.sigma_w)
    t1 = clock()
    rates = RateCache(float(state.alpha), state.M, config.quad) if config.mode == "paper" else None
    gibbs_update_d(state, rng, config, rates)
    t2 = clock()
    if config.sample_alpha:
        gibbs_update_alpha(state, rng, config.mode)
    if config.sample_gamma:
        gibbs_update_gamma(state, rng)
    if rates is not None and rates.alpha != state.alpha:
        rates = None
    keep, n_new = sample_new_atoms(state, rng, config, rates)
    hook.reindex(keep, n_new, rng)
    t3 = clock()
    state.m1 = np.asarray(hook.update(state, rng), dtype=np.int64)
    t4 = clock()
    state.iteration += 1
    if timings is not None:
        for key, dt in (("pi_w", t1 - t0), ("d", t2 - t1), ("params_atoms", t3 - t2), ("model", t4 - t3)):
            timings[key] = timings.get(key, 0.0) + dt


def run_chain(state: McmcState, hook: LikelihoodHook, schedule: Schedule, rng: np.random.Generator,
              config: SamplerConfig = SamplerConfig(), progress: int = 0) -> SampleArchive:
    """Run ``schedule.iterations`` sweeps, archiving thinned post-burn-in states.

    On failure raises :class:`ChainError` carrying a copy of the last good state.
    """
    archive = SampleArchive()
    timings: dict = {}
    start = time.perf_counter()
    for it in range(schedule.iterations):
        checkpoint = state.copy()
        try:
            sweep(state, hook, rng, config, timings)
        except Exception as exc:
            raise ChainError(f"sweep {it} failed: {exc!r}", checkpoint, it) from exc
        if schedule.keep(it):
            archive.add(state, hook.snapshot(state))
        if progress and (it + 1) % progress == 0:
            log.info("iteration %d/%d  T=%d alpha=%.3g gamma=%.3g", it + 1, schedule.iterations,
                     state.T, state.alpha, state.gamma)
    timings["total"] = time.perf_counter() - start
    archive.timings = timings
    return archive


# -- Bernoulli-only likelihood (no model layer) --------------------------------------

class BernoulliHook:
    """Binary rows observed directly: the data are the Bernoulli process itself.

    With ``resample=True`` the rows are redrawn from the current weights each
    sweep (successive-conditional simulation); otherwise they stay fixed and
    newly added atoms carry zero columns.
    """

    def __init__(self, X: np.ndarray, resample: bool = False):
        self.X = np.asarray(X, dtype=np.int8)
        self.M = self.X.shape[0]
        self.resample = resample

    def reindex(self, keep, n_new, rng):
        self.X = np.concatenate([self.X[:, keep], np.zeros((self.M, n_new), dtype=np.int8)], axis=1)

    def update(self, state, rng):
        if self.resample:
            self.X = (rng.random((self.M, state.K)) < state.pi).astype(np.int8)
        return self.X.sum(axis=0)

    def snapshot(self, state):
        return {}


def initial_state(K: int, M: int, alpha: float, gamma: float, rng: np.random.Generator,
                  hyper: Hyperparams = Hyperparams(), pi0: float | None = None) -> McmcState:
    """``K`` round-1 atoms with weights ``pi0`` (or uniform draws) and no data yet."""
    pi = np.full(K, pi0) if pi0 is not None else rng.uniform(0.05, 0.95, K)
    return McmcState(pi, np.ones(K, dtype=np.int64), np.full(K, np.nan), np.zeros(K, dtype=np.int64),
                     M, alpha, gamma, hyper, rng.random(K))


def archive_rows(archive: SampleArchive):
    """Header and rows for the sample-archive CSV (per-atom columns padded with blanks)."""
    kmax = max((p.size for p in archive.pi), default=0)
    header = ["iteration", "alpha", "gamma", "T"]
    header += [f"pi_{j}" for j in range(kmax)] + [f"d_{j}" for j in range(kmax)]
    rows = []
    for it, a, g, t, p, d in zip(archive.iteration, archive.alpha, archive.gamma, archive.T, archive.pi, archive.d):
        pad = kmax - p.size
        row = [str(it), repr(float(a)), repr(float(g)), str(t)]
        row += [repr(float(x)) for x in p] + [""] * pad
        row += [str(int(x)) for x in d] + [""] * pad
        rows.append(row)
    return header, rows


def manifest(config: SamplerConfig, schedule: Schedule, seed, archive: SampleArchive, extra: dict | None = None) -> str:
    doc = {
        "sampler": asdict(config),
        "schedule": asdict(schedule),
        "seed": seed,
        "retained": len(archive),
        "timings": {k: round(v, 6) for k, v in archive.timings.items()},
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True)
