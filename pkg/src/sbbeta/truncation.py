"""Truncation-error bounds for beta processes truncated after ``R`` rounds.

All bounds are probabilities of the event that some of ``M`` Bernoulli
process draws selects an atom from a discarded round.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .measure import ProcessParams, observed_rate_profile
from .quadrature import DEFAULT_QUAD, QuadratureConfig, tanh_sinh

SUM_RTOL = 1e-10
BOUND_NAMES = ("theorem3", "corollary1", "legacy")


def _check_counts(M, R):
    for name, v in (("M", M), ("R", R)):
        if int(v) != v or v < 0:
            raise ValueError(f"{name} must be an integer >= 0, got {v!r}")


def _ratio(params):
    return params.alpha / (1.0 + params.alpha)


def _prob_from_exponent(x):
    return float(np.clip(-np.expm1(-x), 0.0, 1.0))


def expected_missing_ones(params: ProcessParams, M: int, R: int) -> float:
    """Expected count of ones that ``M`` draws place on discarded atoms."""
    _check_counts(M, R)
    return params.gamma * M * _ratio(params) ** R


def corollary1_bound(params: ProcessParams, M: int, R: int) -> float:
    return _prob_from_exponent(expected_missing_ones(params, M, R))


def legacy_bound(params: ProcessParams, M: int, R: int) -> float:
    """The earlier analytic bound, which carries ``2M`` in the exponent."""
    return _prob_from_exponent(2.0 * expected_missing_ones(params, M, R))


def _profile_until_converged(params, M, R_max, quad):
    """Per-unit-mass observed rates, long enough that for every ``R <= R_max``
    the geometric bound on the unsummed remainder is below ``SUM_RTOL`` of the sum."""
    ratio = _ratio(params)
    imax = R_max + 32
    while True:
        prof = observed_rate_profile(params.alpha, M, imax, quad)
        tails = np.cumsum(prof[::-1])[::-1]  # tails[R] = sum_{i > R}, R < imax
        remainder = M * ratio ** imax
        if np.all(remainder < SUM_RTOL * tails[: R_max + 1]) or imax > 20_000:
            return tails[: R_max + 1]
        # each extra round shrinks the remainder by ``ratio``
        need = np.log(SUM_RTOL * tails[R_max] / remainder) / np.log(ratio)
        imax += max(16, int(np.ceil(need)) + 8)


def theorem3_exponents(params: ProcessParams, M: int, R_values, quad: QuadratureConfig = DEFAULT_QUAD):
    """``int nu_R^+(Omega, dpi) (1 - (1 - pi)**M)`` for each ``R`` in ``R_values``.

    Summed round by round. Capped by the corollary exponent, which it never
    exceeds exactly (``1 - (1 - pi)**M <= M pi``); the cap only absorbs
    quadrature error in deep rounds.
    """
    R_values = np.asarray(R_values, dtype=int)
    if M == 0:
        return np.zeros(R_values.shape)
    tails = _profile_until_converged(params, M, int(R_values.max()), quad)
    exps = params.gamma * tails[R_values]
    caps = params.gamma * M * _ratio(params) ** R_values.astype(float)
    return np.minimum(exps, caps)


def theorem3_bound(params: ProcessParams, M: int, R: int, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Exact probability that some draw selects an atom from rounds ``> R``."""
    _check_counts(M, R)
    return _prob_from_exponent(float(theorem3_exponents(params, M, [R], quad)[0]))


def _poisson_upper(R, ell, alpha):
    # P(Poisson(alpha * ell) >= R - 1), with R >= 1
    if R <= 1:
        return np.ones(np.shape(ell))
    return gammainc(R - 1.0, alpha * ell)


def tail_mass_above(x, alpha: float, R: int, quad: QuadratureConfig = DEFAULT_QUAD):
    """``nu_R^+(Omega, [x, 1]) / gamma`` for ``x`` in (0, 1).

    Uses the summed-series form of the discarded rounds,
    ``alpha * int_x^1 w**-1 P(Poisson(alpha ln(1/w)) >= R - 1) (1 - x/w)**alpha dw``,
    plus the round-1 mass ``(1 - x)**alpha`` when ``R = 0``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all((x > 0) & (x < 1)):
        raise ValueError("x must lie in (0, 1)")
    R_eff = max(int(R), 1)

    def integrand(w, w_minus_x, one_minus_w):
        ell = -np.log1p(-one_minus_w)
        return alpha * _poisson_upper(R_eff, ell, alpha) * np.exp(alpha * np.log(w_minus_x / w)) / w

    out = tanh_sinh(integrand, x, 1.0, quad)
    if R == 0:
        out = out + np.exp(alpha * np.log1p(-x))
    return out


def missing_atom_rate(params: ProcessParams, R: int, epsilon: float,
                      quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Poisson mean of the number of discarded atoms with weight ``>= epsilon``."""
    _check_counts(0, R)
    if not (0.0 < epsilon < 1.0):
        if epsilon <= 0.0:
            raise ValueError("the discarded measure of [epsilon, 1] diverges for epsilon <= 0")
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return params.gamma * float(tail_mass_above(epsilon, params.alpha, R, quad))


def simple_function_bound(params: ProcessParams, M: int, R: int, n: int,
                          quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Theorem-3 probability with weights rounded down to the grid ``k/n``.

    Cell ``[(k-1)/n, k/n)`` contributes its discarded mass times
    ``1 - (1 - (k-1)/n)**M``; the first cell contributes nothing.
    """
    _check_counts(M, R)
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if M == 0:
        return 0.0
    edges = np.arange(1, n, dtype=float) / n  # interior edges k/n, k = 1..n-1
    above = np.append(tail_mass_above(edges, params.alpha, R, quad), 0.0)
    cells = above[:-1] - above[1:]  # cells k = 2..n
    b = edges  # left endpoints (k-1)/n for k = 2..n
    hit = -np.expm1(M * np.log1p(-b))
    return _prob_from_exponent(params.gamma * float(np.sum(np.maximum(cells, 0.0) * hit)))


@dataclass(frozen=True)
class BoundCurve:
    params: ProcessParams
    M: int
    R: np.ndarray
    theorem3: np.ndarray
    corollary1: np.ndarray
    legacy: np.ndarray

    def values(self, name: str) -> np.ndarray:
        if name not in BOUND_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    def invariant_flags(self) -> dict:
        t, c, g = self.theorem3, self.corollary1, self.legacy
        vals = np.concatenate([t, c, g])
        order = np.argsort(self.R)
        return {
            "in_unit_interval": bool(np.all((vals >= 0) & (vals <= 1))),
            "theorem3_le_corollary1": bool(np.all(t <= c)),
            "corollary1_le_legacy": bool(np.all(c <= g)),
            "nonincreasing_in_R": all(bool(np.all(np.diff(v[order]) <= 0)) for v in (t, c, g)),
        }


def bound_sweep(params: ProcessParams, M: int, R_range, quad: QuadratureConfig = DEFAULT_QUAD) -> BoundCurve:
    R = np.asarray(list(R_range), dtype=int)
    if R.size == 0:
        raise ValueError("R range must be non-empty")
    _check_counts(M, int(R.min()))
    t = -np.expm1(-theorem3_exponents(params, M, R, quad))
    x = params.gamma * M * _ratio(params) ** R.astype(float)
    return BoundCurve(params, int(M), R, np.clip(t, 0, 1), -np.expm1(-x), -np.expm1(-2 * x))


def l1_gap(curve: BoundCurve, bound_a: str = "corollary1", bound_b: str = "theorem3") -> float:
    """Discrete L1 distance ``sum_R |a(R) - b(R)|`` over the curve's R values."""
    return float(np.sum(np.abs(curve.values(bound_a) - curve.values(bound_b))))


def l1_gap_grid(alphas, gammas, M: int, R_range=range(1, 101),
                quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """L1 gap between the corollary and exact curves on an (alpha, gamma) grid.

    Returns an array of shape ``(len(alphas), len(gammas))``.
    """
    R_range = list(R_range)
    out = np.empty((len(alphas), len(gammas)))
    for a_idx, a in enumerate(alphas):
        for g_idx, g in enumerate(gammas):
            curve = bound_sweep(ProcessParams(float(a), float(g)), M, R_range, quad)
            out[a_idx, g_idx] = l1_gap(curve)
    return out


def simulate_truncation_event(params: ProcessParams, M: int, R: int, replicates: int,
                              rng: np.random.Generator, tail_tol: float = 1e-10) -> np.ndarray:
    """Monte Carlo indicators of the truncation event.

    Each replicate draws a beta process deep enough that the expected number
    of observed atoms beyond it is below ``tail_tol``, then ``M`` Bernoulli
    rows, and records whether any row has a one on an atom from a round
    after ``R``.
    """
    from .construct import draw_beta_process, draw_bernoulli_process

    _check_counts(M, R)
    depth = max(R + 1, 1)
    while params.gamma * M * _ratio(params) ** depth > tail_tol:
        depth += 1
    hits = np.empty(replicates, dtype=bool)
    for j in range(replicates):
        H = draw_beta_process(params, depth, rng)
        X = draw_bernoulli_process(H, M, rng).indicators
        hits[j] = bool(X[:, H.rounds > R].any())
    return hits
