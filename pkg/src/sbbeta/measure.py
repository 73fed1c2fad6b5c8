"""Beta-process Levy density, per-round stick-breaking densities and
observed-atom rates.

Round ``i`` of the stick-breaking construction contributes atoms whose
weights have density ``f_i``; summing ``f_i`` over all rounds recovers the
Levy density ``alpha / pi * (1 - pi)**(alpha - 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln, xlog1py, xlogy

from .quadrature import DEFAULT_QUAD, QuadratureConfig, tanh_sinh


@dataclass(frozen=True)
class ProcessParams:
    """Concentration ``alpha`` and total base mass ``gamma``."""

    alpha: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "gamma"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be finite and > 0, got {alpha!r}")
    return alpha


def check_round(i) -> int:
    if int(i) != i or i < 1:
        raise ValueError(f"round index must be an integer >= 1, got {i!r}")
    return int(i)


def _open_unit(pi):
    arr = np.asarray(pi, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("pi must lie strictly inside (0, 1)")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def levy_density(pi, alpha: float):
    """``alpha * pi**-1 * (1 - pi)**(alpha - 1)`` for ``pi`` in (0, 1)."""
    alpha = check_alpha(alpha)
    p = _open_unit(pi)
    return _out(alpha / p * np.exp((alpha - 1.0) * np.log1p(-p)), pi)


def log_round_prefactor(i: int, alpha: float) -> float:
    """``log(alpha**i / (i - 2)!)`` for ``i >= 2``."""
    return i * math.log(alpha) - float(gammaln(i - 1))


def _log_expm1(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > 1.0, x + np.log(-np.expm1(-np.maximum(x, 1.0))), np.log(np.expm1(np.minimum(x, 1.0))))


def _auxiliary_integrals(p, rounds, alpha, quad):
    """``f_i(p)`` for every ``i`` in ``rounds`` (all >= 2); shape p.shape + (len(rounds),).

    With ``t = ln(1/w)`` and ``L = ln(1/p)`` the integral becomes
    ``int_0^L t**(i-2) (p expm1(L - t))**(alpha-1) dt``. For ``alpha < 1`` the
    endpoint singularity at ``t = L`` is absorbed by ``v = (L - t)**alpha``.
    """
    rounds = np.asarray(rounds, dtype=float)
    logpre = rounds * math.log(alpha) - gammaln(rounds - 1.0)
    powers = rounds - 2.0
    log_p = np.log(p)
    L = -log_p

    def terms(t, log_weight):
        with np.errstate(divide="ignore"):
            logterm = log_weight[..., None] + xlogy(powers, t[..., None]) + logpre
        return np.exp(logterm)

    if alpha >= 1.0:
        def integrand(t, t_lo, s):
            # s = L - t, measured from the upper endpoint
            return terms(t_lo, (alpha - 1.0) * (log_p + _log_expm1(s)))

        return tanh_sinh(integrand, 0.0, L, quad)

    top = L ** alpha

    def integrand_v(v, v_lo, v_hi):
        # ds = s**(1-alpha) dv / alpha; the s**(alpha-1) of expm1(s)**(alpha-1) cancels it
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.exp(np.log(v_lo) / alpha)
            t = -L * np.expm1(np.log1p(-v_hi / top) / alpha)
            ratio = np.where(s > 1e-8, _log_expm1(s) - np.log(s), 0.5 * s)
        return terms(t, (alpha - 1.0) * (log_p + ratio) - math.log(alpha))

    return tanh_sinh(integrand_v, 0.0, top, quad)


def round_densities(pi, imax: int, alpha: float, quad: QuadratureConfig = DEFAULT_QUAD):
    """Densities ``f_1 .. f_imax`` at ``pi``; the last axis indexes the round."""
    alpha = check_alpha(alpha)
    imax = check_round(imax)
    p = _open_unit(pi)
    first = alpha * np.exp((alpha - 1.0) * np.log1p(-p))
    if imax == 1:
        return first[..., None]
    rest = _auxiliary_integrals(p, np.arange(2, imax + 1), alpha, quad)
    return np.concatenate([first[..., None], rest], axis=-1)


def round_density(pi, i: int, alpha: float, quad: QuadratureConfig = DEFAULT_QUAD):
    """Density of the ``i``-th break of a Beta(1, alpha) stick-breaking process."""
    alpha = check_alpha(alpha)
    i = check_round(i)
    p = _open_unit(pi)
    if i == 1:
        val = alpha * np.exp((alpha - 1.0) * np.log1p(-p))
    else:
        val = _auxiliary_integrals(p, [i], alpha, quad)[..., 0]
    return _out(val, pi)


def joint_round_density(pi, w, i: int, alpha: float):
    """Normalized joint density of (weight, auxiliary w) for a round ``i >= 2`` atom.

    Zero outside ``0 < pi < w < 1``.
    """
    alpha = check_alpha(alpha)
    i = check_round(i)
    if i == 1:
        raise ValueError("round 1 atoms carry no auxiliary variable")
    p = np.asarray(pi, dtype=float)
    ww = np.asarray(w, dtype=float)
    p, ww = np.broadcast_arrays(p, ww)
    inside = (p > 0.0) & (p < ww) & (ww < 1.0)
    out = np.zeros(p.shape)
    if np.any(inside):
        pi_in, w_in = p[inside], ww[inside]
        out[inside] = np.exp(
            log_round_prefactor(i, alpha)
            - np.log(w_in)
            + xlogy(i - 2.0, -np.log(w_in))
            + (alpha - 1.0) * np.log(w_in - pi_in)
        )
    return _out(out, np.broadcast(pi, w))


def tail_density(pi, alpha: float, R: int, quad: QuadratureConfig = DEFAULT_QUAD):
    """Density of the discarded part after keeping rounds ``1..R``.

    Computed as the Levy density minus the first ``R`` round densities and
    clamped at zero against cancellation.
    """
    alpha = check_alpha(alpha)
    if int(R) != R or R < 0:
        raise ValueError(f"R must be an integer >= 0, got {R!r}")
    lam = np.asarray(levy_density(pi, alpha))
    if R == 0:
        return _out(lam, pi)
    kept = round_densities(pi, int(R), alpha, quad).sum(axis=-1)
    return _out(np.maximum(lam - kept, 0.0), pi)


def expected_round_weight(i: int, alpha: float) -> float:
    """Mean weight of a round-``i`` atom: ``alpha**-1 * (alpha / (1 + alpha))**i``."""
    alpha = check_alpha(alpha)
    i = check_round(i)
    return (alpha / (1.0 + alpha)) ** i / alpha


def observed_fraction(w, alpha: float, M: int):
    """``E_V[1 - (1 - V w)**M]`` for ``V ~ Beta(1, alpha)``.

    Expanding the power gives ``E[K / (alpha + K)]`` with ``K ~ Binomial(M, w)``,
    a sum of nonnegative terms.
    """
    alpha = check_alpha(alpha)
    w = np.asarray(w, dtype=float)
    if M == 0:
        return np.zeros(w.shape)
    k = np.arange(M + 1, dtype=float)
    log_binom = gammaln(M + 1.0) - gammaln(k + 1.0) - gammaln(M - k + 1.0)
    ratio = k / (alpha + k)
    flat = w.reshape(-1)
    out = np.empty(flat.shape)
    chunk = max(1, 2_000_000 // (M + 1))
    for start in range(0, flat.size, chunk):
        ws = flat[start:start + chunk, None]
        logpmf = log_binom + xlogy(k, ws) + xlog1py(M - k, -ws)
        out[start:start + chunk] = np.exp(logpmf) @ ratio
    return out.reshape(w.shape)


def observed_rate_profile(alpha: float, M: int, imax: int, quad: QuadratureConfig = DEFAULT_QUAD):
    """Per-unit-mass observed-atom rates ``xi_i / gamma`` for ``i = 1..imax``.

    Each entry is ``int f_i(pi) (1 - (1 - pi)**M) dpi``, evaluated by
    integrating over the auxiliary product factor ``W = exp(-T)``,
    ``T ~ Gamma(i - 1, alpha)``.
    """
    alpha = check_alpha(alpha)
    imax = check_round(imax)
    if int(M) != M or M < 0:
        raise ValueError(f"M must be an integer >= 0, got {M!r}")
    M = int(M)
    out = np.zeros(imax)
    if M == 0:
        return out
    out[0] = M / (alpha + M)
    if imax == 1:
        return out
    shapes = np.arange(1, imax, dtype=float)  # Gamma shape i - 1
    upper = float(stats.gamma.isf(1e-17, shapes[-1])) + 1.0

    def integrand(s, s_lo, s_hi):
        # s = alpha * T ~ Gamma(i - 1, 1)
        logpdf = xlogy(shapes - 1.0, s[:, None]) - s[:, None] - gammaln(shapes)
        g = observed_fraction(np.exp(-s / alpha), alpha, M)
        return np.exp(logpdf) * g[:, None]

    out[1:] = tanh_sinh(integrand, 0.0, upper, quad)
    return out


def observed_atom_rate_xi(i: int, params: ProcessParams, M: int, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Poisson mean of the number of round-``i`` atoms hit by ``M`` Bernoulli draws."""
    i = check_round(i)
    return params.gamma * float(observed_rate_profile(params.alpha, M, i, quad)[i - 1])


def expected_observed_atoms(params: ProcessParams, M: int) -> float:
    """``gamma * sum_{n<M} alpha / (alpha + n)``: total observed-atom rate over all rounds."""
    n = np.arange(int(M), dtype=float)
    return params.gamma * float(np.sum(params.alpha / (params.alpha + n)))


def observed_rate_tail_bound(R: int, params: ProcessParams, M: int) -> float:
    """Upper bound ``gamma * M * (alpha / (1 + alpha))**R`` on ``sum_{i>R} xi_i``."""
    return params.gamma * M * (params.alpha / (1.0 + params.alpha)) ** R
