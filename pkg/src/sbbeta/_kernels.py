"""Hot inner loops of the sampler.

Every kernel takes its random numbers as arrays drawn by the caller, so the
numba and plain-Python paths agree bit for bit up to floating-point
reassociation.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import njit


@njit
def log_pi_target(pi, upper, m1, m0, alpha):
    # pi**m1 (1-pi)**m0 (upper-pi)**(alpha-1) on (0, upper)
    if pi <= 0.0 or pi >= upper:
        return -np.inf
    out = (alpha - 1.0) * math.log(upper - pi)
    if m1 > 0:
        out += m1 * math.log(pi)
    if m0 > 0:
        out += m0 * math.log1p(-pi)
    return out


@njit
def log_w_target(w, pi, d, alpha):
    # w**-1 (-ln w)**(d-2) (w-pi)**(alpha-1) on (pi, 1)
    if w <= pi or w >= 1.0:
        return -np.inf
    out = -math.log(w) + (alpha - 1.0) * math.log(w - pi)
    if d > 2:
        out += (d - 2) * math.log(-math.log(w))
    return out


@njit
def mh_pi_kernel(pi, w, d, m1, m0, alpha, sigma, normals, uniforms):
    """Random-walk MH on each atom's weight; rows of ``normals`` / ``uniforms``
    hold that atom's proposals. Returns the number of accepted moves."""
    accepted = 0
    for k in range(pi.shape[0]):
        upper = w[k] if d[k] > 1 else 1.0
        cur = pi[k]
        lcur = log_pi_target(cur, upper, m1[k], m0[k], alpha)
        for s in range(normals.shape[1]):
            prop = cur + sigma * normals[k, s]
            lprop = log_pi_target(prop, upper, m1[k], m0[k], alpha)
            if math.log(uniforms[k, s]) < lprop - lcur:
                cur = prop
                lcur = lprop
                accepted += 1
        pi[k] = cur
    return accepted


@njit
def mh_w_kernel(pi, w, d, alpha, sigma, normals, uniforms, steps):
    """Random-walk MH on the auxiliary ``w`` of atoms with ``d > 1``;
    atom ``k`` uses the first ``steps[k]`` columns of its row."""
    accepted = 0
    for k in range(pi.shape[0]):
        if d[k] <= 1:
            continue
        cur = w[k]
        lcur = log_w_target(cur, pi[k], d[k], alpha)
        for s in range(steps[k]):
            prop = cur + sigma * normals[k, s]
            lprop = log_w_target(prop, pi[k], d[k], alpha)
            if math.log(uniforms[k, s]) < lprop - lcur:
                cur = prop
                lcur = lprop
                accepted += 1
        w[k] = cur
    return accepted


@njit
def z_block_kernel(Y, Theta, W, Z, log_odds, noise_var, uniforms, normals, singleton, theta_normals):
    """Gibbs sweep over entries (k, n), sampling (Z_kn, W_kn) jointly with W_kn
    integrated out of the flip odds. Updates ``W`` and ``Z`` in place.

    With ``singleton`` set, an atom used by no other observation is updated
    as the block (Z_kn, Theta_k) given W_kn, with Theta_k integrated out of the
    flip odds; ``Theta`` is then redrawn in place from its conditional (the
    prior when the atom ends up unused). ``theta_normals`` has shape (K, N, D).
    """
    D, N = Y.shape
    K = Theta.shape[1]
    sq = np.empty(K)
    counts = np.zeros(K, dtype=np.int64)
    for k in range(K):
        acc = 0.0
        for i in range(D):
            acc += Theta[i, k] * Theta[i, k]
        sq[k] = acc / noise_var
        for n in range(N):
            counts[k] += Z[k, n]
    r = np.empty(D)
    for n in range(N):
        for i in range(D):
            acc = Y[i, n]
            for k in range(K):
                if Z[k, n] != 0:
                    acc -= Theta[i, k] * W[k, n]
            r[i] = acc
        for k in range(K):
            was_on = Z[k, n] != 0
            if was_on:
                for i in range(D):
                    r[i] += Theta[i, k] * W[k, n]
            lo = log_odds[k]
            logit_u = math.log(uniforms[k, n]) - math.log1p(-uniforms[k, n])
            if singleton and counts[k] - Z[k, n] == 0 and abs(lo) != np.inf:
                w = W[k, n]
                s = w * w + noise_var
                rr = 0.0
                for i in range(D):
                    rr += r[i] * r[i]
                lo += -0.5 * D * math.log(s / noise_var) + 0.5 * rr * (1.0 / noise_var - 1.0 / s)
                on = logit_u < lo
                if on:
                    scale = math.sqrt(noise_var / s)
                    acc = 0.0
                    for i in range(D):
                        Theta[i, k] = w * r[i] / s + scale * theta_normals[k, n, i]
                        acc += Theta[i, k] * Theta[i, k]
                        r[i] -= Theta[i, k] * w
                    sq[k] = acc / noise_var
                    Z[k, n] = 1
                else:
                    acc = 0.0
                    for i in range(D):
                        Theta[i, k] = theta_normals[k, n, i]
                        acc += Theta[i, k] * Theta[i, k]
                    sq[k] = acc / noise_var
                    Z[k, n] = 0
                    W[k, n] = normals[k, n]
            else:
                b = 0.0
                for i in range(D):
                    b += Theta[i, k] * r[i]
                b /= noise_var
                prec = 1.0 + sq[k]
                if lo == np.inf:
                    on = True
                elif lo == -np.inf:
                    on = False
                else:
                    lo += -0.5 * math.log(prec) + 0.5 * b * b / prec
                    on = logit_u < lo
                if on:
                    Z[k, n] = 1
                    W[k, n] = b / prec + normals[k, n] / math.sqrt(prec)
                    for i in range(D):
                        r[i] -= Theta[i, k] * W[k, n]
                else:
                    Z[k, n] = 0
                    W[k, n] = normals[k, n]
            if on and not was_on:
                counts[k] += 1
            elif was_on and not on:
                counts[k] -= 1


@njit
def w_column_kernel(Y, Theta, W, Z, noise_var, normals):
    """Draw each column of W from its Gaussian full conditional given Z and Theta.
    Entries with Z = 0 are drawn from the N(0, 1) prior."""
    D, N = Y.shape
    K = Theta.shape[1]
    for n in range(N):
        idx = np.empty(K, dtype=np.int64)
        s = 0
        for k in range(K):
            if Z[k, n] != 0:
                idx[s] = k
                s += 1
            else:
                W[k, n] = normals[k, n]
        if s == 0:
            continue
        P = np.empty((s, s))
        h = np.empty(s)
        for a in range(s):
            ka = idx[a]
            acc = 0.0
            for i in range(D):
                acc += Theta[i, ka] * Y[i, n]
            h[a] = acc / noise_var
            for c in range(a, s):
                kc = idx[c]
                acc = 0.0
                for i in range(D):
                    acc += Theta[i, ka] * Theta[i, kc]
                acc /= noise_var
                if a == c:
                    acc += 1.0
                P[a, c] = acc
                P[c, a] = acc
        L = np.linalg.cholesky(P)
        # mean = P^-1 h via two triangular solves; draw = mean + L^-T eps
        y = np.empty(s)
        for a in range(s):
            acc = h[a]
            for c in range(a):
                acc -= L[a, c] * y[c]
            y[a] = acc / L[a, a]
        x = np.empty(s)
        for a in range(s - 1, -1, -1):
            acc = y[a] + normals[idx[a], n]
            for c in range(a + 1, s):
                acc -= L[c, a] * x[c]
            x[a] = acc / L[a, a]
        for a in range(s):
            W[idx[a], n] = x[a]
