"""Numpy implementation of the parity-denominator kernels.

Same contract as the compiled ``_kernels`` module. ``bisect_roots`` runs
all brackets in lockstep so each bisection step is one vectorized
evaluation instead of a Python loop per interval.
"""
import numpy as np


def parity_eval(omega, shift, energies, weights):
    x = 1.0 / (omega - energies)
    return omega - shift - np.dot(weights, x), 1.0 + np.dot(weights, x * x)


def bisect_roots(lo, hi, shift, energies, weights, maxiter=200):
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    fa = np.full(a.size, -np.inf)
    fb = np.full(a.size, np.inf)
    active = np.ones(a.size, dtype=bool)
    for _ in range(maxiter):
        mid = 0.5 * (a + b)
        active &= (mid > a) & (mid < b)
        if not active.any():
            break
        idx = np.flatnonzero(active)
        m = mid[idx]
        f = m - shift - (weights / (m[:, None] - energies)).sum(axis=1)
        neg = f < 0
        pos = f > 0
        zero = ~(neg | pos)
        a[idx[neg]] = m[neg]
        fa[idx[neg]] = f[neg]
        b[idx[pos]] = m[pos]
        fb[idx[pos]] = f[pos]
        a[idx[zero]] = m[zero]
        b[idx[zero]] = m[zero]
        fa[idx[zero]] = 0.0
    mid = 0.5 * (a + b)
    out = np.where(np.abs(fa) <= np.abs(fb), np.where(np.isinf(fa), mid, a), b)
    return np.where(a == b, a, out)
