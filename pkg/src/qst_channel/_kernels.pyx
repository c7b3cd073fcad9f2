# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the parity resolvent denominators.

``D(w) = w - shift - sum_j weights[j] / (w - energies[j])`` with
non-negative weights, so ``D`` increases between consecutive poles.
Signatures mirror ``qst_channel._kernels_py``.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


cdef inline double _value(double w, double shift, const double[::1] e,
                          const double[::1] wt) noexcept nogil:
    cdef Py_ssize_t j
    cdef double acc = 0.0
    for j in range(e.shape[0]):
        acc += wt[j] / (w - e[j])
    return w - shift - acc


def parity_eval(double omega, double shift, const double[::1] energies,
                const double[::1] weights):
    cdef Py_ssize_t j
    cdef double x, s = 0.0, ds = 0.0
    for j in range(energies.shape[0]):
        x = 1.0 / (omega - energies[j])
        s += weights[j] * x
        ds += weights[j] * x * x
    return omega - shift - s, 1.0 + ds


def bisect_roots(const double[::1] lo, const double[::1] hi, double shift,
                 const double[::1] energies, const double[::1] weights,
                 int maxiter=200):
    cdef Py_ssize_t m = lo.shape[0], i
    cdef int it
    cdef double a, b, mid, f, fa, fb
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for i in range(m):
            a = lo[i]
            b = hi[i]
            fa = -INFINITY
            fb = INFINITY
            mid = 0.5 * (a + b)
            for it in range(maxiter):
                mid = 0.5 * (a + b)
                if mid <= a or mid >= b:
                    break
                f = _value(mid, shift, energies, weights)
                if f < 0.0:
                    a = mid
                    fa = f
                elif f > 0.0:
                    b = mid
                    fb = f
                else:
                    a = mid
                    b = mid
                    fa = 0.0
                    break
            if a == b:
                res[i] = a
            elif fabs(fa) <= fabs(fb):
                res[i] = a if fa != -INFINITY else mid
            else:
                res[i] = b
    return out
