# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled energy kernels: single fused pass over cells and nodes.

Must stay in functional agreement with `_kernels_py` (the numpy fallback)
to ~1e-13 relative; the equivalence is asserted in the test suite.  Small
integer exponents (p = 2, and the critical exponents 4, 6, 12, ...) take a
repeated-squaring path instead of libm pow.
"""

from libc.math cimport fabs, floor, pow


cdef inline double ipow(double a, long k) nogil:
    cdef double r = 1.0
    while k > 0:
        if k & 1:
            r *= a
        a *= a
        k >>= 1
    return r


cdef inline bint _small_int(double e) nogil:
    return e == floor(e) and 0.0 <= e <= 32.0


def energy_terms(const double[::1] u, const double[::1] h, const double[::1] W,
                 const double[::1] nu, double p, double ps):
    cdef Py_ssize_t M = h.shape[0]
    cdef Py_ssize_t i
    cdef double A = 0.0, B = 0.0, s
    cdef bint pi_ok = _small_int(p), si_ok = _small_int(ps)
    cdef long pi = <long>p, si = <long>ps
    for i in range(M):
        s = fabs((u[i + 1] - u[i]) / h[i])
        A += (ipow(s, pi) if pi_ok else pow(s, p)) * W[i]
    for i in range(M + 1):
        s = fabs(u[i])
        B += (ipow(s, si) if si_ok else pow(s, ps)) * nu[i]
    return A, B


def energy_gradient(const double[::1] u, const double[::1] h, const double[::1] W,
                    const double[::1] nu, double p, double ps, double[::1] g):
    cdef Py_ssize_t M = h.shape[0]
    cdef Py_ssize_t i
    cdef double A = 0.0, B = 0.0, s, a, am1, phi, sgn
    cdef bint pi_ok = _small_int(p - 1.0), si_ok = _small_int(ps - 1.0)
    cdef long pi = <long>(p - 1.0), si = <long>(ps - 1.0)
    for i in range(M + 1):
        g[i] = 0.0
    for i in range(M):
        s = (u[i + 1] - u[i]) / h[i]
        a = fabs(s)
        am1 = ipow(a, pi) if pi_ok else pow(a, p - 1.0)  # a^(p-1)
        A += am1 * a * W[i]
        sgn = 1.0 if s > 0.0 else (-1.0 if s < 0.0 else 0.0)
        phi = sgn * am1 * (W[i] / h[i])
        g[i] -= phi
        g[i + 1] += phi
    for i in range(M + 1):
        a = fabs(u[i])
        am1 = ipow(a, si) if si_ok else pow(a, ps - 1.0)  # a^(ps-1)
        B += am1 * a * nu[i]
        sgn = 1.0 if u[i] > 0.0 else (-1.0 if u[i] < 0.0 else 0.0)
        g[i] -= sgn * am1 * nu[i]
    return A, B


def cell_kappa(const double[::1] u, const double[::1] h, const double[::1] W,
               double p, double eps2, double[::1] out):
    cdef Py_ssize_t M = h.shape[0]
    cdef Py_ssize_t i
    cdef double s
    if p == 2.0:
        for i in range(M):
            out[i] = W[i] / (h[i] * h[i])
        return None
    for i in range(M):
        s = (u[i + 1] - u[i]) / h[i]
        out[i] = (p - 1.0) * pow(s * s + eps2, (p - 2.0) / 2.0) * W[i] / (h[i] * h[i])
    return None
