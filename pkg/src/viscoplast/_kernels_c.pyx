# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-element constitutive sweep (hot kernel).

Mirrors ``_kernels_py.sweep`` exactly; see that module for the contract.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, pow, fmax

cnp.import_array()

BACKEND = "compiled"


cdef inline double _tnorm(double t0, double t1, double t2) nogil:
    return sqrt(t0 * t0 + t1 * t1 + 2.0 * t2 * t2)


cdef inline void _set_eye(double[:, :, ::1] a, Py_ssize_t i, double s) nogil:
    a[i, 0, 0] = s; a[i, 0, 1] = 0.0; a[i, 0, 2] = 0.0
    a[i, 1, 0] = 0.0; a[i, 1, 1] = s; a[i, 1, 2] = 0.0
    a[i, 2, 0] = 0.0; a[i, 2, 1] = 0.0; a[i, 2, 2] = s


cdef inline void _add_outer(double[:, :, ::1] a, Py_ssize_t i, double c,
                            double u0, double u1, double u2,
                            double v0, double v1, double v2) nogil:
    # a[i] += c * u (x) v with the factor-2 shear weight on v
    cdef double w0 = c * v0, w1 = c * v1, w2 = 2.0 * c * v2
    a[i, 0, 0] += u0 * w0; a[i, 0, 1] += u0 * w1; a[i, 0, 2] += u0 * w2
    a[i, 1, 0] += u1 * w0; a[i, 1, 1] += u1 * w1; a[i, 1, 2] += u1 * w2
    a[i, 2, 0] += u2 * w0; a[i, 2, 1] += u2 * w1; a[i, 2, 2] += u2 * w2


def sweep(int code, double p0, double p1, double p2, double eps1, double eps2,
          cnp.ndarray S_in, cnp.ndarray D_in, bint want_jac=True):
    cdef double[:, ::1] S = np.ascontiguousarray(S_in, dtype=np.float64)
    cdef double[:, ::1] D = np.ascontiguousarray(D_in, dtype=np.float64)
    cdef Py_ssize_t n = S.shape[0], i, j, k

    g_arr = np.empty((n, 3), dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    cdef double[:, :, ::1] d1, d2, a1, a2
    if want_jac:
        d1_arr = np.zeros((n, 3, 3), dtype=np.float64)
        d2_arr = np.zeros((n, 3, 3), dtype=np.float64)
        a1_arr = np.empty((n, 3, 3), dtype=np.float64)
        a2_arr = np.empty((n, 3, 3), dtype=np.float64)
        d1 = d1_arr
        d2 = d2_arr
        a1 = a1_arr
        a2 = a2_arr
    else:
        d1_arr = d2_arr = a1_arr = a2_arr = None

    cdef double s0, s1, s2, t0, t1, t2, nt, ns, visc, plus, scale
    with nogil:
        for i in range(n):
            s0 = S[i, 0] - eps1 * D[i, 0]
            s1 = S[i, 1] - eps1 * D[i, 1]
            s2 = S[i, 2] - eps1 * D[i, 2]
            t0 = D[i, 0] - eps2 * S[i, 0]
            t1 = D[i, 1] - eps2 * S[i, 1]
            t2 = D[i, 2] - eps2 * S[i, 2]

            if code == 0:  # Newtonian(nu)
                g[i, 0] = s0 - 2.0 * p0 * t0
                g[i, 1] = s1 - 2.0 * p0 * t1
                g[i, 2] = s2 - 2.0 * p0 * t2
                if want_jac:
                    _set_eye(d1, i, 1.0)
                    _set_eye(d2, i, -2.0 * p0)
            elif code == 1:  # PowerLaw(K, r)
                nt = _tnorm(t0, t1, t2)
                if nt > 0.0:
                    visc = p0 * pow(nt, p1 - 2.0)
                    g[i, 0] = s0 - visc * t0
                    g[i, 1] = s1 - visc * t1
                    g[i, 2] = s2 - visc * t2
                    if want_jac:
                        _set_eye(d1, i, 1.0)
                        _set_eye(d2, i, -visc)
                        _add_outer(d2, i, -p0 * (p1 - 2.0) * pow(nt, p1 - 4.0),
                                   t0, t1, t2, t0, t1, t2)
                else:
                    g[i, 0] = s0; g[i, 1] = s1; g[i, 2] = s2
                    if want_jac:
                        _set_eye(d1, i, 1.0)
                        _set_eye(d2, i, -p0 if p1 == 2.0 else 0.0)
            elif code == 2:  # BinghamProduct(tau_star, nu)
                nt = _tnorm(t0, t1, t2)
                visc = p0 + 2.0 * p1 * nt
                g[i, 0] = nt * s0 - visc * t0
                g[i, 1] = nt * s1 - visc * t1
                g[i, 2] = nt * s2 - visc * t2
                if want_jac:
                    if nt > 0.0:
                        _set_eye(d1, i, nt)
                        _set_eye(d2, i, -visc)
                        _add_outer(d2, i, 1.0 / nt, s0, s1, s2, t0, t1, t2)
                        _add_outer(d2, i, -2.0 * p1 / nt, t0, t1, t2, t0, t1, t2)
                    else:
                        _set_eye(d1, i, 0.0)
                        _set_eye(d2, i, -p0)
            elif code == 3:  # BinghamMax(tau_star, nu)
                ns = _tnorm(s0, s1, s2)
                plus = fmax(ns - p0, 0.0)
                visc = 2.0 * p1 * (p0 + plus)
                g[i, 0] = plus * s0 - visc * t0
                g[i, 1] = plus * s1 - visc * t1
                g[i, 2] = plus * s2 - visc * t2
                if want_jac:
                    _set_eye(d2, i, -visc)
                    if ns > p0:
                        _set_eye(d1, i, plus)
                        _add_outer(d1, i, 1.0 / ns,
                                   s0 - 2.0 * p1 * t0, s1 - 2.0 * p1 * t1,
                                   s2 - 2.0 * p1 * t2, s0, s1, s2)
                    else:
                        _set_eye(d1, i, 0.0)
            elif code == 4:  # BinghamProjection(tau_star, nu)
                ns = _tnorm(s0, s1, s2)
                scale = (ns - p0) / ns if ns > p0 else 0.0
                g[i, 0] = scale * s0 - 2.0 * p1 * t0
                g[i, 1] = scale * s1 - 2.0 * p1 * t1
                g[i, 2] = scale * s2 - 2.0 * p1 * t2
                if want_jac:
                    _set_eye(d2, i, -2.0 * p1)
                    if ns > p0:
                        _set_eye(d1, i, scale)
                        _add_outer(d1, i, p0 / (ns * ns * ns), s0, s1, s2, s0, s1, s2)
                    else:
                        _set_eye(d1, i, 0.0)
            else:  # HerschelBulkley(tau_star, nu, r)
                nt = _tnorm(t0, t1, t2)
                if nt > 0.0:
                    visc = p0 + 2.0 * p1 * pow(nt, p2 - 1.0)
                    g[i, 0] = nt * s0 - visc * t0
                    g[i, 1] = nt * s1 - visc * t1
                    g[i, 2] = nt * s2 - visc * t2
                    if want_jac:
                        _set_eye(d1, i, nt)
                        _set_eye(d2, i, -visc)
                        _add_outer(d2, i, 1.0 / nt, s0, s1, s2, t0, t1, t2)
                        _add_outer(d2, i, -2.0 * p1 * (p2 - 1.0) * pow(nt, p2 - 3.0),
                                   t0, t1, t2, t0, t1, t2)
                else:
                    g[i, 0] = 0.0; g[i, 1] = 0.0; g[i, 2] = 0.0
                    if want_jac:
                        _set_eye(d1, i, 0.0)
                        _set_eye(d2, i, -p0)

            if want_jac:
                for j in range(3):
                    for k in range(3):
                        a1[i, j, k] = d1[i, j, k] - eps2 * d2[i, j, k]
                        a2[i, j, k] = d2[i, j, k] - eps1 * d1[i, j, k]

    if not want_jac:
        return g_arr, None, None
    return g_arr, a1_arr, a2_arr
