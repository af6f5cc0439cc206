# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirrors nehari._kernels._ref (the semantic reference)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, hypot, log1p, pow

cnp.import_array()


cdef inline double _phi(int kind, double a, double b, double t) nogil:
    if kind == 0:
        return pow(t, a - 2.0)
    elif kind == 1:
        return pow(t, a - 2.0) + pow(t, b - 2.0)
    else:
        return a * pow(t, a - 2.0) * log1p(t) + pow(t, a - 1.0) / (1.0 + t)


cdef inline double _big_phi(int kind, double a, double b, double t) nogil:
    cdef double x = fabs(t)
    if kind == 0:
        return pow(x, a) / a
    elif kind == 1:
        return pow(x, a) / a + pow(x, b) / b
    else:
        return pow(x, a) * log1p(x)


cdef inline double _phi_prime(int kind, double a, double b, double t) nogil:
    cdef double omt
    if kind == 0:
        return (a - 2.0) * pow(t, a - 3.0)
    elif kind == 1:
        return (a - 2.0) * pow(t, a - 3.0) + (b - 2.0) * pow(t, b - 3.0)
    else:
        omt = 1.0 + t
        return (a * (a - 2.0) * pow(t, a - 3.0) * log1p(t)
                + (2.0 * a - 1.0) * pow(t, a - 2.0) / omt
                - pow(t, a - 1.0) / (omt * omt))


cdef inline double _f(int kind, double a, int trunc, double t) nogil:
    cdef double x, val
    if trunc > 0 and t < 0.0:
        return 0.0
    if trunc < 0 and t > 0.0:
        return 0.0
    if t == 0.0:
        return 0.0
    if kind == 0:
        return pow(fabs(t), a - 2.0) * t
    x = fabs(t)
    val = a * pow(x, a - 1.0) * log1p(x) + pow(x, a) / (1.0 + x)
    return val if t > 0.0 else -val


cdef inline double _big_f(int kind, double a, int trunc, double t) nogil:
    cdef double x = fabs(t)
    if trunc > 0 and t < 0.0:
        return 0.0
    if trunc < 0 and t > 0.0:
        return 0.0
    if kind == 0:
        return pow(x, a) / a
    return pow(x, a) * log1p(x)


cdef inline double _f_prime(int kind, double a, int trunc, double t) nogil:
    cdef double x = fabs(t)
    cdef double omx
    if trunc > 0 and t < 0.0:
        return 0.0
    if trunc < 0 and t > 0.0:
        return 0.0
    if kind == 0:
        return (a - 1.0) * pow(x, a - 2.0)
    omx = 1.0 + x
    return (a * (a - 1.0) * pow(x, a - 2.0) * log1p(x)
            + 2.0 * a * pow(x, a - 1.0) / omx
            - pow(x, a) / (omx * omx))


# -- pointwise array evaluations ------------------------------------------

def nf_phi(int kind, double a, double b, t):
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(tt)
    cdef Py_ssize_t i, n = tt.shape[0]
    for i in range(n):
        out[i] = _phi(kind, a, b, tt[i])
    return out.reshape(np.shape(t))


def nf_big_phi(int kind, double a, double b, t):
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(tt)
    cdef Py_ssize_t i, n = tt.shape[0]
    for i in range(n):
        out[i] = _big_phi(kind, a, b, tt[i])
    return out.reshape(np.shape(t))


def nf_phi_prime(int kind, double a, double b, t):
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(tt)
    cdef Py_ssize_t i, n = tt.shape[0]
    for i in range(n):
        out[i] = _phi_prime(kind, a, b, tt[i])
    return out.reshape(np.shape(t))


def fn_f(int kind, double a, int trunc, t):
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(tt)
    cdef Py_ssize_t i, n = tt.shape[0]
    for i in range(n):
        out[i] = _f(kind, a, trunc, tt[i])
    return out.reshape(np.shape(t))


def fn_big_f(int kind, double a, int trunc, t):
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(tt)
    cdef Py_ssize_t i, n = tt.shape[0]
    for i in range(n):
        out[i] = _big_f(kind, a, trunc, tt[i])
    return out.reshape(np.shape(t))


def fn_f_prime(int kind, double a, int trunc, t):
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(tt)
    cdef Py_ssize_t i, n = tt.shape[0]
    for i in range(n):
        out[i] = _f_prime(kind, a, trunc, tt[i])
    return out.reshape(np.shape(t))


# -- fused reductions ------------------------------------------------------

def sum_big_phi(int kind, double a, double b, double[::1] g, double[::1] w, double t):
    cdef double acc = 0.0
    cdef Py_ssize_t i, n = g.shape[0]
    with nogil:
        for i in range(n):
            acc += _big_phi(kind, a, b, t * g[i]) * w[i]
    return acc


def sum_phi_gg(int kind, double a, double b, double[::1] g, double[::1] w,
               double t, double eps):
    cdef double acc = 0.0, s
    cdef Py_ssize_t i, n = g.shape[0]
    with nogil:
        for i in range(n):
            if g[i] != 0.0:
                s = hypot(t * g[i], eps)
                acc += _phi(kind, a, b, s) * t * g[i] * g[i] * w[i]
    return acc


def sum_phi_curv(int kind, double a, double b, double[::1] g, double[::1] w,
                 double t, double eps):
    cdef double acc = 0.0, s
    cdef Py_ssize_t i, n = g.shape[0]
    with nogil:
        for i in range(n):
            if g[i] != 0.0:
                s = hypot(t * g[i], eps)
                acc += (_phi(kind, a, b, s) + _phi_prime(kind, a, b, s) * s) * g[i] * g[i] * w[i]
    return acc


def sum_big_f(int kind, double a, int trunc, double[::1] u, double[::1] w, double t):
    cdef double acc = 0.0
    cdef Py_ssize_t i, n = u.shape[0]
    with nogil:
        for i in range(n):
            acc += _big_f(kind, a, trunc, t * u[i]) * w[i]
    return acc


def sum_f_u(int kind, double a, int trunc, double[::1] u, double[::1] w, double t):
    cdef double acc = 0.0
    cdef Py_ssize_t i, n = u.shape[0]
    with nogil:
        for i in range(n):
            acc += _f(kind, a, trunc, t * u[i]) * u[i] * w[i]
    return acc


def sum_fp_uu(int kind, double a, int trunc, double[::1] u, double[::1] w, double t):
    cdef double acc = 0.0
    cdef Py_ssize_t i, n = u.shape[0]
    with nogil:
        for i in range(n):
            if u[i] != 0.0:
                acc += _f_prime(kind, a, trunc, t * u[i]) * u[i] * u[i] * w[i]
    return acc
