# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython kernels: the hot sequential recursions.

Each function is the compiled twin of the one in ``_ref.py``; the
floating-point expression order matches exactly so both backends give
bit-identical results.
"""
from libc.math cimport sqrt


def euler_full_truncation(double x0, double a, double b, double sigma,
                          double dt, const double[::1] dw, double[::1] out):
    cdef Py_ssize_t n = dw.shape[0]
    cdef Py_ssize_t i
    cdef double x = x0
    cdef double xp, p
    cdef long clamp_count = 0
    cdef double clamp_mass = 0.0
    out[0] = x0
    for i in range(n):
        xp = x if x > 0.0 else 0.0
        p = x + (a - b * xp) * dt + sigma * sqrt(xp) * dw[i]
        if p < 0.0:
            clamp_count += 1
            clamp_mass -= p
            x = 0.0
        else:
            x = p
        out[i + 1] = x
    return clamp_count, clamp_mass


def skorokhod_rou(double y0, double b, double sigma, double dt,
                  const double[::1] dw, double[::1] y_out, double[::1] l_out):
    cdef Py_ssize_t n = dw.shape[0]
    cdef Py_ssize_t i
    cdef double y = y0
    cdef double ell = 0.0
    cdef double p
    y_out[0] = y0
    l_out[0] = 0.0
    for i in range(n):
        p = y - 0.5 * b * y * dt + 0.5 * sigma * dw[i]
        if p < 0.0:
            y = 0.0
            ell += -p
        else:
            y = p
        y_out[i + 1] = y
        l_out[i + 1] = ell
    return 0
