# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled substep loops for the batched simulators.

Both functions integrate in place and return 0, or 1 when a model
denominator vanishes (the caller raises). Expression order mirrors the numpy
implementation so results agree to rounding.
"""
from libc.math cimport sin, cos, fabs, isfinite


def vehicle_substeps(double[:, ::1] s, double[:, ::1] act, double T, int n,
                     double Cf, double Cr, double a, double b, double m, double Iz):
    cdef Py_ssize_t i, N = s.shape[0]
    cdef int k
    cdef double u, v, r, y, phi, x, delta, acc, sp, cp
    cdef double aCf_bCr = a * Cf - b * Cr
    cdef double d1, d2
    cdef double Tab = T * aCf_bCr, TCf = T * Cf, Tm = T * m, TaCf = T * a * Cf
    cdef double TCs = T * (Cf + Cr), Ti = T * (a * a * Cf + b * b * Cr)
    for i in range(N):
        u = s[i, 0]; v = s[i, 1]; r = s[i, 2]; y = s[i, 3]; phi = s[i, 4]; x = s[i, 5]
        delta = act[i, 0]; acc = act[i, 1]
        for k in range(n):
            d1 = m * u - TCs
            d2 = Ti - Iz * u
            if fabs(d1) < 1e-8 or fabs(d2) < 1e-8 or not isfinite(u):
                return 1
            sp = sin(phi); cp = cos(phi)
            s[i, 0] = u + T * (acc + v * r)
            s[i, 1] = (m * v * u + Tab * r - TCf * delta * u - Tm * u * u * r) / d1
            s[i, 2] = (-Iz * r * u - Tab * v + TaCf * delta * u) / d2
            s[i, 3] = y + T * (u * sp + v * cp)
            s[i, 4] = phi + T * r
            s[i, 5] = x + T * (u * cp - v * sp)
            u = s[i, 0]; v = s[i, 1]; r = s[i, 2]; y = s[i, 3]; phi = s[i, 4]; x = s[i, 5]
    return 0


def pendulum_substeps(double[:, ::1] s, double[:, ::1] act, double T, int n,
                      double m1, double m2, double l, double g):
    cdef Py_ssize_t i, N = s.shape[0]
    cdef int k
    cdef double x, th, xd, thd, force, c, d11, d22, d12, det, z1, z2, xdd, thdd, ct, st
    c = (m1 / 2.0 + m2) * l
    d11 = m1 + m2
    d22 = (m1 / 3.0 + m2) * l / 2.0
    for i in range(N):
        x = s[i, 0]; th = s[i, 1]; xd = s[i, 2]; thd = s[i, 3]
        force = act[i, 0]
        for k in range(n):
            ct = cos(th); st = sin(th)
            d12 = c * ct
            det = d11 * d22 - d12 * d12
            if fabs(det) < 1e-10:
                return 1
            z1 = c * thd * thd * st + force
            z2 = (c * g) * st
            xdd = (d22 * z1 - d12 * z2) / det
            thdd = (d11 * z2 - d12 * z1) / det
            x, th, xd, thd = x + T * xd, th + T * thd, xd + T * xdd, thd + T * thdd
        s[i, 0] = x; s[i, 1] = th; s[i, 2] = xd; s[i, 3] = thd
    return 0
