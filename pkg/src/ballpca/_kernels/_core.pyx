# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: normalized Legendre recurrence and trilinear sampling.

Semantics mirror ``_numpy.py`` exactly; see the docstrings there.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "compiled"


def legendre_table(int L, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t rows = (L + 1) * (L + 2) // 2
    out_arr = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] xv = x
    sine_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] sine = sine_arr
    cdef Py_ssize_t i
    cdef int l, m
    cdef double a, b, c, s2
    cdef double inv_sqrt4pi = 1.0 / sqrt(4.0 * np.pi)

    for i in range(n):
        s2 = 1.0 - xv[i] * xv[i]
        sine[i] = sqrt(s2) if s2 > 0.0 else 0.0
        out[0, i] = inv_sqrt4pi

    # row-at-a-time sweeps keep writes contiguous; recurrence coefficients
    # are scalars hoisted out of the point loops
    for m in range(1, L + 1):
        c = -sqrt((2.0 * m + 1.0) / (2.0 * m))
        for i in range(n):
            out[m * (m + 1) // 2 + m, i] = c * sine[i] * out[(m - 1) * m // 2 + (m - 1), i]
    for m in range(L):
        c = sqrt(2.0 * m + 3.0)
        for i in range(n):
            out[(m + 1) * (m + 2) // 2 + m, i] = c * xv[i] * out[m * (m + 1) // 2 + m, i]
    for m in range(L - 1):
        for l in range(m + 2, L + 1):
            a = sqrt((4.0 * l * l - 1.0) / (<double>l * l - <double>m * m))
            b = sqrt(
                ((l - 1.0) * (l - 1.0) - <double>m * m)
                / (4.0 * (l - 1.0) * (l - 1.0) - 1.0)
            )
            for i in range(n):
                out[l * (l + 1) // 2 + m, i] = a * (
                    xv[i] * out[(l - 1) * l // 2 + m, i]
                    - b * out[(l - 2) * (l - 1) // 2 + m, i]
                )
    return out_arr


def trilinear_interpolate(vol, pts):
    vol = np.ascontiguousarray(vol, dtype=np.float64)
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    cdef double[:, :, ::1] v = vol
    cdef double[:, ::1] p = pts
    cdef Py_ssize_t N = vol.shape[0]
    cdef Py_ssize_t P = pts.shape[0]
    out_arr = np.empty(P, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double scale = (N - 1) / 2.0
    cdef double hi = N - 1.0
    cdef Py_ssize_t k, ix, iy, iz
    cdef double gx, gy, gz, tx, ty, tz
    cdef double c00, c10, c01, c11, c0, c1

    for k in range(P):
        gx = (p[k, 0] + 1.0) * scale
        gy = (p[k, 1] + 1.0) * scale
        gz = (p[k, 2] + 1.0) * scale
        if gx < 0.0:
            gx = 0.0
        elif gx > hi:
            gx = hi
        if gy < 0.0:
            gy = 0.0
        elif gy > hi:
            gy = hi
        if gz < 0.0:
            gz = 0.0
        elif gz > hi:
            gz = hi
        ix = <Py_ssize_t>gx
        iy = <Py_ssize_t>gy
        iz = <Py_ssize_t>gz
        if ix > N - 2:
            ix = N - 2
        if iy > N - 2:
            iy = N - 2
        if iz > N - 2:
            iz = N - 2
        tx = gx - ix
        ty = gy - iy
        tz = gz - iz
        c00 = v[iz, iy, ix] * (1.0 - tx) + v[iz, iy, ix + 1] * tx
        c10 = v[iz, iy + 1, ix] * (1.0 - tx) + v[iz, iy + 1, ix + 1] * tx
        c01 = v[iz + 1, iy, ix] * (1.0 - tx) + v[iz + 1, iy, ix + 1] * tx
        c11 = v[iz + 1, iy + 1, ix] * (1.0 - tx) + v[iz + 1, iy + 1, ix + 1] * tx
        c0 = c00 * (1.0 - ty) + c10 * ty
        c1 = c01 * (1.0 - ty) + c11 * ty
        out[k] = c0 * (1.0 - tz) + c1 * tz
    return out_arr
