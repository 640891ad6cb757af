# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled assembly kernels; contracts identical to _numpy.py."""

import numpy as np


def pairs_scalar(const double[::1] w, const double[::1] scale,
                 const double[:, :, ::1] U, const double[:, :, ::1] V):
    cdef Py_ssize_t n = U.shape[0], nq = U.shape[1]
    cdef Py_ssize_t na = U.shape[2], nb = V.shape[2]
    out = np.zeros((n, na, nb))
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t i, q, a, b
    cdef double wq, ua
    for i in range(n):
        for q in range(nq):
            wq = w[q] * scale[i]
            for a in range(na):
                ua = U[i, q, a] * wq
                for b in range(nb):
                    o[i, a, b] += ua * V[i, q, b]
    return out


def pairs_grad(const double[::1] w, const double[::1] scale,
               const double[:, :, :, ::1] GU, const double[:, :, :, ::1] GV):
    cdef Py_ssize_t n = GU.shape[0], nq = GU.shape[1]
    cdef Py_ssize_t na = GU.shape[2], nb = GV.shape[2]
    out = np.zeros((n, na, nb))
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t i, q, a, b
    cdef double wq, gx, gy
    for i in range(n):
        for q in range(nq):
            wq = w[q] * scale[i]
            for a in range(na):
                gx = GU[i, q, a, 0] * wq
                gy = GU[i, q, a, 1] * wq
                for b in range(nb):
                    o[i, a, b] += gx * GV[i, q, b, 0] + gy * GV[i, q, b, 1]
    return out
