# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled core of the zonal coefficient recurrence.

Same contract as ``_recurrence_py.fill_coefficients``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def fill_coefficients(const cnp.int64_t[::1] indptr,
                      const cnp.int64_t[::1] mu,
                      const double[::1] weight,
                      const double[::1] rho):
    cdef Py_ssize_t n = rho.shape[0]
    out_arr = np.zeros((n, n), dtype=np.float64)
    acc_arr = np.zeros(n, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] acc = acc_arr
    cdef Py_ssize_t j, e, kap, row, top
    cdef double w, den
    cdef bint bad = False
    with nogil:
        for j in range(n):
            out[j, j] = 1.0
            if j == 0 or indptr[j] == indptr[j + 1]:
                continue
            for kap in range(j):
                acc[kap] = 0.0
            for e in range(indptr[j], indptr[j + 1]):
                w = weight[e]
                row = mu[e]
                # row ``row`` of the table is zero past column ``row``
                top = row + 1 if row < j else j
                for kap in range(top):
                    acc[kap] += w * out[row, kap]
            for kap in range(j):
                if acc[kap] != 0.0:
                    den = rho[kap] - rho[j]
                    if den == 0.0:
                        bad = True
                        break
                    out[j, kap] = acc[kap] / den
            if bad:
                break
    if bad:
        raise ArithmeticError("degenerate zonal recurrence")
    return out_arr
