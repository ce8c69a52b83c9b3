"""Pure numpy fallback for the zonal coefficient recurrence.

Mirrors ``_recurrence.pyx`` loop for loop; the compiled version only
replaces the per-partition accumulation with a C loop.
"""

import numpy as np


def fill_coefficients(indptr, mu, weight, rho):
    """Solve the triangular coefficient recurrence.

    Parameters
    ----------
    indptr, mu, weight : ndarray
        CSR form of the raising graph: the raisings of partition ``j`` are
        ``mu[indptr[j]:indptr[j+1]]`` with multipliers ``weight[...]``.
    rho : ndarray
        ``sum_i k_i (k_i - i)`` for every partition, in table order.

    Returns
    -------
    ndarray, shape (N, N)
        Transposed table: ``out[lam, kap]`` is the coefficient of the
        monomial ``m_lam`` in the monic polynomial indexed by ``kap``.
    """
    n = rho.shape[0]
    out = np.zeros((n, n))
    for j in range(n):
        out[j, j] = 1.0
        lo, hi = indptr[j], indptr[j + 1]
        if j == 0 or lo == hi:
            continue
        # row ``r`` of the table is zero past column ``r``
        top = min(j, int(mu[lo:hi].max()) + 1)
        acc = weight[lo:hi] @ out[mu[lo:hi], :top]
        den = rho[:top] - rho[j]
        nz = acc != 0.0
        if np.any(nz & (den == 0.0)):
            raise ArithmeticError("degenerate zonal recurrence")
        out[j, :top][nz] = acc[nz] / den[nz]
    return out
