"""Small dense symmetric linear algebra: cyclic Jacobi, Cholesky, SPD checks."""

from __future__ import annotations

import math

import numpy as np


class DefinitenessError(ValueError):
    """Matrix is not symmetric positive definite."""


class ConvergenceError(ArithmeticError):
    pass


class SpdMatrix:
    """Symmetric positive definite matrix; the upper triangle is authoritative.

    Positive definiteness is verified by a Cholesky factorization at
    construction time.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim == 1:
            a = np.diag(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        upper = np.triu(a)
        self.entries = upper + np.triu(a, 1).T
        self.entries.setflags(write=False)
        self.factor = cholesky(self.entries)
        self._eigs = None

    @classmethod
    def diagonal(cls, values):
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def from_file(cls, path):
        """Read ``m`` rows of ``m`` whitespace-separated reals."""
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    rows.append([float(v) for v in line.split()])
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ValueError(f"{path}: expected a square matrix of whitespace-separated numbers")
        return cls(rows)

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        if self._eigs is None:
            self._eigs = sym_eigenvalues(self.entries)
        return self._eigs

    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.factor))))

    def __eq__(self, other):
        return isinstance(other, SpdMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self):
        return f"SpdMatrix({self.entries.tolist()!r})"


def sym_eigenvalues(a, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, descending, by cyclic Jacobi rotations."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    a = np.triu(a) + np.triu(a, 1).T
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.sort(np.diag(a))[::-1]
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
        if off < tol * scale:
            return np.sort(np.diag(a))[::-1]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    t = apq / diff  # tiny angle; theta would overflow
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = a[:, [p, q]] @ np.array([[c, s], [-s, c]])
                a[:, p], a[:, q] = rot[:, 0], rot[:, 1]
                rot = np.array([[c, -s], [s, c]]) @ a[[p, q], :]
                a[p, :], a[q, :] = rot[0], rot[1]
                a[p, q] = a[q, p] = 0.0
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")


def cholesky(a) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L^T = a``."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - float(low[j, :j] @ low[j, :j])
        if not d > 0.0:
            raise DefinitenessError(f"matrix is not positive definite (pivot {j} = {d:g})")
        low[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            low[i, j] = (a[i, j] - float(low[i, :j] @ low[j, :j])) / low[j, j]
    return low


def spd_inverse_eigs(a) -> np.ndarray:
    """Eigenvalues of ``a^{-1}``, descending."""
    spd = a if isinstance(a, SpdMatrix) else SpdMatrix(a)
    return np.sort(1.0 / spd.eigenvalues())[::-1]
