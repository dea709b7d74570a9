"""Tridiagonal matrices and the Thomas solve used by the Newton iteration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SingularMatrixError(RuntimeError):
    """A pivot vanished during the forward elimination."""


@dataclass(eq=False)
class Tridiagonal:
    """Tridiagonal matrix stored as its three diagonals.

    lower has length n-1 (entries A[i+1, i]), diag length n, upper
    length n-1 (entries A[i, i+1]).
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        if self.n > 1:
            y[:-1] += self.upper * x[1:]
            y[1:] += self.lower * x[:-1]
        return y

    def to_dense(self) -> np.ndarray:
        a = np.diag(self.diag)
        if self.n > 1:
            a += np.diag(self.upper, 1) + np.diag(self.lower, -1)
        return a


_PIVOT_TINY = 1e-300


def solve(tri: Tridiagonal, rhs: np.ndarray) -> np.ndarray:
    """Solve tri @ x = rhs by the Thomas algorithm (no pivoting).

    Raises SingularMatrixError when a pivot underflows. The loops run on
    Python floats: for the few-hundred-cell systems used here that is
    faster than per-element numpy scalar arithmetic.
    """
    n = tri.diag.size
    if rhs.size != n:
        raise ValueError(f"rhs length {rhs.size} != matrix size {n}")
    b = tri.diag.tolist()
    d = rhs.tolist()
    if n == 1:
        if abs(b[0]) < _PIVOT_TINY:
            raise SingularMatrixError("singular 1x1 system")
        return np.array([d[0] / b[0]])
    a = tri.lower.tolist()
    c = tri.upper.tolist()

    # Forward elimination: overwrite b with pivots, d with reduced rhs.
    for i in range(1, n):
        piv = b[i - 1]
        if abs(piv) < _PIVOT_TINY:
            raise SingularMatrixError(f"zero pivot at row {i - 1}")
        w = a[i - 1] / piv
        b[i] -= w * c[i - 1]
        d[i] -= w * d[i - 1]
    if abs(b[n - 1]) < _PIVOT_TINY:
        raise SingularMatrixError(f"zero pivot at row {n - 1}")

    x = d
    x[n - 1] = d[n - 1] / b[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (d[i] - c[i] * x[i + 1]) / b[i]
    return np.asarray(x)
