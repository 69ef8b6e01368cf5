"""Deterministic sparse direct linear solves with singularity reporting.

Thin wrapper around SuperLU (scipy.sparse.linalg.splu): coordinate-format
assembly with duplicate summation, pivoted LU factorization, a UMFPACK-style
reciprocal condition estimate min|diag U| / max|diag U|, and a residual
report for every solve.  Everything is single-threaded and bitwise
reproducible for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, NonFiniteSolution, SingularSystem

#: factorizations with a smaller reciprocal condition estimate are rejected
RCOND_SINGULAR = 1e-14


@dataclass
class SparseMatrix:
    """Square matrix assembled in coordinate format.

    Duplicate coordinates are summed at `finalize`, which freezes the matrix
    into CSC form; only finalized matrices can be factored.
    """

    dimension: int
    _rows: list = field(default_factory=list)
    _cols: list = field(default_factory=list)
    _data: list = field(default_factory=list)
    _csc: Optional[sp.csc_matrix] = None

    @classmethod
    def from_coo(cls, dimension, rows, cols, data):
        m = cls(dimension)
        m.add_entries(rows, cols, data)
        return m

    def add_entries(self, rows, cols, data):
        if self._csc is not None:
            raise ValueError("matrix already finalized")
        self._rows.append(np.asarray(rows, dtype=np.int64))
        self._cols.append(np.asarray(cols, dtype=np.int64))
        self._data.append(np.asarray(data, dtype=float))
        return self

    def finalize(self):
        if self._csc is None:
            rows = np.concatenate(self._rows) if self._rows else np.zeros(0, np.int64)
            cols = np.concatenate(self._cols) if self._cols else np.zeros(0, np.int64)
            data = np.concatenate(self._data) if self._data else np.zeros(0)
            if not np.all(np.isfinite(data)):
                raise ValueError("non-finite matrix entries")
            n = self.dimension
            self._csc = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsc()
            self._rows = self._cols = self._data = []
        return self

    @property
    def finalized(self):
        return self._csc is not None

    @property
    def csc(self):
        if self._csc is None:
            raise ValueError("matrix not finalized")
        return self._csc


@dataclass
class SolveReport:
    success: bool
    rcond: float
    residual: float


@dataclass
class Factorization:
    """Pivoted LU factors plus the matrix they came from."""

    matrix: SparseMatrix
    lu: "spla.SuperLU"
    rcond: float

    def solve(self, rhs):
        return solve(self, rhs)


def factor(matrix):
    """LU-factor a finalized SparseMatrix.

    Raises SingularSystem on factorization failure or when the reciprocal
    condition estimate (min over max of |diag U|, as sparse direct packages
    report it) falls below RCOND_SINGULAR.
    """
    if not matrix.finalized:
        matrix.finalize()
    a = matrix.csc
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise SingularSystem(f"factorization failed: {exc}", rcond=0.0) from exc
    du = np.abs(lu.U.diagonal())
    dmax = du.max() if du.size else 0.0
    rcond = float(du.min() / dmax) if dmax > 0.0 else 0.0
    if not np.isfinite(rcond) or rcond < RCOND_SINGULAR:
        raise SingularSystem(
            f"matrix numerically singular (rcond estimate {rcond:.3e})", rcond=rcond
        )
    return Factorization(matrix=matrix, lu=lu, rcond=rcond)


def solve(factorization, rhs):
    """Solve against a factorization; returns (x, SolveReport)."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != factorization.matrix.dimension:
        raise DimensionMismatch(
            f"rhs has {rhs.shape[0]} rows, matrix dimension is "
            f"{factorization.matrix.dimension}"
        )
    x = factorization.lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise NonFiniteSolution("solve produced non-finite entries")
    bnorm = np.max(np.abs(rhs)) if rhs.size else 0.0
    rnorm = np.max(np.abs(factorization.matrix.csc @ x - rhs)) if rhs.size else 0.0
    residual = float(rnorm / bnorm) if bnorm > 0.0 else float(rnorm)
    return x, SolveReport(success=True, rcond=factorization.rcond, residual=residual)
