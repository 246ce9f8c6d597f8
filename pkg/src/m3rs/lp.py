"""Dense two-phase primal simplex for ``max c.x  s.t.  A x <= b, x >= 0``.

Small and self-contained: the restricted master problems solved during
column generation have one row per task plus a fleet row, so a dense tableau
is plenty.  Duals are recovered from the optimal basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

PIVOT_TOL = 1e-9
STALL_LIMIT = 50


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    UNBOUNDED = "Unbounded"
    INFEASIBLE = "Infeasible"


class NumericalFailure(RuntimeError):
    pass


@dataclass
class LpProblem:
    objective: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        n, m = self.objective.size, self.rhs.size
        self.matrix = np.asarray(self.matrix, dtype=float).reshape(m, n)
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("rhs must be finite")
        if not (np.all(np.isfinite(self.matrix)) and np.all(np.isfinite(self.objective))):
            raise ValueError("non-finite coefficients")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass
class LpResult:
    status: LpStatus
    primal: np.ndarray
    dual: np.ndarray
    objective: float
    iterations: int = 0


class _Tableau:
    """Rows hold B^-1 [A | I | R] and B^-1 b for the current basis."""

    def __init__(self, A, b):
        m, n = A.shape
        neg = b < 0
        art = np.flatnonzero(neg)
        R = np.zeros((m, art.size))
        R[art, np.arange(art.size)] = -1.0
        self.T = np.hstack([A, np.eye(m), R])
        self.rhs = b.astype(float).copy()
        self.basis = np.arange(n, n + m)
        self.basis[art] = n + m + np.arange(art.size)
        # rows whose basic variable carries coefficient -1 are negated
        self.T[neg] *= -1.0
        self.rhs[neg] *= -1.0
        self.n, self.m, self.n_art = n, m, art.size
        self.iterations = 0

    def pivot(self, row, col):
        T = self.T
        p = T[row, col]
        T[row] /= p
        self.rhs[row] /= p
        colv = T[:, col].copy()
        colv[row] = 0.0
        T -= np.outer(colv, T[row])
        self.rhs -= colv * self.rhs[row]
        self.basis[row] = col
        self.iterations += 1

    def run(self, cost, allowed, max_iter):
        """Maximize ``cost`` over the columns flagged in ``allowed``."""
        bland = False
        stall = 0
        last = cost[self.basis] @ self.rhs
        while True:
            if self.iterations > max_iter:
                raise NumericalFailure(f"simplex exceeded {max_iter} pivots")
            d = cost - cost[self.basis] @ self.T
            d[~allowed] = 0.0
            d[self.basis] = 0.0
            candidates = np.flatnonzero(d > PIVOT_TOL)
            if candidates.size == 0:
                return LpStatus.OPTIMAL
            col = candidates[0] if bland else candidates[np.argmax(d[candidates])]

            colv = self.T[:, col]
            rows = np.flatnonzero(colv > PIVOT_TOL)
            if rows.size == 0:
                return LpStatus.UNBOUNDED
            ratios = np.maximum(self.rhs[rows], 0.0) / colv[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12]
            row = ties[np.argmin(self.basis[ties])]
            self.pivot(row, col)

            value = cost[self.basis] @ self.rhs
            if value <= last + 1e-12:
                stall += 1
                if stall >= STALL_LIMIT:
                    bland = True
            else:
                stall = 0
            last = value


def solve_lp(problem: LpProblem, max_iter: int | None = None) -> LpResult:
    A, b, c = problem.matrix, problem.rhs, problem.objective
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    tab = _Tableau(A, b)
    width = n + m + tab.n_art
    allowed = np.ones(width, dtype=bool)

    if tab.n_art:
        phase1 = np.zeros(width)
        phase1[n + m:] = -1.0
        tab.run(phase1, allowed, max_iter)
        if phase1[tab.basis] @ tab.rhs < -1e-7:
            return LpResult(LpStatus.INFEASIBLE, np.zeros(n), np.zeros(m), float("nan"), tab.iterations)
        # drive zero-level artificials out of the basis
        for row in np.flatnonzero(tab.basis >= n + m):
            nz = np.flatnonzero(np.abs(tab.T[row, : n + m]) > PIVOT_TOL)
            if nz.size:
                tab.pivot(row, nz[0])
        allowed[n + m:] = False

    cost = np.zeros(width)
    cost[:n] = c
    status = tab.run(cost, allowed, max_iter)
    if status is LpStatus.UNBOUNDED:
        return LpResult(status, np.zeros(n), np.zeros(m), float("inf"), tab.iterations)

    values = np.zeros(width)
    values[tab.basis] = tab.rhs
    x = np.clip(values[:n], 0.0, None)
    # B^-1 sits in the slack block since the original slack columns are I
    y = cost[tab.basis] @ tab.T[:, n : n + m]
    y = np.where(np.abs(y) < 1e-12, 0.0, y)
    return LpResult(LpStatus.OPTIMAL, x, y, float(c @ x), tab.iterations)
