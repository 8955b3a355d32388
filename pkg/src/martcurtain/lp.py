"""Dense two-phase primal simplex for ``min c·x  s.t.  A x = b, x >= 0``.

Pivoting follows Bland's rule (lowest-index entering column, lowest-index
basic variable among tied leaving rows), so the method terminates on
degenerate problems such as transport polytopes. After the final pivot the
basis is re-factorised to recover accurate primal values and the equality
duals, and strong duality is checked on every optimal solve.
"""

from __future__ import annotations

import dataclasses
import enum
import logging

import numpy as np

from . import config

log = logging.getLogger(__name__)


# entries below this (relative to max |A|) in an artificial's row count as roundoff
DRIVE_OUT_TOL = 1e-8


class LpError(RuntimeError):
    pass


class LpIterationLimit(LpError):
    """The pivot budget ran out; never reported as infeasibility."""


class LpNumericalError(LpError):
    """The final basis fails the residual or duality-gap certificate."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclasses.dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.size == 0:
            A = A.reshape(len(b), len(c))
        if A.ndim != 2 or A.shape != (len(b), len(c)):
            raise ValueError(f"dimension mismatch: A is {A.shape}, c has {len(c)}, b has {len(b)}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("linear program has non-finite coefficients")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclasses.dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    x: np.ndarray | None = None
    value: float | None = None
    duals: np.ndarray | None = None
    iterations: int = 0
    residual: float = 0.0
    gap: float = 0.0
    dual_infeasibility: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, pivot_tol: float, max_iter: int):
        m, n = A.shape
        self.m, self.n = m, n
        self.T = np.zeros((m + 1, n + m + 1))
        self.T[:m, :n] = A
        self.T[:m, n:n + m] = np.eye(m)
        self.T[:m, -1] = b
        self.basis = np.arange(n, n + m)
        self.pivot_tol = pivot_tol
        self.iterations = 0
        self.max_iter = max_iter

    def pivot(self, r: int, j: int):
        T = self.T
        row = T[r] / T[r, j]
        T -= np.outer(T[:, j], row)
        T[r] = row
        rhs = T[:self.m, -1]
        rhs[(rhs < 0) & (rhs > -1e3 * self.pivot_tol)] = 0.0
        self.basis[r] = j
        self.iterations += 1
        if self.iterations > self.max_iter:
            raise LpIterationLimit(f"simplex exceeded {self.max_iter} pivots")

    def run(self, allowed: np.ndarray, cost_tol: float) -> LpStatus:
        T, m = self.T, self.m
        while True:
            red = T[m, :-1]
            cand = np.flatnonzero((red < -cost_tol) & allowed)
            if cand.size == 0:
                return LpStatus.OPTIMAL
            j = int(cand[0])
            col = T[:m, j]
            rows = np.flatnonzero(col > self.pivot_tol)
            if rows.size == 0:
                return LpStatus.UNBOUNDED
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(tied[np.argmin(self.basis[tied])])
            self.pivot(r, j)


def solve_lp(p: LinearProgram, feas_tol: float | None = None, gap_tol: float | None = None,
             pivot_tol: float | None = None, max_iter: int | None = None) -> LpOutcome:
    """Solve ``p`` and certify the optimum with its equality duals.

    Returns an :class:`LpOutcome`; raises :class:`LpIterationLimit` when the
    pivot budget is exhausted and :class:`LpNumericalError` when the final
    basis cannot be certified within ``feas_tol`` / ``gap_tol``.
    """
    tols = config.current()
    feas_tol = tols.feas_tol if feas_tol is None else feas_tol
    gap_tol = tols.gap_tol if gap_tol is None else gap_tol
    pivot_tol = tols.pivot_tol if pivot_tol is None else pivot_tol
    m, n = p.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    if m == 0:
        if np.any(p.c < 0):
            return LpOutcome(LpStatus.UNBOUNDED)
        return LpOutcome(LpStatus.OPTIMAL, np.zeros(n), 0.0, np.zeros(0))

    sign = np.where(p.b < 0, -1.0, 1.0)
    A = p.A * sign[:, None]
    b = p.b * sign
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    tab = _Tableau(A, b, pivot_tol * scale, max_iter)
    T = tab.T

    # phase 1: minimise the sum of artificials
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    allowed = np.ones(n + m, dtype=bool)
    tab.run(allowed, pivot_tol)
    infeas = -T[m, -1]
    if infeas > feas_tol * max(1.0, np.abs(b).max()):
        return LpOutcome(LpStatus.INFEASIBLE, iterations=tab.iterations)

    # drive zero-level artificials out of the basis; rows with nothing but
    # roundoff left are redundant and keep their artificial at zero
    for r in range(m):
        if tab.basis[r] >= n:
            j = int(np.argmax(np.abs(T[r, :n])))
            if abs(T[r, j]) > DRIVE_OUT_TOL * scale:
                T[r, -1] = 0.0
                tab.pivot(r, j)
            else:
                T[r, :n] = 0.0

    # phase 2
    T[m, :] = 0.0
    T[m, :n] = p.c
    for r in range(m):
        if tab.basis[r] < n:
            T[m] -= p.c[tab.basis[r]] * T[r]
    allowed = np.zeros(n + m, dtype=bool)
    allowed[:n] = True
    cost_tol = pivot_tol * max(1.0, float(np.abs(p.c).max(initial=0.0)))
    status = tab.run(allowed, cost_tol)
    if status is LpStatus.UNBOUNDED:
        return LpOutcome(LpStatus.UNBOUNDED, iterations=tab.iterations)

    x, duals = _refactor(A, b, p.c, tab)
    duals = duals * sign
    residual = float(np.abs(p.A @ x - p.b).max())
    value = float(p.c @ x)
    gap = abs(value - float(p.b @ duals))
    dual_infeas = float(max(0.0, -(p.c - p.A.T @ duals).min(initial=0.0)))
    scale = max(1.0, abs(value))
    if residual > feas_tol or x.min() < -feas_tol or gap > gap_tol * scale or dual_infeas > feas_tol * scale:
        raise LpNumericalError(
            f"uncertified optimum: residual={residual:.3g} min_x={x.min():.3g} gap={gap:.3g} dual_infeas={dual_infeas:.3g}")
    return LpOutcome(LpStatus.OPTIMAL, x, value, duals, tab.iterations, residual, gap, dual_infeas)


def _refactor(A: np.ndarray, b: np.ndarray, c: np.ndarray, tab: _Tableau) -> tuple[np.ndarray, np.ndarray]:
    m, n = A.shape
    M = np.hstack([A, np.eye(m)])
    cost = np.concatenate([c, np.zeros(m)])
    B = M[:, tab.basis]
    try:
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, cost[tab.basis])
    except np.linalg.LinAlgError:
        log.debug("singular final basis; using tableau values")
        xb = tab.T[:m, -1].copy()
        y = -tab.T[m, n:n + m]
    full = np.zeros(n + m)
    full[tab.basis] = xb
    x = full[:n]
    x[np.abs(x) < 1e-15] = 0.0
    return x, y
