"""Transport plans between atomic measures and the martingale transport LP."""

from __future__ import annotations

import dataclasses
import logging

import numpy as np

from . import config
from .costs import CostSpec
from .lp import LinearProgram, LpStatus, solve_lp
from .measures import DiscreteMeasure, PiecewiseLinearConvex, check_convex_order

log = logging.getLogger(__name__)

# entries of LP solutions at or below this level are numerical zeros
ZERO_MASS = 1e-12


class CouplingError(ValueError):
    pass


class MarginalError(CouplingError):
    pass


class NotMartingale(CouplingError):
    pass


class NotConvexOrder(CouplingError):
    """No martingale coupling exists: the marginals are not in convex order."""


@dataclasses.dataclass(frozen=True, eq=False)
class Coupling:
    """Sparse plan on ``mu.positions x nu.positions``.

    ``rows``, ``cols`` and ``masses`` are parallel arrays; marginals are
    validated on construction.
    """

    mu: DiscreteMeasure
    nu: DiscreteMeasure
    rows: np.ndarray
    cols: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=int).reshape(-1)
        cols = np.asarray(self.cols, dtype=int).reshape(-1)
        masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if not (rows.shape == cols.shape == masses.shape):
            raise CouplingError("entry arrays differ in length")
        if np.any(masses <= 0):
            raise CouplingError("entry masses must be positive")
        if rows.size and (rows.min() < 0 or rows.max() >= len(self.mu) or cols.min() < 0 or cols.max() >= len(self.nu)):
            raise CouplingError("entry index out of range")
        if len(set(zip(rows.tolist(), cols.tolist()))) != rows.size:
            raise CouplingError("duplicate entries")
        for arr in (rows, cols, masses):
            arr.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "masses", masses)
        tol = config.resolve(None)
        row_err = np.abs(np.bincount(rows, masses, len(self.mu)) - self.mu.weights)
        col_err = np.abs(np.bincount(cols, masses, len(self.nu)) - self.nu.weights)
        if row_err.size and row_err.max() > tol:
            raise MarginalError(f"first marginal off by {row_err.max():.3g} at source {int(row_err.argmax())}")
        if col_err.size and col_err.max() > tol:
            raise MarginalError(f"second marginal off by {col_err.max():.3g} at target {int(col_err.argmax())}")

    @classmethod
    def from_entries(cls, mu: DiscreteMeasure, nu: DiscreteMeasure, entries) -> "Coupling":
        entries = list(entries)
        if not entries:
            return cls(mu, nu, np.empty(0, int), np.empty(0, int), np.empty(0))
        i, j, w = zip(*entries)
        return cls(mu, nu, np.array(i, dtype=int), np.array(j, dtype=int), np.array(w, dtype=float))

    @classmethod
    def from_matrix(cls, mu: DiscreteMeasure, nu: DiscreteMeasure, P, drop: float = ZERO_MASS) -> "Coupling":
        P = np.asarray(P, dtype=float)
        if P.shape != (len(mu), len(nu)):
            raise CouplingError(f"matrix shape {P.shape} does not match marginals")
        i, j = np.nonzero(P > drop)
        return cls(mu, nu, i, j, P[i, j])

    @classmethod
    def product(cls, mu: DiscreteMeasure, nu: DiscreteMeasure) -> "Coupling":
        return cls.from_matrix(mu, nu, np.outer(mu.weights, nu.weights) / nu.mass)

    @classmethod
    def identity(cls, mu: DiscreteMeasure) -> "Coupling":
        n = len(mu)
        return cls(mu, mu, np.arange(n), np.arange(n), mu.weights)

    @property
    def matrix(self) -> np.ndarray:
        P = np.zeros((len(self.mu), len(self.nu)))
        P[self.rows, self.cols] = self.masses
        return P

    def entries(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.masses.tolist()))

    def support(self) -> list[tuple[float, float]]:
        x, y = self.mu.positions, self.nu.positions
        return sorted({(float(x[i]), float(y[j])) for i, j in zip(self.rows, self.cols)})

    def barycenters(self) -> np.ndarray:
        """Per-source barycentre of the conditional law (NaN where the row is empty)."""
        row_mass = np.bincount(self.rows, self.masses, len(self.mu))
        moment = np.bincount(self.rows, self.masses * self.nu.positions[self.cols], len(self.mu))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(row_mass > 0, moment / row_mass, np.nan)

    def row_target_marginal(self, rows) -> DiscreteMeasure:
        """Second marginal of the plan restricted to the given source indices."""
        sel = np.isin(self.rows, np.asarray(list(rows), dtype=int))
        w = np.bincount(self.cols[sel], self.masses[sel], len(self.nu))
        keep = w > 0
        return DiscreteMeasure(self.nu.positions[keep], w[keep])

    def distance(self, other: "Coupling") -> float:
        """Entrywise sup-distance between plans with the same marginal grids."""
        return float(np.abs(self.matrix - other.matrix).max(initial=0.0))

    def to_json(self) -> dict:
        return {"mu": self.mu.to_json(), "nu": self.nu.to_json(),
                "entries": [[i, j, w] for i, j, w in self.entries()]}

    @classmethod
    def from_json(cls, doc: dict) -> "Coupling":
        if not isinstance(doc, dict) or not {"mu", "nu", "entries"} <= doc.keys():
            raise CouplingError("coupling JSON needs 'mu', 'nu' and 'entries'")
        entries = [(int(e[0]), int(e[1]), float(e[2])) for e in doc["entries"]]
        return cls.from_entries(DiscreteMeasure.from_json(doc["mu"]), DiscreteMeasure.from_json(doc["nu"]), entries)


@dataclasses.dataclass(frozen=True)
class MartingaleCheck:
    violations: tuple[tuple[int, float], ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {"passed": self.passed, "violations": [[i, d] for i, d in self.violations]}


def check_martingale(pi: Coupling, tol: float | None = None) -> MartingaleCheck:
    """Barycentre of every non-null conditional law equals its source point."""
    tol = config.resolve(tol)
    bary = pi.barycenters()
    out = []
    for i, (x, w) in enumerate(pi.mu):
        if w <= tol:
            continue
        dev = bary[i] - x if np.isfinite(bary[i]) else np.inf
        if abs(dev) > tol:
            out.append((i, float(dev)))
    return MartingaleCheck(tuple(out))


def disintegrate(pi: Coupling, i: int) -> DiscreteMeasure:
    """Non-normalised conditional slice of ``pi`` at source atom ``i``."""
    if not 0 <= i < len(pi.mu):
        raise IndexError(f"source index {i} out of range")
    sel = pi.rows == i
    order = np.argsort(pi.cols[sel])
    return DiscreteMeasure(pi.nu.positions[pi.cols[sel][order]], pi.masses[sel][order])


def transport_cost(pi: Coupling, c: CostSpec) -> float:
    if pi.masses.size == 0:
        return 0.0
    vals = np.asarray(c(pi.mu.positions[pi.rows], pi.nu.positions[pi.cols]), dtype=float)
    return float(pi.masses @ vals)


@dataclasses.dataclass(frozen=True, eq=False)
class DualTriple:
    """Dual potentials of the martingale LP on the atom grid.

    ``xi(i, j) = phi[i] + psi[j] + delta[i] * (y[j] - x[i])``.
    """

    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "phi", "psi", "delta"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"dual component {name} is not finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.x.shape == self.phi.shape == self.delta.shape and self.y.shape == self.psi.shape):
            raise ValueError("dual components do not match their grids")

    @classmethod
    def zeros(cls, mu: DiscreteMeasure, nu: DiscreteMeasure) -> "DualTriple":
        return cls(mu.positions, nu.positions, np.zeros(len(mu)), np.zeros(len(nu)), np.zeros(len(mu)))

    def xi(self) -> np.ndarray:
        return self.phi[:, None] + self.psi[None, :] + self.delta[:, None] * (self.y[None, :] - self.x[:, None])

    def value(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
        return float(self.phi @ mu.weights + self.psi @ nu.weights)

    def integrate(self, pi: Coupling) -> float:
        """``∫ xi dpi``."""
        return float(pi.masses @ self.xi()[pi.rows, pi.cols]) if pi.masses.size else 0.0

    def to_json(self) -> dict:
        return {"phi": self.phi.tolist(), "psi": self.psi.tolist(), "delta": self.delta.tolist()}


@dataclasses.dataclass(frozen=True)
class MotSolution:
    coupling: Coupling
    value: float
    duals: DualTriple
    dual_value: float
    iterations: int


def _mot_program(mu: DiscreteMeasure, nu: DiscreteMeasure, C: np.ndarray) -> LinearProgram:
    n, m = C.shape
    x, y = mu.positions, nu.positions
    A = np.zeros((2 * n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
        A[n + m + i, i * m:(i + 1) * m] = y - x[i]
    for j in range(m):
        A[n + j, j::m] = 1.0
    b = np.concatenate([mu.weights, nu.weights, np.zeros(n)])
    return LinearProgram(C.reshape(-1), A, b)


def solve_mot(mu: DiscreteMeasure, nu: DiscreteMeasure, c: CostSpec | np.ndarray,
              tol: float | None = None) -> MotSolution:
    """Minimise ``∫ c dpi`` over martingale couplings of ``mu`` and ``nu``.

    ``c`` may be a :class:`CostSpec` or a precomputed cost matrix on the
    atom grid. Raises :class:`NotConvexOrder` when the LP is infeasible.
    """
    tol = config.resolve(tol)
    C = c.matrix(mu.positions, nu.positions) if isinstance(c, CostSpec) else np.asarray(c, dtype=float)
    if C.shape != (len(mu), len(nu)):
        raise CouplingError("cost matrix does not match the marginals")
    live = np.flatnonzero(mu.weights > tol)
    mu_live = DiscreteMeasure(mu.positions[live], mu.weights[live])
    if len(mu_live) == 0 or len(nu) == 0:
        raise NotConvexOrder("empty marginal")
    out = solve_lp(_mot_program(mu_live, nu, C[live]))
    if out.status is LpStatus.INFEASIBLE:
        raise NotConvexOrder("martingale transport LP is infeasible")
    if out.status is not LpStatus.OPTIMAL:
        raise CouplingError(f"martingale transport LP is {out.status.value}")
    n, m = len(mu_live), len(nu)
    P = np.zeros((len(mu), m))
    P[live] = out.x.reshape(n, m)
    coupling = Coupling.from_matrix(mu, nu, P)

    phi = np.zeros(len(mu))
    delta = np.zeros(len(mu))
    psi = out.duals[n:n + m]
    phi[live] = out.duals[:n]
    delta[live] = out.duals[n + m:]
    dead = np.setdiff1d(np.arange(len(mu)), live)
    if dead.size:
        phi[dead] = (C[dead] - psi[None, :]).min(axis=1)
    duals = DualTriple(mu.positions, nu.positions, phi, psi, delta)
    return MotSolution(coupling, out.value, duals, duals.value(mu, nu), out.iterations)


def solve_mot_dual(mu: DiscreteMeasure, nu: DiscreteMeasure, c: CostSpec | np.ndarray,
                   tol: float | None = None) -> tuple[DualTriple, float]:
    """Dual potentials ``(phi, psi, delta)`` and the dual objective value."""
    sol = solve_mot(mu, nu, c, tol)
    return sol.duals, sol.dual_value


def mot_feasible(mu: DiscreteMeasure, nu: DiscreteMeasure) -> bool:
    try:
        solve_mot(mu, nu, np.zeros((len(mu), len(nu))))
    except NotConvexOrder:
        return False
    return True


def _require_martingale(pi: Coupling, tol: float | None):
    chk = check_martingale(pi, tol)
    if not chk:
        i, dev = chk.violations[0]
        raise NotMartingale(f"barycentre off by {dev:.3g} at source {i}")


def j_functional(chi: PiecewiseLinearConvex, pi: Coupling, tol: float | None = None) -> float:
    """``∫∫ chi(y) dpi_x(y) - chi(x) dmu(x)`` for a martingale coupling ``pi``."""
    _require_martingale(pi, tol)
    inner = float(pi.masses @ chi(pi.nu.positions[pi.cols])) if pi.masses.size else 0.0
    return inner - pi.mu.integrate(chi)


def i_functional(phi, psi, chi: PiecewiseLinearConvex, mu: DiscreteMeasure, nu: DiscreteMeasure,
                 pi: Coupling, delta=None, tol: float | None = None) -> float:
    """``∫ (phi - chi) dmu + ∫ (psi + chi) dnu - J(chi)``.

    With ``delta`` supplied the result is checked against ``∫ xi dpi`` and a
    mismatch beyond the gap tolerance raises ``ArithmeticError``.
    """
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    J = j_functional(chi, pi, tol)
    value = float((phi - chi(mu.positions)) @ mu.weights + (psi + chi(nu.positions)) @ nu.weights) - J
    if delta is not None:
        xi_int = DualTriple(mu.positions, nu.positions, phi, psi, delta).integrate(pi)
        scale = max(1.0, abs(value))
        if abs(xi_int - value) > config.current().gap_tol * scale:
            raise ArithmeticError(f"I(phi+psi)={value!r} differs from ∫xi dpi={xi_int!r}")
    return value


def feasibility_agrees(mu: DiscreteMeasure, nu: DiscreteMeasure) -> bool:
    return bool(check_convex_order(mu, nu)) == mot_feasible(mu, nu)
