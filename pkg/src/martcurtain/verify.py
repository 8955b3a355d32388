"""Support-level checks: left-monotonicity, finite optimality, irreducible components."""

from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from . import config
from .costs import CostSpec, LeftCurtainProbe, Summed, probe_family
from .coupling import Coupling, CouplingError, DualTriple, NotConvexOrder, solve_mot, transport_cost
from .lp import LinearProgram, LpStatus, solve_lp
from .measures import DiscreteMeasure, PiecewiseLinearConvex, check_convex_order, potential, restrict
from .shadow import left_curtain


class EnumerationOverflow(RuntimeError):
    pass


class NotCompetitorPair(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class SupportSet:
    """Finite set of points ``(x, y)``, deduplicated and sorted lexicographically."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple(sorted({(float(x), float(y)) for x, y in self.points}))
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_coupling(cls, pi: Coupling) -> "SupportSet":
        return cls(tuple(pi.support()))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def sources(self) -> list[float]:
        return sorted({x for x, _ in self.points})

    @property
    def targets(self) -> list[float]:
        return sorted({y for _, y in self.points})

    def fibre(self, x: float) -> list[float]:
        return [y for xx, y in self.points if xx == x]

    def to_json(self) -> dict:
        return {"support": [list(p) for p in self.points]}

    @classmethod
    def from_json(cls, doc: dict) -> "SupportSet":
        return cls(tuple((float(p[0]), float(p[1])) for p in doc["support"]))


@dataclasses.dataclass(frozen=True)
class MonotoneCheck:
    passed: bool
    witness: tuple[float, float, float, float, float] | None = None

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        out = {"passed": self.passed}
        if self.witness is not None:
            out["witness"] = dict(zip(("x", "y_minus", "y_plus", "x_prime", "y_prime"), self.witness))
        return out


def check_left_monotone(gamma: SupportSet, tol: float | None = None) -> MonotoneCheck:
    """Look for ``(x, y-), (x, y+), (x', y')`` with ``x < x'`` and ``y- < y' < y+``.

    It suffices to test ``y'`` against the extreme targets of each fibre; the
    first witness in lexicographic order is returned.
    """
    tol = config.resolve(tol)
    pts = gamma.points
    for x in gamma.sources:
        ys = gamma.fibre(x)
        if len(ys) < 2:
            continue
        lo, hi = ys[0], ys[-1]
        for xp, yp in pts:
            if xp > x + tol and lo + tol < yp < hi - tol:
                return MonotoneCheck(False, (x, lo, hi, xp, yp))
    return MonotoneCheck(True)


@dataclasses.dataclass(frozen=True)
class CompetitorPair:
    alpha: Coupling
    alpha_prime: Coupling
    gap: float

    def to_json(self) -> dict:
        return {"alpha": self.alpha.to_json(), "alpha_prime": self.alpha_prime.to_json(), "gap": self.gap}


@dataclasses.dataclass(frozen=True)
class FiniteOptimalityCheck:
    passed: bool
    witness: CompetitorPair | None = None
    subsets: int = 0
    pairs: tuple[CompetitorPair, ...] = ()

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        out = {"passed": self.passed, "subsets_checked": self.subsets}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def _count_subsets(n: int, k: int) -> int:
    return sum(math.comb(n, r) for r in range(1, min(k, n) + 1))


def _pair_from_lp(points, xs, ys, a, ap, gap, tol) -> CompetitorPair:
    nx, ny = len(xs), len(ys)
    A = np.zeros((nx, ny))
    for (x, y), w in zip(points, a):
        A[xs.index(x), ys.index(y)] += w
    Ap = ap.reshape(nx, ny)
    rows = A.sum(axis=1) > tol
    cols = A.sum(axis=0) > tol
    A, Ap = A[rows][:, cols], Ap[rows][:, cols]
    mu = DiscreteMeasure(np.array(xs)[rows], A.sum(axis=1))
    nu = DiscreteMeasure(np.array(ys)[cols], A.sum(axis=0))
    return CompetitorPair(Coupling.from_matrix(mu, nu, A), Coupling.from_matrix(mu, nu, Ap), float(gap))


def best_competitor_gap(points, c: CostSpec, tol: float | None = None):
    """Joint LP over ``alpha`` on ``points`` (total mass one) and its competitors ``alpha'``.

    Returns ``(gap, alpha, alpha', xs, ys)`` where ``gap`` is the minimum of
    ``∫ c dalpha' - ∫ c dalpha``.
    """
    xs = sorted({x for x, _ in points})
    ys = sorted({y for _, y in points})
    nS, nx, ny = len(points), len(xs), len(ys)
    nvar = nS + nx * ny
    rows = []
    rhs = []
    norm = np.zeros(nvar)
    norm[:nS] = 1.0
    rows.append(norm)
    rhs.append(1.0)
    yarr = np.array(ys)
    for ix, x in enumerate(xs):
        mass = np.zeros(nvar)
        bary = np.zeros(nvar)
        for s, (px, py) in enumerate(points):
            if px == x:
                mass[s] = -1.0
                bary[s] = -py
        mass[nS + ix * ny:nS + (ix + 1) * ny] = 1.0
        bary[nS + ix * ny:nS + (ix + 1) * ny] = yarr
        rows += [mass, bary]
        rhs += [0.0, 0.0]
    for iy, y in enumerate(ys):
        col = np.zeros(nvar)
        for s, (px, py) in enumerate(points):
            if py == y:
                col[s] = -1.0
        col[nS + iy::ny] = 1.0
        rows.append(col)
        rhs.append(0.0)
    cost = np.zeros(nvar)
    cost[:nS] = -np.array([float(c(px, py)) for px, py in points])
    cost[nS:] = c.matrix(xs, ys).reshape(-1)
    out = solve_lp(LinearProgram(cost, np.array(rows), np.array(rhs)))
    if out.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"competitor LP unexpectedly {out.status.value}")
    return out.value, out.x[:nS], out.x[nS:], xs, ys


def check_finite_optimality(gamma: SupportSet, c: CostSpec, k: int = 3, collect: bool = False,
                            max_subsets: int = 200_000, tol: float | None = None) -> FiniteOptimalityCheck:
    """Search for a finite measure on ``gamma`` beaten by one of its competitors.

    Every set of at most ``k`` distinct source values is tried, with all
    points of ``gamma`` above them. With ``collect`` the optimal pair of
    every subset is kept and the scan does not stop at the first witness.
    """
    tol = config.resolve(tol)
    if k < 1:
        raise ValueError("k must be at least 1")
    sources = gamma.sources
    total = _count_subsets(len(sources), k)
    if total > max_subsets:
        raise EnumerationOverflow(f"{total} source subsets exceed the limit of {max_subsets}")
    pairs = []
    witness = None
    count = 0
    for r in range(1, min(k, len(sources)) + 1):
        for subset in itertools.combinations(sources, r):
            chosen = set(subset)
            points = [p for p in gamma.points if p[0] in chosen]
            gap, a, ap, xs, ys = best_competitor_gap(points, c, tol)
            count += 1
            bad = gap < -tol
            if collect or (bad and witness is None):
                pair = _pair_from_lp(points, xs, ys, a, ap, gap, tol)
                if collect:
                    pairs.append(pair)
                if bad and witness is None:
                    witness = pair
            if witness is not None and not collect:
                return FiniteOptimalityCheck(False, witness, count)
    return FiniteOptimalityCheck(witness is None, witness, count, tuple(pairs))


def competitor(alpha: Coupling, c: CostSpec | np.ndarray) -> Coupling:
    """Cheapest competitor of ``alpha`` for cost ``c`` on alpha's marginal grid."""
    mu, nu = alpha.mu, alpha.nu
    C = c.matrix(mu.positions, nu.positions) if isinstance(c, CostSpec) else np.asarray(c, dtype=float)
    n, m = len(mu), len(nu)
    y = nu.positions
    A = np.zeros((2 * n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
        A[n + m + i, i * m:(i + 1) * m] = y
    for j in range(m):
        A[n + j, j::m] = 1.0
    P = alpha.matrix
    b = np.concatenate([mu.weights, nu.weights, P @ y])
    out = solve_lp(LinearProgram(C.reshape(-1), A, b))
    if out.status is not LpStatus.OPTIMAL:
        raise CouplingError(f"competitor LP unexpectedly {out.status.value}")
    return Coupling.from_matrix(mu, nu, out.x.reshape(n, m))


@dataclasses.dataclass(frozen=True)
class PartialSumCheck:
    passed: bool
    index: int | None = None
    witness: float | None = None
    kind: str | None = None

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def check_partial_sum_convex_order(alpha: Coupling, alpha_prime: Coupling,
                                   tol: float | None = None) -> PartialSumCheck:
    """Cumulative conditional laws of ``alpha`` are ``<=_cx`` those of ``alpha_prime``.

    ``index`` in a failure is the 1-based number of source atoms summed.
    """
    tol = config.resolve(tol)
    if not (np.array_equal(alpha.mu.positions, alpha_prime.mu.positions)
            and np.array_equal(alpha.nu.positions, alpha_prime.nu.positions)):
        raise NotCompetitorPair("plans live on different grids")
    P, Q = alpha.matrix, alpha_prime.matrix
    y = alpha.nu.positions
    if (np.abs(P.sum(1) - Q.sum(1)).max() > tol or np.abs(P.sum(0) - Q.sum(0)).max() > tol
            or np.abs(P @ y - Q @ y).max() > tol * max(1.0, np.abs(y).max())):
        raise NotCompetitorPair("plans differ in marginals or barycentres")
    Pc = np.cumsum(P, axis=0)
    Qc = np.cumsum(Q, axis=0)
    for i in range(P.shape[0]):
        a, b = Pc[i], Qc[i]
        if abs(a.sum() - b.sum()) > tol:
            return PartialSumCheck(False, i + 1, None, "mass")
        if abs(a @ y - b @ y) > tol * max(1.0, np.abs(y).max()):
            return PartialSumCheck(False, i + 1, None, "mean")
        call = lambda w: np.maximum(y[None, :] - y[:, None], 0.0) @ w  # noqa: E731
        excess = call(a) - call(b)
        j = int(np.argmax(excess))
        if excess[j] > tol:
            return PartialSumCheck(False, i + 1, float(y[j]), "call")
    return PartialSumCheck(True)


@dataclasses.dataclass(frozen=True)
class Component:
    lo: float
    hi: float
    mu: DiscreteMeasure
    nu: DiscreteMeasure

    def to_json(self) -> dict:
        return {"interval": [self.lo, self.hi], "mu": self.mu.to_json(), "nu": self.nu.to_json()}


@dataclasses.dataclass(frozen=True)
class Decomposition:
    common: DiscreteMeasure
    components: tuple[Component, ...]

    def reconstitution_error(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[float, float]:
        from .measures import atomwise_distance

        mu_sum = self.common
        nu_sum = self.common
        for comp in self.components:
            mu_sum = mu_sum + comp.mu
            nu_sum = nu_sum + comp.nu
        return atomwise_distance(mu_sum, mu), atomwise_distance(nu_sum, nu)

    def leakage(self, pi: Coupling, tol: float | None = None) -> float:
        """Mass sent from inside a component to outside its closure (maximum over components)."""
        tol = config.resolve(tol)
        x, y = pi.mu.positions[pi.rows], pi.nu.positions[pi.cols]
        worst = 0.0
        for comp in self.components:
            inside = (x > comp.lo + tol) & (x < comp.hi - tol)
            out = inside & ((y < comp.lo - tol) | (y > comp.hi + tol))
            worst = max(worst, float(pi.masses[out].sum()))
        return worst

    def to_json(self) -> dict:
        return {"common": self.common.to_json(), "components": [c.to_json() for c in self.components]}


def irreducible_components(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float | None = None) -> Decomposition:
    """Split ``(mu, nu)`` along the open components of ``{u_mu < u_nu}``.

    The difference of potentials is piecewise linear with kinks on the atom
    grid, so its zero set there delimits the components. Target mass at a
    component endpoint is allotted by matching the component's mass and mean.
    """
    tol = config.resolve(tol)
    chk = check_convex_order(mu, nu, tol)
    if not chk:
        raise NotConvexOrder(f"marginals are not in convex order: {chk.reason}")
    grid = _merged_grid(np.union1d(mu.positions, nu.positions), tol)
    diff = potential(nu)(grid) - potential(mu)(grid)
    zeros = np.flatnonzero(diff <= tol)
    comps = []
    for a, b in zip(zeros, zeros[1:]):
        if b - a < 2:
            continue
        lo, hi = _snap(nu, float(grid[a]), tol), _snap(nu, float(grid[b]), tol)
        mu_k = restrict(mu, lo + tol, hi - tol)
        inner = restrict(nu, lo + tol, hi - tol)
        M = mu_k.mass - inner.mass
        F = mu_k.first_moment - inner.first_moment
        w_hi = (F - M * lo) / (hi - lo)
        w_lo = M - w_hi
        if min(w_lo, w_hi) < -tol:
            raise ArithmeticError(f"negative endpoint mass on ({lo}, {hi})")
        ends = [(p, w) for p, w in ((lo, w_lo), (hi, w_hi)) if w > tol]
        nu_k = DiscreteMeasure.from_atoms(list(inner.positions) + [p for p, _ in ends],
                                          list(inner.weights) + [w for _, w in ends], tol)
        comps.append(Component(lo, hi, mu_k, nu_k))
    inside = np.zeros(len(mu), dtype=bool)
    for comp in comps:
        inside |= (mu.positions > comp.lo + tol) & (mu.positions < comp.hi - tol)
    common = DiscreteMeasure(mu.positions[~inside], mu.weights[~inside])
    return Decomposition(common, tuple(comps))


def _merged_grid(grid: np.ndarray, tol: float) -> np.ndarray:
    keep = np.concatenate([[True], np.diff(grid) >= tol]) if grid.size else np.zeros(0, bool)
    return grid[keep]


def _snap(m: DiscreteMeasure, p: float, tol: float) -> float:
    """Position of the atom of ``m`` within ``tol`` of ``p``, else ``p``."""
    near = np.flatnonzero(np.abs(m.positions - p) < tol)
    return float(m.positions[near[0]]) if near.size else p


def convex_envelope(xs, values) -> PiecewiseLinearConvex:
    """Largest convex function below ``values`` on the grid ``xs`` (lower convex hull)."""
    xs = np.asarray(xs, dtype=float)
    vs = np.asarray(values, dtype=float)
    if xs.size == 0:
        raise ValueError("convex envelope needs at least one point")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("grid must be strictly increasing")
    if xs.size == 1:
        return PiecewiseLinearConvex(xs, vs, 0.0, 0.0)
    hull: list[int] = []
    for k in range(len(xs)):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # drop j if it lies on or above the chord from i to k
            if (vs[j] - vs[i]) * (xs[k] - xs[i]) >= (vs[k] - vs[i]) * (xs[j] - xs[i]):
                hull.pop()
            else:
                break
        hull.append(k)
    hx, hv = xs[hull], vs[hull]
    env = np.interp(xs, hx, hv)
    env[hull] = hv
    slopes = np.diff(hv) / np.diff(hx)
    return PiecewiseLinearConvex(xs, env, float(slopes[0]), float(slopes[-1]))


@dataclasses.dataclass(frozen=True)
class SplittingCheck:
    passed: bool
    location: tuple[int, int] | None = None
    slack: float = 0.0
    kind: str | None = None

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def verify_dual_splitting(pi: Coupling, c: CostSpec, d: DualTriple, tol: float | None = None) -> SplittingCheck:
    """``xi <= c`` on the whole grid and ``xi == c`` on the support of ``pi``."""
    tol = config.resolve(tol)
    C = c.matrix(pi.mu.positions, pi.nu.positions)
    slack = C - d.xi()
    i, j = np.unravel_index(int(np.argmin(slack)), slack.shape)
    if slack[i, j] < -tol:
        return SplittingCheck(False, (int(i), int(j)), float(slack[i, j]), "inequality")
    on = np.abs(slack[pi.rows, pi.cols])
    if on.size and on.max() > tol:
        k = int(np.argmax(on))
        return SplittingCheck(False, (int(pi.rows[k]), int(pi.cols[k])), float(slack[pi.rows[k], pi.cols[k]]), "equality")
    return SplittingCheck(True)


def probe_grid(mu: DiscreteMeasure, nu: DiscreteMeasure, grid: str = "atoms") -> list[LeftCurtainProbe]:
    """Probe costs ``c_{s,t}``: ``s`` over source atoms, ``t`` over target atoms.

    ``grid="midpoints"`` adds the midpoints between consecutive atoms.
    """
    xs, ys = mu.positions, nu.positions
    if grid == "midpoints":
        xs = np.union1d(xs, 0.5 * (xs[1:] + xs[:-1]))
        ys = np.union1d(ys, 0.5 * (ys[1:] + ys[:-1]))
    elif grid != "atoms":
        raise ValueError(f"unknown probe grid {grid!r}")
    return probe_family(xs, ys)


@dataclasses.dataclass(frozen=True)
class UniquenessReport:
    left_curtain: Coupling
    aggregate_optimizer: Coupling
    distance: float
    left_monotone: MonotoneCheck
    passed: bool

    def to_json(self) -> dict:
        return {"passed": self.passed, "distance": self.distance,
                "left_curtain": self.left_curtain.to_json(),
                "aggregate_optimizer": self.aggregate_optimizer.to_json(),
                "left_monotone": self.left_monotone.to_json()}


def verify_uniqueness(mu: DiscreteMeasure, nu: DiscreteMeasure, grid: str = "atoms",
                      atol: float = 1e-7) -> UniquenessReport:
    """Compare the left-curtain plan with the minimiser of the summed probe costs."""
    lc = left_curtain(mu, nu)
    agg = solve_mot(mu, nu, Summed(tuple(probe_grid(mu, nu, grid)))).coupling
    dist = lc.distance(agg)
    mono = check_left_monotone(SupportSet.from_coupling(lc))
    return UniquenessReport(lc, agg, dist, mono, bool(mono) and dist <= atol)


def loses_on_some_probe(pi: Coupling, reference: Coupling, probes, margin: float) -> LeftCurtainProbe | None:
    """First probe on which ``pi`` costs more than ``reference`` by over ``margin``."""
    for c in probes:
        if transport_cost(pi, c) > transport_cost(reference, c) + margin:
            return c
    return None
