"""Finite atomic measures on the real line and their convex-order checks."""

from __future__ import annotations

import dataclasses
import math
from typing import Iterable, Sequence

import numpy as np

from . import config


class MeasureError(ValueError):
    pass


class ZeroMassError(MeasureError):
    pass


class NotDominated(MeasureError):
    """Raised by :func:`subtract` when ``b`` is not an atomwise sub-measure of ``a``."""


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclasses.dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative measure with finitely many atoms, positions strictly increasing.

    Use :meth:`from_atoms` to build one from unsorted or duplicated input;
    the raw constructor only validates.
    """

    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pos = _frozen(self.positions).reshape(-1)
        w = _frozen(self.weights).reshape(-1)
        if pos.shape != w.shape:
            raise MeasureError("positions and weights differ in length")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(w))):
            raise MeasureError("non-finite atom")
        if np.any(w <= 0):
            raise MeasureError("atom weights must be positive")
        if np.any(np.diff(pos) <= 0):
            raise MeasureError("atom positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, positions: Iterable[float], weights: Iterable[float], tol: float | None = None,
                   drop_below: float = 0.0) -> "DiscreteMeasure":
        """Sort atoms, merge those closer than ``tol`` and drop weights ``<= drop_below``.

        Negative weights below ``-tol`` are rejected.
        """
        tol = config.resolve(tol)
        pos = np.asarray(list(positions), dtype=float).reshape(-1)
        w = np.asarray(list(weights), dtype=float).reshape(-1)
        if pos.shape != w.shape:
            raise MeasureError("positions and weights differ in length")
        if np.any(w < -tol):
            raise MeasureError("negative atom weight")
        order = np.argsort(pos, kind="stable")
        pos, w = pos[order], w[order]
        merged_pos: list[float] = []
        merged_w: list[float] = []
        for p, q in zip(pos, w):
            if merged_pos and p - merged_pos[-1] < tol:
                merged_w[-1] += q
            else:
                merged_pos.append(float(p))
                merged_w.append(float(q))
        keep = [i for i, q in enumerate(merged_w) if q > max(drop_below, 0.0)]
        return cls(np.array([merged_pos[i] for i in keep]), np.array([merged_w[i] for i in keep]))

    @classmethod
    def zero(cls) -> "DiscreteMeasure":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def dirac(cls, x: float, mass: float = 1.0) -> "DiscreteMeasure":
        return cls(np.array([x]), np.array([mass]))

    @classmethod
    def uniform(cls, positions: Sequence[float]) -> "DiscreteMeasure":
        n = len(positions)
        return cls.from_atoms(positions, [1.0 / n] * n)

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(zip(self.positions.tolist(), self.weights.tolist()))

    def __repr__(self) -> str:
        atoms = ", ".join(f"{w:.6g}@{p:.6g}" for p, w in self)
        return f"DiscreteMeasure({atoms})"

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def first_moment(self) -> float:
        return float(self.weights @ self.positions)

    @property
    def mean(self) -> float:
        m = self.mass
        if m <= 0:
            raise ZeroMassError("mean of the zero measure is undefined")
        return self.first_moment / m

    def integrate(self, f) -> float:
        """``∫ f dm`` for a vectorised callable ``f``."""
        if len(self) == 0:
            return 0.0
        return float(self.weights @ np.asarray(f(self.positions), dtype=float))

    def call(self, t) -> np.ndarray | float:
        """``∫ (y - t)^+ dm(y)``, vectorised in ``t``."""
        t = np.asarray(t, dtype=float)
        val = np.maximum(self.positions[None, :] - t.reshape(-1, 1), 0.0) @ self.weights
        return float(val[0]) if t.ndim == 0 else val

    def put(self, t) -> np.ndarray | float:
        """``∫ (t - y)^+ dm(y)``, vectorised in ``t``."""
        t = np.asarray(t, dtype=float)
        val = np.maximum(t.reshape(-1, 1) - self.positions[None, :], 0.0) @ self.weights
        return float(val[0]) if t.ndim == 0 else val

    def weight_at(self, x: float, tol: float | None = None) -> float:
        tol = config.resolve(tol)
        idx = np.flatnonzero(np.abs(self.positions - x) < tol)
        return float(self.weights[idx].sum()) if idx.size else 0.0

    def scaled(self, factor: float) -> "DiscreteMeasure":
        if factor <= 0:
            return DiscreteMeasure.zero()
        return DiscreteMeasure(self.positions, self.weights * factor)

    def normalized(self) -> "DiscreteMeasure":
        m = self.mass
        if m <= 0:
            raise ZeroMassError("cannot normalise the zero measure")
        return self.scaled(1.0 / m)

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        return DiscreteMeasure.from_atoms(np.concatenate([self.positions, other.positions]),
                                          np.concatenate([self.weights, other.weights]))

    def allclose(self, other: "DiscreteMeasure", atol: float) -> bool:
        return atomwise_distance(self, other) <= atol

    def to_json(self) -> dict:
        return {"atoms": [[p, w] for p, w in self]}

    @classmethod
    def from_json(cls, doc: dict) -> "DiscreteMeasure":
        if not isinstance(doc, dict) or "atoms" not in doc:
            raise MeasureError("measure JSON must be an object with an 'atoms' list")
        atoms = doc["atoms"]
        if not all(isinstance(a, (list, tuple)) and len(a) == 2 for a in atoms):
            raise MeasureError("each atom must be a [position, weight] pair")
        pos = [float(a[0]) for a in atoms]
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise MeasureError("atom positions must be ascending")
        return cls.from_atoms(pos, [float(a[1]) for a in atoms])


def atomwise_distance(a: DiscreteMeasure, b: DiscreteMeasure, tol: float | None = None) -> float:
    """Largest weight difference over the union of atom positions."""
    tol = config.resolve(tol)
    grid = np.union1d(a.positions, b.positions)
    if grid.size == 0:
        return 0.0
    return max(abs(a.weight_at(x, tol) - b.weight_at(x, tol)) for x in grid)


@dataclasses.dataclass(frozen=True)
class PiecewiseLinearConvex:
    """Continuous piecewise linear function given by its values at breakpoints.

    Outside the breakpoint range the function is extended affinely with
    ``left_slope`` and ``right_slope``. With no breakpoints the function is
    identically zero.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    left_slope: float
    right_slope: float

    def __post_init__(self):
        xs = _frozen(self.breakpoints).reshape(-1)
        vs = _frozen(self.values).reshape(-1)
        if xs.shape != vs.shape:
            raise ValueError("breakpoints and values differ in length")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if xs.size == 0 and (self.left_slope != 0 or self.right_slope != 0):
            raise ValueError("a function without breakpoints must be zero")
        object.__setattr__(self, "breakpoints", xs)
        object.__setattr__(self, "values", vs)
        object.__setattr__(self, "left_slope", float(self.left_slope))
        object.__setattr__(self, "right_slope", float(self.right_slope))

    @classmethod
    def affine(cls, slope: float, intercept: float) -> "PiecewiseLinearConvex":
        return cls(np.array([0.0]), np.array([intercept]), slope, slope)

    @classmethod
    def from_function(cls, f, breakpoints, left_slope: float, right_slope: float) -> "PiecewiseLinearConvex":
        xs = np.asarray(breakpoints, dtype=float)
        return cls(xs, np.asarray(f(xs), dtype=float), left_slope, right_slope)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xs, vs = self.breakpoints, self.values
        if xs.size == 0:
            out = np.zeros_like(x)
        else:
            out = np.interp(x, xs, vs)
            out = np.where(x < xs[0], vs[0] + self.left_slope * (x - xs[0]), out)
            out = np.where(x > xs[-1], vs[-1] + self.right_slope * (x - xs[-1]), out)
        return float(out) if out.ndim == 0 else out

    @property
    def slopes(self) -> np.ndarray:
        """Segment slopes from the left asymptote to the right asymptote."""
        inner = np.diff(self.values) / np.diff(self.breakpoints) if self.breakpoints.size > 1 else np.empty(0)
        return np.concatenate([[self.left_slope], inner, [self.right_slope]])

    def is_convex(self, tol: float | None = None) -> bool:
        tol = config.resolve(tol)
        return bool(np.all(np.diff(self.slopes) >= -tol))


def potential(m: DiscreteMeasure) -> PiecewiseLinearConvex:
    """The potential function ``u(x) = ∫ |x - y| dm(y)``."""
    if len(m) == 0:
        return PiecewiseLinearConvex(np.empty(0), np.empty(0), 0.0, 0.0)
    xs = m.positions
    vals = np.abs(xs[:, None] - xs[None, :]) @ m.weights
    return PiecewiseLinearConvex(xs, vals, -m.mass, m.mass)


@dataclasses.dataclass(frozen=True)
class OrderCheck:
    """Outcome of a convex-order test; truthy when the pair is ordered.

    On a violation ``kind`` names the failing test (``"mass"``, ``"mean"``,
    ``"potential"``, ``"call"`` or ``"put"``), ``witness`` the offending
    position if any, and ``excess`` by how much the inequality fails.
    """

    ordered: bool
    kind: str | None = None
    witness: float | None = None
    excess: float = 0.0
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ordered

    def to_json(self) -> dict:
        out = {"ordered": self.ordered}
        if not self.ordered:
            out.update(kind=self.kind, witness=self.witness, excess=self.excess, reason=self.reason)
        return out


ORDERED = OrderCheck(True)


def check_convex_order(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float | None = None) -> OrderCheck:
    """Test ``mu <=_cx nu`` through mass, mean and potential domination."""
    tol = config.resolve(tol)
    if mu.mass <= 0 or nu.mass <= 0:
        raise ZeroMassError("convex order needs measures of positive mass")
    if abs(mu.mass - nu.mass) > tol:
        return OrderCheck(False, "mass", None, abs(mu.mass - nu.mass), "masses differ")
    if abs(mu.mean - nu.mean) > tol:
        return OrderCheck(False, "mean", None, abs(mu.mean - nu.mean), "means differ")
    grid = np.union1d(mu.positions, nu.positions)
    excess = potential(mu)(grid) - potential(nu)(grid)
    k = int(np.argmax(excess))
    if excess[k] > tol:
        return OrderCheck(False, "potential", float(grid[k]), float(excess[k]),
                          "potential of the first measure exceeds the second")
    return ORDERED


def check_extended_convex_order(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float | None = None) -> OrderCheck:
    """Test ``mu <=_E nu``: integrals of nonnegative convex functions are dominated."""
    tol = config.resolve(tol)
    if mu.mass > nu.mass + tol:
        return OrderCheck(False, "mass", None, mu.mass - nu.mass, "mass exceeds the target")
    grid = np.union1d(mu.positions, nu.positions)
    if grid.size == 0:
        return ORDERED
    for kind, fn in (("call", DiscreteMeasure.call), ("put", DiscreteMeasure.put)):
        excess = fn(mu, grid) - fn(nu, grid)
        k = int(np.argmax(excess))
        if excess[k] > tol:
            return OrderCheck(False, kind, float(grid[k]), float(excess[k]),
                              f"{kind} function of the first measure exceeds the second")
    return ORDERED


def restrict(m: DiscreteMeasure, lo: float = -math.inf, hi: float = math.inf,
             closed_lo: bool = True, closed_hi: bool = True) -> DiscreteMeasure:
    """Keep the atoms of ``m`` lying in the interval between ``lo`` and ``hi``."""
    if lo > hi:
        raise ValueError("empty interval: lo > hi")
    x = m.positions
    keep = (x >= lo) if closed_lo else (x > lo)
    keep &= (x <= hi) if closed_hi else (x < hi)
    return DiscreteMeasure(x[keep], m.weights[keep])


def subtract(a: DiscreteMeasure, b: DiscreteMeasure, tol: float | None = None) -> DiscreteMeasure:
    """Atomwise difference ``a - b``; remainders below ``tol`` are dropped."""
    tol = config.resolve(tol)
    w = a.weights.copy()
    for p, q in b:
        idx = np.flatnonzero(np.abs(a.positions - p) < tol)
        if idx.size == 0:
            if q > tol:
                raise NotDominated(f"atom at {p!r} is absent from the minuend")
            continue
        i = int(idx[0])
        if q > w[i] + tol:
            raise NotDominated(f"atom at {p!r}: weight {q!r} exceeds {w[i]!r}")
        w[i] -= q
    keep = w > tol
    return DiscreteMeasure(a.positions[keep], w[keep])
