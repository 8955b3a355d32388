"""Cost functions on ``R x R`` and their restriction to atom grids."""

from __future__ import annotations

import dataclasses

import numpy as np

from . import config
from .measures import DiscreteMeasure


class CostError(ValueError):
    pass


class OffGridError(CostError):
    pass


class CostSpec:
    """Base class; subclasses implement :meth:`__call__` vectorised in ``x`` and ``y``."""

    kind = "abstract"

    def __call__(self, x, y):
        raise NotImplementedError

    def matrix(self, xs, ys) -> np.ndarray:
        """Cost on the product grid ``xs x ys`` as an ``len(xs) x len(ys)`` array."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        out = np.asarray(self(xs[:, None], ys[None, :]), dtype=float)
        out = np.broadcast_to(out, (len(xs), len(ys))).copy()
        if not np.all(np.isfinite(out)):
            raise CostError("cost has non-finite values on the grid")
        return out

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclasses.dataclass(frozen=True)
class LeftCurtainProbe(CostSpec):
    """``(x, y) -> 1{x <= s} |y - t|``."""

    s: float
    t: float
    kind = "cst"

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.where(x <= self.s, np.abs(y - self.t), 0.0)

    def to_json(self) -> dict:
        return {"type": "cst", "s": self.s, "t": self.t}


@dataclasses.dataclass(frozen=True)
class PowerSpread(CostSpec):
    """``(x, y) -> |y - x|^p``."""

    p: float
    kind = "power"

    def __post_init__(self):
        if not self.p > 0:
            raise CostError("PowerSpread exponent must be positive")

    def __call__(self, x, y):
        return np.abs(np.asarray(y, dtype=float) - np.asarray(x, dtype=float)) ** self.p

    def to_json(self) -> dict:
        return {"type": "power", "p": self.p}


def _lookup(grid: np.ndarray, v: np.ndarray, tol: float) -> np.ndarray:
    idx = np.clip(np.searchsorted(grid, v), 0, len(grid) - 1)
    lo = np.clip(idx - 1, 0, len(grid) - 1)
    pick = np.where(np.abs(grid[lo] - v) < np.abs(grid[idx] - v), lo, idx)
    if np.any(np.abs(grid[pick] - v) > tol):
        raise OffGridError("evaluation point is not on the cost grid")
    return pick


@dataclasses.dataclass(frozen=True, eq=False)
class Grid(CostSpec):
    """Tabulated cost on an explicit product grid."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    kind = "grid"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(x), len(y)):
            raise CostError(f"grid values have shape {v.shape}, expected {(len(x), len(y))}")
        if not np.all(np.isfinite(v)):
            raise CostError("grid values must be finite")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
            raise CostError("grid coordinates must be strictly increasing")
        for name, arr in (("x", x), ("y", y), ("values", v)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __call__(self, x, y):
        tol = config.resolve(None)
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return self.values[_lookup(self.x, x, tol), _lookup(self.y, y, tol)]

    def to_json(self) -> dict:
        return {"type": "grid", "x": self.x.tolist(), "y": self.y.tolist(), "values": self.values.tolist()}


@dataclasses.dataclass(frozen=True, eq=False)
class SeparableBound(CostSpec):
    """``c1(x) + c2(y)`` tabulated on an x-grid and a y-grid."""

    x: np.ndarray
    y: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    kind = "separable"

    def __post_init__(self):
        for name in ("x", "y", "c1", "c2"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.c1.shape != self.x.shape or self.c2.shape != self.y.shape:
            raise CostError("separable bound values do not match their grids")

    def __call__(self, x, y):
        tol = config.resolve(None)
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return self.c1[_lookup(self.x, x, tol)] + self.c2[_lookup(self.y, y, tol)]

    def to_json(self) -> dict:
        return {"type": "separable", "x": self.x.tolist(), "y": self.y.tolist(),
                "c1": self.c1.tolist(), "c2": self.c2.tolist()}


@dataclasses.dataclass(frozen=True, eq=False)
class Summed(CostSpec):
    """Pointwise sum of several costs, e.g. a family of probes."""

    parts: tuple
    kind = "sum"

    def __call__(self, x, y):
        return sum(np.asarray(c(x, y), dtype=float) for c in self.parts)

    def to_json(self) -> dict:
        return {"type": "sum", "parts": [c.to_json() for c in self.parts]}


def evaluate(c: CostSpec, x: float, y: float) -> float:
    return float(c(x, y))


def probe_family(xs, ys) -> list[LeftCurtainProbe]:
    """Probes ``c_{s,t}`` with ``s`` over ``xs`` and ``t`` over ``ys``."""
    return [LeftCurtainProbe(float(s), float(t)) for s in xs for t in ys]


def cost_from_json(doc: dict) -> CostSpec:
    if not isinstance(doc, dict) or "type" not in doc:
        raise CostError("cost JSON must be an object with a 'type' field")
    kind = doc["type"]
    try:
        if kind == "cst":
            return LeftCurtainProbe(float(doc["s"]), float(doc["t"]))
        if kind == "power":
            return PowerSpread(float(doc["p"]))
        if kind == "grid":
            return Grid(doc["x"], doc["y"], doc["values"])
        if kind == "separable":
            return SeparableBound(doc["x"], doc["y"], doc["c1"], doc["c2"])
        if kind == "sum":
            return Summed(tuple(cost_from_json(d) for d in doc["parts"]))
    except KeyError as exc:
        raise CostError(f"cost of type {kind!r} lacks field {exc}") from None
    raise CostError(f"unknown cost type {kind!r}")


def check_integrable_bound(c: CostSpec, mu: DiscreteMeasure, nu: DiscreteMeasure) -> SeparableBound:
    """Bound ``c(x, y) <= c1(x) + c2(y)`` on the atom grid, with ``c1`` the row maxima and ``c2 = 0``.

    On a finite grid such a bound always exists; non-finite costs raise
    :class:`CostError` from :meth:`CostSpec.matrix`.
    """
    C = c.matrix(mu.positions, nu.positions)
    c1 = C.max(axis=1) if C.shape[1] else np.zeros(C.shape[0])
    bound = SeparableBound(mu.positions, nu.positions, c1, np.zeros(len(nu)))
    assert np.all(C <= c1[:, None]), "row-max bound failed"
    return bound
