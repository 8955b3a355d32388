"""Shadows of atomic measures and the left-curtain coupling."""

from __future__ import annotations

import numpy as np

from . import config
from .coupling import Coupling, NotConvexOrder
from .lp import LinearProgram, LpStatus, solve_lp
from .measures import (DiscreteMeasure, MeasureError, check_convex_order, check_extended_convex_order, subtract)

MEAN_TOL = 1e-12
BRACKET_TOL = 1e-14


class ExtendedOrderViolated(MeasureError):
    def __init__(self, message: str, prefix: int | None = None):
        super().__init__(message)
        self.prefix = prefix


def _window(cum: np.ndarray, q: float, m: float) -> np.ndarray:
    return np.clip(np.minimum(cum[1:], q + m) - np.maximum(cum[:-1], q), 0.0, None)


def shadow_atom(nu: DiscreteMeasure, x: float, m: float, tol: float | None = None) -> DiscreteMeasure:
    """Shadow of ``m * delta_x`` in ``nu``.

    The shadow is the slice of ``nu`` between quantile levels ``q`` and
    ``q + m`` whose barycentre is ``x``; the window mean is nondecreasing in
    ``q``, so ``q`` is found by bisection (smallest admissible ``q`` on
    plateaus).
    """
    tol = config.resolve(tol)
    if m <= 0:
        raise ValueError("shadow mass must be positive")
    chk = check_extended_convex_order(DiscreteMeasure.dirac(x, m), nu, tol)
    if not chk:
        raise ExtendedOrderViolated(f"{m!r}*delta_{x!r} is not below nu in extended convex order ({chk.reason})")
    total = nu.mass
    if m >= total - tol:
        return nu
    y = nu.positions
    cum = np.concatenate([[0.0], np.cumsum(nu.weights)])

    def mean(q):
        return float(_window(cum, q, m) @ y) / m

    lo, hi = 0.0, total - m
    if mean(lo) >= x - MEAN_TOL:
        q = lo
    elif mean(hi) <= x + MEAN_TOL:
        q = hi
    else:
        while hi - lo > BRACKET_TOL:
            mid = 0.5 * (lo + hi)
            v = mean(mid)
            if abs(v - x) <= MEAN_TOL:
                hi = mid
                break
            if v < x:
                lo = mid
            else:
                hi = mid
        q = hi
    w = _window(cum, q, m)
    keep = w > total * 1e-15
    return DiscreteMeasure(y[keep], w[keep])


def shadow_measure(nu: DiscreteMeasure, mu: DiscreteMeasure, order="ascending", rng=None,
                   tol: float | None = None) -> DiscreteMeasure:
    """Shadow of ``mu`` in ``nu``, built atom by atom.

    ``order`` is ``"ascending"``, ``"descending"``, ``"random"`` (using
    ``rng``) or an explicit permutation of ``mu``'s atom indices.
    """
    tol = config.resolve(tol)
    idx = _order(len(mu), order, rng)
    remaining = nu
    parts = []
    for k, i in enumerate(idx):
        try:
            theta = shadow_atom(remaining, float(mu.positions[i]), float(mu.weights[i]), tol)
        except ExtendedOrderViolated as exc:
            raise ExtendedOrderViolated(f"after {k} atoms: {exc}", prefix=k) from None
        parts.append(theta)
        remaining = subtract(remaining, theta, tol)
    if not parts:
        return DiscreteMeasure.zero()
    return DiscreteMeasure.from_atoms(np.concatenate([p.positions for p in parts]),
                                      np.concatenate([p.weights for p in parts]), tol)


def _order(n: int, order, rng) -> np.ndarray:
    if isinstance(order, str):
        if order == "ascending":
            return np.arange(n)
        if order == "descending":
            return np.arange(n)[::-1]
        if order == "random":
            return np.random.default_rng(rng).permutation(n)
        raise ValueError(f"unknown order {order!r}")
    idx = np.asarray(order, dtype=int)
    if sorted(idx.tolist()) != list(range(n)):
        raise ValueError("order must be a permutation of the atom indices")
    return idx


def left_curtain(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float | None = None) -> Coupling:
    """Left-curtain coupling: source atoms, left to right, are sent to their shadow in what remains of ``nu``."""
    tol = config.resolve(tol)
    chk = check_convex_order(mu, nu, tol)
    if not chk:
        raise NotConvexOrder(f"marginals are not in convex order: {chk.reason}")
    remaining = nu
    entries = []
    for i, (x, w) in enumerate(mu):
        theta = shadow_atom(remaining, x, w, tol)
        cols = np.searchsorted(nu.positions, theta.positions)
        entries.extend((i, int(j), float(q)) for j, q in zip(cols, theta.weights))
        remaining = subtract(remaining, theta, tol)
    return Coupling.from_entries(mu, nu, entries)


def _shadow_constraints(nu: DiscreteMeasure, x: float, m: float):
    k = len(nu)
    y = nu.positions
    A = np.zeros((k + 2, 2 * k))
    A[:k, :k] = np.eye(k)
    A[:k, k:] = np.eye(k)
    A[k, :k] = 1.0
    A[k + 1, :k] = y
    b = np.concatenate([nu.weights, [m, m * x]])
    return A, b


def shadow_atom_oracle(nu: DiscreteMeasure, x: float, m: float) -> DiscreteMeasure:
    """LP reference: minimise ``∫ y^2 dtheta`` over ``theta <= nu`` of mass ``m`` and mean ``x``."""
    A, b = _shadow_constraints(nu, x, m)
    c = np.concatenate([nu.positions ** 2, np.zeros(len(nu))])
    out = solve_lp(LinearProgram(c, A, b))
    if out.status is not LpStatus.OPTIMAL:
        raise ExtendedOrderViolated(f"no sub-measure of nu has mass {m!r} and mean {x!r}")
    w = out.x[:len(nu)]
    keep = w > 1e-13
    return DiscreteMeasure(nu.positions[keep], w[keep])


def min_feasible_call(nu: DiscreteMeasure, x: float, m: float, t: float) -> float:
    """Smallest ``∫ (y - t)^+ dtheta`` over sub-measures of ``nu`` with mass ``m`` and mean ``x``."""
    A, b = _shadow_constraints(nu, x, m)
    c = np.concatenate([np.maximum(nu.positions - t, 0.0), np.zeros(len(nu))])
    out = solve_lp(LinearProgram(c, A, b))
    if out.status is not LpStatus.OPTIMAL:
        raise ExtendedOrderViolated(f"no sub-measure of nu has mass {m!r} and mean {x!r}")
    return out.value
