"""Random atomic marginals for property checks."""

from __future__ import annotations

import numpy as np

from .measures import DiscreteMeasure

MIN_GAP = 1e-3


def _positions(rng: np.random.Generator, n: int, lo: float, hi: float) -> np.ndarray:
    while True:
        x = np.sort(rng.uniform(lo, hi, n))
        if n < 2 or np.diff(x).min() > MIN_GAP:
            return x


def random_measure(rng: np.random.Generator, n: int, lo: float = -10.0, hi: float = 10.0,
                   mass: float = 1.0) -> DiscreteMeasure:
    w = rng.uniform(0.1, 1.0, n)
    return DiscreteMeasure(_positions(rng, n, lo, hi), mass * w / w.sum())


def random_ordered_pair(rng: np.random.Generator, n_mu: int, n_nu: int, lo: float = -10.0,
                        hi: float = 10.0, mass: float = 1.0) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """``mu <=_cx nu``: ``nu`` random, ``mu`` the barycentres of a random split of ``nu`` into ``n_mu`` groups.

    Every target atom is shared between one or two groups, so the kernel is
    a genuine martingale coupling and the pair is in convex order.
    """
    if n_mu > n_nu:
        raise ValueError("n_mu cannot exceed n_nu")
    while True:
        nu = random_measure(rng, n_nu, lo, hi, mass)
        K = np.zeros((n_nu, n_mu))
        owner = rng.permutation(np.resize(np.arange(n_mu), n_nu))
        for j in range(n_nu):
            K[j, owner[j]] = 1.0
            if rng.random() < 0.5:
                other = rng.integers(n_mu)
                split = rng.uniform(0.2, 0.8)
                K[j] *= split
                K[j, other] += 1.0 - split
        P = K * nu.weights[:, None]
        w = P.sum(axis=0)
        x = (P * nu.positions[:, None]).sum(axis=0) / w
        order = np.argsort(x)
        x, w = x[order], w[order]
        if n_mu < 2 or np.diff(x).min() > MIN_GAP:
            return DiscreteMeasure(x, w), nu


def random_pair(rng: np.random.Generator, n_mu: int, n_nu: int, lo: float = -10.0,
                hi: float = 10.0) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Independent probability measures, the second shifted to share the first's mean."""
    mu = random_measure(rng, n_mu, lo, hi)
    nu = random_measure(rng, n_nu, lo, hi)
    return mu, DiscreteMeasure(nu.positions + (mu.mean - nu.mean), nu.weights)


def random_block_pair(rng: np.random.Generator, blocks: int, max_atoms: int = 8,
                      common: bool = True) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Ordered pair assembled from blocks on disjoint intervals, optionally with shared atoms between them.

    Such pairs have several irreducible components and a nonzero common part.
    """
    edges = np.linspace(-10.0, 10.0, 2 * blocks + 2)
    mu_pos, mu_w, nu_pos, nu_w = [], [], [], []
    budget = max_atoms
    for b in range(blocks):
        lo, hi = edges[2 * b + 1], edges[2 * b + 2]
        n_nu = int(rng.integers(2, max(3, budget // (blocks - b)) + 1))
        n_nu = min(n_nu, budget - (blocks - b - 1) * 2)
        n_mu = int(rng.integers(1, n_nu))
        budget -= n_nu
        mu, nu = random_ordered_pair(rng, n_mu, n_nu, lo, hi, mass=rng.uniform(0.5, 1.5))
        mu_pos += list(mu.positions)
        mu_w += list(mu.weights)
        nu_pos += list(nu.positions)
        nu_w += list(nu.weights)
    if common:
        for b in range(blocks + 1):
            if rng.random() < 0.5:
                p = rng.uniform(edges[2 * b] + 0.1, edges[2 * b + 1] - 0.1)
                w = rng.uniform(0.2, 1.0)
                mu_pos.append(p)
                mu_w.append(w)
                nu_pos.append(p)
                nu_w.append(w)
    total = sum(mu_w)
    mu = DiscreteMeasure.from_atoms(mu_pos, np.array(mu_w) / total)
    nu = DiscreteMeasure.from_atoms(nu_pos, np.array(nu_w) / total)
    return mu, nu


def random_submeasure(rng: np.random.Generator, m: DiscreteMeasure) -> DiscreteMeasure:
    """Random nonzero atomwise sub-measure of ``m``."""
    while True:
        frac = rng.uniform(0.0, 1.0, len(m)) * (rng.random(len(m)) < 0.8)
        if frac.max() > 0.05:
            keep = frac > 0.05
            return DiscreteMeasure(m.positions[keep], m.weights[keep] * frac[keep])
