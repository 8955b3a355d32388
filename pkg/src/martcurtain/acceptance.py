"""Randomised acceptance criteria, shared by ``verify-suite`` and the test-suite.

Each ``criterion_N`` takes a seed and returns a :class:`CriterionResult`;
instance counts and tolerances are fixed here.
"""

from __future__ import annotations

import dataclasses
import logging
import time

import numpy as np

from .costs import Grid, LeftCurtainProbe, PowerSpread, Summed
from .coupling import i_functional, j_functional, mot_feasible, solve_mot, transport_cost
from .instances import random_block_pair, random_measure, random_ordered_pair, random_pair, random_submeasure
from .measures import (DiscreteMeasure, PiecewiseLinearConvex, atomwise_distance, check_convex_order,
                       check_extended_convex_order)
from .shadow import left_curtain, min_feasible_call, shadow_atom, shadow_atom_oracle, shadow_measure
from .verify import (SupportSet, check_finite_optimality, check_left_monotone, check_partial_sum_convex_order,
                     competitor, irreducible_components, loses_on_some_probe, probe_grid, verify_dual_splitting)

log = logging.getLogger(__name__)


@dataclasses.dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.name} ({self.seconds:.1f}s) {self.detail}"

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def _timed(number: int, name: str):
    def wrap(fn):
        def run(seed: int = 0) -> CriterionResult:
            t0 = time.perf_counter()
            passed, detail = fn(np.random.default_rng([number, seed]), seed)
            res = CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t0)
            log.info(res.line())
            return res
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


def _ordered(rng, max_mu: int = 8, max_nu: int = 8, min_mu: int = 2, min_nu: int = 3):
    n_nu = int(rng.integers(min_nu, max_nu + 1))
    n_mu = int(rng.integers(min_mu, min(max_mu, n_nu) + 1))
    return random_ordered_pair(rng, n_mu, n_nu)


def _random_grid_cost(rng, mu: DiscreteMeasure, nu: DiscreteMeasure) -> Grid:
    return Grid(mu.positions, nu.positions, rng.uniform(0.0, 10.0, (len(mu), len(nu))))


def _random_convex(rng) -> PiecewiseLinearConvex:
    knots = np.sort(rng.uniform(-10.0, 10.0, int(rng.integers(1, 5))))
    a = rng.uniform(0.0, 2.0, len(knots))
    slope, icpt = rng.normal(size=2)

    def f(x):
        return np.abs(np.asarray(x)[..., None] - knots) @ a + slope * np.asarray(x) + icpt

    return PiecewiseLinearConvex.from_function(f, knots, slope - a.sum(), slope + a.sum())


@_timed(1, "convex order <=> martingale LP feasible")
def criterion_1(rng, seed):
    """200 random pairs with 3-8 atoms per side; convex-order verdict must match LP feasibility."""
    agree = 0
    ordered = 0
    mismatches = []
    for k in range(200):
        n_mu, n_nu = int(rng.integers(3, 9)), int(rng.integers(3, 9))
        kind = k % 4
        if kind in (0, 1):
            n_mu = min(n_mu, n_nu)
            mu, nu = random_ordered_pair(rng, n_mu, n_nu)
        elif kind == 2:
            n_mu = min(n_mu, n_nu)
            nu, mu = random_ordered_pair(rng, n_mu, n_nu)
        else:
            mu, nu = random_pair(rng, n_mu, n_nu)
        cx = bool(check_convex_order(mu, nu))
        feas = mot_feasible(mu, nu)
        ordered += cx
        if cx == feas:
            agree += 1
        else:
            mismatches.append(k)
    return agree == 200, {"agree": agree, "total": 200, "ordered": ordered, "mismatches": mismatches[:5]}


@_timed(2, "shadow of an atom equals the LP oracle and is call-minimal")
def criterion_2(rng, seed):
    """100 random (nu, x, m) with m*delta_x <=_E nu."""
    worst_dist = 0.0
    worst_call = -np.inf
    n_ok = 0
    for _ in range(100):
        nu = random_measure(rng, int(rng.integers(3, 9)))
        m = rng.uniform(0.05, 0.95) * nu.mass
        cum = np.concatenate([[0.0], np.cumsum(nu.weights)])
        lo_mean = np.clip(np.minimum(cum[1:], m) - cum[:-1], 0, None) @ nu.positions / m
        q = nu.mass - m
        hi_mean = np.clip(cum[1:] - np.maximum(cum[:-1], q), 0, None) @ nu.positions / m
        x = rng.uniform(lo_mean, hi_mean)
        assert check_extended_convex_order(DiscreteMeasure.dirac(x, m), nu)
        theta = shadow_atom(nu, x, m)
        oracle = shadow_atom_oracle(nu, x, m)
        d = atomwise_distance(theta, oracle)
        excess = max(theta.call(t) - min_feasible_call(nu, x, m, t) for t in nu.positions)
        worst_dist = max(worst_dist, d)
        worst_call = max(worst_call, excess)
        n_ok += d <= 1e-8 and excess <= 1e-8
    return n_ok == 100, {"ok": n_ok, "max_atomwise_distance": worst_dist, "max_call_excess": worst_call}


@_timed(3, "shadow_measure is independent of processing order")
def criterion_3(rng, seed):
    """50 random (mu, nu) with mu <=_E nu."""
    worst = 0.0
    for _ in range(50):
        mu_full, nu = _ordered(rng)
        mu = random_submeasure(rng, mu_full)
        base = shadow_measure(nu, mu, "ascending")
        for order in ("descending", "random"):
            other = shadow_measure(nu, mu, order, rng=rng)
            worst = max(worst, atomwise_distance(base, other))
    return worst <= 1e-8, {"max_atomwise_distance": worst}


def _lc_instances(seed: int, count: int = 50):
    """Instances shared by criteria 4 and 5."""
    rng = np.random.default_rng([45, seed])
    return [_ordered(rng) for _ in range(count)]


@_timed(4, "left-curtain minimises every probe cost c_{s,t}")
def criterion_4(rng, seed):
    """50 random ordered pairs (<= 8 atoms); every probe on the atom grid."""
    worst = -np.inf
    probes_checked = 0
    for mu, nu in _lc_instances(seed):
        lc = left_curtain(mu, nu)
        for c in probe_grid(mu, nu):
            opt = solve_mot(mu, nu, c).value
            worst = max(worst, transport_cost(lc, c) - opt)
            probes_checked += 1
    return worst <= 1e-8, {"probes": probes_checked, "max_excess_over_optimum": worst}


@_timed(5, "uniqueness: aggregate-probe optimum is the left-curtain; other vertices fail")
def criterion_5(rng, seed):
    """Same instance generator as criterion 4; 20 random vertices per instance."""
    worst = 0.0
    tested = 0
    bad_vertices = 0
    for mu, nu in _lc_instances(seed):
        lc = left_curtain(mu, nu)
        probes = probe_grid(mu, nu)
        agg = solve_mot(mu, nu, Summed(tuple(probes))).coupling
        worst = max(worst, lc.distance(agg))
        for _ in range(20):
            vert = solve_mot(mu, nu, _random_grid_cost(rng, mu, nu)).coupling
            if vert.distance(lc) <= 1e-4:
                continue
            tested += 1
            not_mono = not check_left_monotone(SupportSet.from_coupling(vert))
            loses = loses_on_some_probe(vert, lc, probes, 1e-9) is not None
            if not (not_mono or loses):
                bad_vertices += 1
    return worst <= 1e-7 and bad_vertices == 0, {
        "max_distance_to_left_curtain": worst, "vertices_tested": tested, "vertices_not_refuted": bad_vertices}


@_timed(6, "monotonicity principle: optimal <=> finitely optimal (k=3)")
def criterion_6(rng, seed):
    """30 instances with |y-x| and 10 with random grid costs; optimisers pass, worse vertices are refuted."""
    optimal_fail = 0
    refuted = 0
    not_refuted = 0
    for k in range(40):
        mu, nu = _ordered(rng)
        c = PowerSpread(1.0) if k < 30 else _random_grid_cost(rng, mu, nu)
        sol = solve_mot(mu, nu, c)
        if not check_finite_optimality(SupportSet.from_coupling(sol.coupling), c, k=3):
            optimal_fail += 1
        for _ in range(5):
            vert = solve_mot(mu, nu, _random_grid_cost(rng, mu, nu)).coupling
            if transport_cost(vert, c) - sol.value <= 1e-6:
                continue
            res = check_finite_optimality(SupportSet.from_coupling(vert), c, k=3)
            if not res and res.witness.gap < 0:
                refuted += 1
            else:
                not_refuted += 1
    return optimal_fail == 0 and not_refuted == 0, {
        "optimisers_failing": optimal_fail, "suboptimal_refuted": refuted, "suboptimal_not_refuted": not_refuted}


@_timed(7, "left-monotone supports are c_{s,t}-finitely optimal; partial sums in convex order")
def criterion_7(rng, seed):
    """30 left-curtain supports; every atom-grid probe; LP pairs plus random competitors."""
    fails = 0
    partial_fails = 0
    pairs_checked = 0
    for _ in range(30):
        mu, nu = _ordered(rng, max_mu=4, max_nu=6)
        gamma = SupportSet.from_coupling(left_curtain(mu, nu))
        assert check_left_monotone(gamma)
        for c in probe_grid(mu, nu):
            res = check_finite_optimality(gamma, c, k=3, collect=True)
            fails += not res
            for pair in res.pairs:
                alternatives = [pair.alpha_prime,
                                competitor(pair.alpha, _random_grid_cost(rng, pair.alpha.mu, pair.alpha.nu))]
                for alt in alternatives:
                    pairs_checked += 1
                    partial_fails += not check_partial_sum_convex_order(pair.alpha, alt)
    return fails == 0 and partial_fails == 0, {
        "finite_optimality_failures": fails, "competitor_pairs": pairs_checked, "partial_sum_failures": partial_fails}


@_timed(8, "J is coupling-independent; I(phi+psi) equals the xi integral")
def criterion_8(rng, seed):
    """50 instances, 10 random convex chi each, two optimisers of different costs."""
    worst_j = 0.0
    worst_i = 0.0
    for _ in range(50):
        mu, nu = _ordered(rng)
        sol_a = solve_mot(mu, nu, _random_grid_cost(rng, mu, nu))
        pi_b = solve_mot(mu, nu, _random_grid_cost(rng, mu, nu)).coupling
        d = sol_a.duals
        for _ in range(10):
            chi = _random_convex(rng)
            worst_j = max(worst_j, abs(j_functional(chi, sol_a.coupling) - j_functional(chi, pi_b)))
            for pi in (sol_a.coupling, pi_b):
                val = i_functional(d.phi, d.psi, chi, mu, nu, pi)
                worst_i = max(worst_i, abs(val - d.integrate(pi)))
    return worst_j <= 1e-8 and worst_i <= 1e-8, {"max_J_difference": worst_j, "max_I_minus_xi_integral": worst_i}


@_timed(9, "irreducible decomposition reconstitutes marginals; no leakage")
def criterion_9(rng, seed):
    """50 ordered pairs, half built from disjoint blocks so several components occur."""
    worst_rec = 0.0
    worst_leak = 0.0
    cx_fail = 0
    components = 0
    for k in range(50):
        if k % 2:
            mu, nu = _ordered(rng)
        else:
            mu, nu = random_block_pair(rng, int(rng.integers(2, 4)))
        dec = irreducible_components(mu, nu)
        components += len(dec.components)
        worst_rec = max(worst_rec, *dec.reconstitution_error(mu, nu))
        cx_fail += sum(not check_convex_order(c.mu, c.nu) for c in dec.components)
        for c in (PowerSpread(1.0), _random_grid_cost(rng, mu, nu)):
            worst_leak = max(worst_leak, dec.leakage(solve_mot(mu, nu, c).coupling))
    return worst_rec <= 1e-9 and worst_leak <= 1e-9 and cx_fail == 0, {
        "components": components, "max_reconstitution_error": worst_rec,
        "max_leakage": worst_leak, "components_not_ordered": cx_fail}


@_timed(10, "dual splitting: xi <= c with equality on the optimiser; zero duality gap")
def criterion_10(rng, seed):
    """30 instances with a mix of cost families."""
    fails = 0
    worst_gap = 0.0
    for k in range(30):
        mu, nu = _ordered(rng)
        c = [PowerSpread(1.0), PowerSpread(2.0), _random_grid_cost(rng, mu, nu),
             LeftCurtainProbe(float(rng.choice(mu.positions)), float(rng.choice(nu.positions)))][k % 4]
        sol = solve_mot(mu, nu, c)
        worst_gap = max(worst_gap, abs(sol.value - sol.dual_value))
        fails += not verify_dual_splitting(sol.coupling, c, sol.duals)
    return fails == 0 and worst_gap <= 1e-8, {"splitting_failures": fails, "max_duality_gap": worst_gap}


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_suite(seed: int = 0, only=None) -> list[CriterionResult]:
    chosen = CRITERIA if not only else [CRITERIA[n - 1] for n in only]
    return [crit(seed) for crit in chosen]
