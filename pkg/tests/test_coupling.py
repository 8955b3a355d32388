import json

import numpy as np
import pytest

from martcurtain.costs import Grid, LeftCurtainProbe, PowerSpread
from martcurtain.coupling import (Coupling, DualTriple, MarginalError, NotConvexOrder, NotMartingale,
                                  check_martingale, disintegrate, i_functional, j_functional, mot_feasible, solve_mot,
                                  solve_mot_dual, transport_cost)
from martcurtain.instances import random_ordered_pair, random_pair
from martcurtain.measures import DiscreteMeasure, PiecewiseLinearConvex, check_convex_order, potential
from martcurtain.shadow import left_curtain

PM1 = DiscreteMeasure([-1.0, 1.0], [0.5, 0.5])
PM2 = DiscreteMeasure([-2.0, 2.0], [0.5, 0.5])
ABS = PiecewiseLinearConvex([0.0], [0.0], -1.0, 1.0)


class TestCoupling:
    def test_marginals_enforced(self, dilation):
        mu, nu = dilation
        with pytest.raises(MarginalError):
            Coupling.from_entries(mu, nu, [(0, 0, 0.25), (0, 1, 0.75)])

    def test_json_round_trip(self, spread):
        pi = left_curtain(*spread)
        back = Coupling.from_json(json.loads(json.dumps(pi.to_json())))
        assert back.distance(pi) == 0.0
        assert back.entries() == pi.entries()

    def test_martingale_pass(self, dilation):
        pi = Coupling.from_entries(*dilation, [(0, 0, 0.5), (0, 1, 0.5)])
        assert check_martingale(pi)

    def test_product_violations(self):
        res = check_martingale(Coupling.product(PM1, PM2))
        assert [i for i, _ in res.violations] == [0, 1]
        assert [abs(d) for _, d in res.violations] == pytest.approx([1.0, 1.0])

    def test_disintegrate(self, dilation, spread):
        pi = Coupling.from_entries(*dilation, [(0, 0, 0.5), (0, 1, 0.5)])
        assert disintegrate(pi, 0).allclose(dilation[1], 0.0)
        ident = Coupling.identity(PM1)
        assert disintegrate(ident, 1).allclose(DiscreteMeasure.dirac(1.0, 0.5), 0.0)
        lc = left_curtain(*spread)
        assert disintegrate(lc, 0).allclose(DiscreteMeasure([-2.0, 0.0], [0.25, 0.25]), 1e-12)

    def test_transport_cost(self, dilation, spread):
        pi = Coupling.from_entries(*dilation, [(0, 0, 0.5), (0, 1, 0.5)])
        assert transport_cost(pi, PowerSpread(2.0)) == pytest.approx(1.0)
        assert transport_cost(pi, Grid([0.0], [-1.0, 1.0], [[0.0, 0.0]])) == 0.0
        assert transport_cost(left_curtain(*spread), LeftCurtainProbe(-1.0, 0.0)) == pytest.approx(0.5)


class TestSolve:
    @pytest.mark.parametrize("c", [PowerSpread(1.0), LeftCurtainProbe(0.0, 0.0)])
    def test_singleton_feasible_set(self, dilation, c):
        sol = solve_mot(*dilation, c)
        assert sol.coupling.matrix == pytest.approx(np.array([[0.5, 0.5]]))

    @pytest.mark.parametrize("c", [PowerSpread(1.0), PowerSpread(3.0), LeftCurtainProbe(0.0, 0.0)])
    def test_two_by_two_unique(self, c):
        P = solve_mot(PM1, PM2, c).coupling.matrix
        assert P == pytest.approx(np.array([[3 / 8, 1 / 8], [1 / 8, 3 / 8]]), abs=1e-12)

    def test_infeasible(self):
        with pytest.raises(NotConvexOrder):
            solve_mot(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(1.0), PowerSpread(1.0))

    def test_zero_cost_dual(self, spread):
        d, value = solve_mot_dual(*spread, np.zeros((2, 3)))
        assert value == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(d.xi(), 0.0)

    def test_strong_duality(self, spread):
        sol = solve_mot(*spread, LeftCurtainProbe(0.0, 0.0))
        _, value = solve_mot_dual(*spread, LeftCurtainProbe(0.0, 0.0))
        assert value == pytest.approx(sol.value, abs=1e-8)

    def test_random_instances(self, rng):
        for _ in range(40):
            mu, nu = random_ordered_pair(rng, int(rng.integers(2, 6)), int(rng.integers(6, 9)))
            sol = solve_mot(mu, nu, PowerSpread(1.0))
            assert check_martingale(sol.coupling)
            assert sol.dual_value == pytest.approx(sol.value, abs=1e-8)
            # xi <= c everywhere for a dual-feasible triple
            assert (PowerSpread(1.0).matrix(mu.positions, nu.positions) - sol.duals.xi()).min() > -1e-8

    def test_order_iff_feasible(self, rng):
        for _ in range(60):
            mu, nu = random_pair(rng, int(rng.integers(2, 5)), int(rng.integers(3, 8)))
            assert bool(check_convex_order(mu, nu)) == mot_feasible(mu, nu)


class TestFunctionals:
    def test_affine_chi(self, spread):
        assert j_functional(PiecewiseLinearConvex.affine(3.0, -1.0), left_curtain(*spread)) == pytest.approx(0.0)

    def test_abs_chi(self, dilation):
        pi = Coupling.from_entries(*dilation, [(0, 0, 0.5), (0, 1, 0.5)])
        assert j_functional(ABS, pi) == pytest.approx(1.0)

    def test_identity_plan(self):
        assert j_functional(potential(PM1), Coupling.identity(PM1)) == pytest.approx(0.0)

    def test_rejects_non_martingale(self):
        with pytest.raises(NotMartingale):
            j_functional(ABS, Coupling.product(PM1, PM2))

    def test_j_equals_potential_gap(self, spread):
        # for chi = |. - t|, J is u_nu(t) - u_mu(t) whatever the plan
        mu, nu = spread
        pi = left_curtain(mu, nu)
        for t in (-1.5, 0.0, 0.7):
            chi = PiecewiseLinearConvex([t], [0.0], -1.0, 1.0)
            assert j_functional(chi, pi) == pytest.approx(potential(nu)(t) - potential(mu)(t))

    def test_i_cancellation(self, spread):
        mu, nu = spread
        pi = left_curtain(mu, nu)
        assert i_functional(np.zeros(2), np.zeros(3), ABS, mu, nu, pi) == pytest.approx(0.0, abs=1e-12)
        zero = PiecewiseLinearConvex.affine(0.0, 0.0)
        assert i_functional(np.ones(2), np.zeros(3), zero, mu, nu, pi) == pytest.approx(1.0)

    def test_i_matches_optimal_cost(self, spread):
        mu, nu = spread
        c = LeftCurtainProbe(0.0, 0.0)
        sol = solve_mot(mu, nu, c)
        zero = PiecewiseLinearConvex.affine(0.0, 0.0)
        d = sol.duals
        val = i_functional(d.phi, d.psi, zero, mu, nu, sol.coupling, delta=d.delta)
        assert val == pytest.approx(sol.value, abs=1e-8)

    def test_delta_invisible_under_martingale(self, spread):
        mu, nu = spread
        sol = solve_mot(mu, nu, LeftCurtainProbe(0.0, 0.0))
        d = sol.duals
        shifted = DualTriple(d.x, d.y, d.phi, d.psi, d.delta + np.array([3.0, -7.0]))
        assert shifted.integrate(sol.coupling) == pytest.approx(d.integrate(sol.coupling), abs=1e-12)
        assert i_functional(d.phi, d.psi, ABS, mu, nu, sol.coupling, delta=shifted.delta) == pytest.approx(sol.value)
