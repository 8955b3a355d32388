import numpy as np
import pytest

from martcurtain.coupling import Coupling, NotConvexOrder, check_martingale
from martcurtain.instances import random_measure, random_ordered_pair, random_submeasure
from martcurtain.measures import DiscreteMeasure, atomwise_distance, check_convex_order, check_extended_convex_order
from martcurtain.shadow import (ExtendedOrderViolated, left_curtain, min_feasible_call, shadow_atom,
                                shadow_atom_oracle, shadow_measure)

U3 = DiscreteMeasure.uniform([-1.0, 0.0, 1.0])


def _window_mean(nu, q, m):
    """Mean of the quantile slice of nu between levels q and q + m."""
    cum = np.concatenate([[0.0], np.cumsum(nu.weights)])
    w = np.clip(np.minimum(cum[1:], q + m) - np.maximum(cum[:-1], q), 0, None)
    return float(w @ nu.positions / w.sum())


class TestShadowAtom:
    def test_full_mass_is_nu(self, spread):
        nu = spread[1]
        assert shadow_atom(nu, nu.mean, nu.mass).allclose(nu, 0.0)

    def test_uniform_half(self):
        theta = shadow_atom(U3, 0.0, 0.5)
        assert theta.allclose(DiscreteMeasure([-1.0, 0.0, 1.0], [1 / 12, 1 / 3, 1 / 12]), 1e-12)

    def test_left_atom_of_spread(self, spread):
        assert shadow_atom(spread[1], -1.0, 0.5).allclose(DiscreteMeasure([-2.0, 0.0], [0.25, 0.25]), 1e-12)

    def test_precondition(self):
        with pytest.raises(ExtendedOrderViolated):
            shadow_atom(U3, 2.0, 0.1)
        with pytest.raises(ExtendedOrderViolated):
            shadow_atom(U3, 0.0, 2.0)

    def test_matches_oracle(self, rng):
        for _ in range(40):
            nu = random_measure(rng, int(rng.integers(3, 9)))
            m = rng.uniform(0.05, 0.95) * nu.mass
            x = _window_mean(nu, rng.uniform(0, nu.mass - m), m)
            theta = shadow_atom(nu, x, m)
            assert atomwise_distance(theta, shadow_atom_oracle(nu, x, m)) < 1e-8
            for t in nu.positions:
                assert theta.call(t) <= min_feasible_call(nu, x, m, t) + 1e-8

    def test_properties_random(self, rng):
        for _ in range(40):
            nu = random_measure(rng, int(rng.integers(3, 9)))
            m = rng.uniform(0.05, 0.9)
            x = _window_mean(nu, rng.uniform(0, nu.mass - m), m)
            theta = shadow_atom(nu, x, m)
            # dominated by nu, mass m, mean x
            assert np.all(theta.weights <= np.array([nu.weight_at(p) for p in theta.positions]) + 1e-12)
            assert theta.mass == pytest.approx(m)
            assert theta.mean == pytest.approx(x)
            assert check_convex_order(DiscreteMeasure.dirac(x, m), theta)


class TestShadowMeasure:
    def test_identity(self, spread):
        nu = spread[1]
        assert shadow_measure(nu, nu).allclose(nu, 1e-12)

    def test_single_atom(self, spread):
        assert shadow_measure(spread[1], DiscreteMeasure.dirac(-1.0, 0.5)).allclose(shadow_atom(spread[1], -1.0, 0.5), 1e-12)

    def test_spread_is_nu(self, spread):
        mu, nu = spread
        assert shadow_measure(nu, mu).allclose(nu, 1e-12)

    def test_order_independent(self, rng):
        for _ in range(25):
            mu, nu = random_ordered_pair(rng, int(rng.integers(2, 6)), int(rng.integers(6, 9)))
            sub = random_submeasure(rng, mu)
            if not check_extended_convex_order(sub, nu):
                continue
            ref = shadow_measure(nu, sub, "ascending")
            for order in ("descending", "random"):
                assert atomwise_distance(ref, shadow_measure(nu, sub, order, rng)) < 1e-8

    def test_prefix_reported(self):
        nu = DiscreteMeasure([-1.0, 1.0], [0.5, 0.5])
        mu = DiscreteMeasure([0.0, 0.9], [0.5, 0.5])
        with pytest.raises(ExtendedOrderViolated) as err:
            shadow_measure(nu, mu)
        assert err.value.prefix is not None


class TestLeftCurtain:
    def test_dilation(self, dilation):
        assert left_curtain(*dilation).matrix == pytest.approx(np.array([[0.5, 0.5]]))

    def test_spread(self, spread):
        pi = left_curtain(*spread)
        assert sorted((round(x, 12), round(y, 12), round(w, 12)) for (x, y), (_, _, w) in
                      zip(pi.support(), pi.entries())) == [(-1, -2, 0.25), (-1, 0, 0.25), (1, 0, 0.25), (1, 2, 0.25)]

    def test_identity(self, spread):
        nu = spread[1]
        assert left_curtain(nu, nu).distance(Coupling.identity(nu)) < 1e-12

    def test_not_ordered(self):
        with pytest.raises(NotConvexOrder):
            left_curtain(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(1.0))

    def test_random_are_martingale(self, rng):
        for _ in range(40):
            mu, nu = random_ordered_pair(rng, int(rng.integers(1, 7)), int(rng.integers(7, 9)))
            pi = left_curtain(mu, nu)
            assert check_martingale(pi)
            # each left tail is sent to its shadow
            for k in range(1, len(mu) + 1):
                tail = DiscreteMeasure(mu.positions[:k], mu.weights[:k])
                assert atomwise_distance(pi.row_target_marginal(range(k)), shadow_measure(nu, tail)) < 1e-8
