import numpy as np
import pytest
from hypothesis import given, strategies as st

from martcurtain.costs import (CostError, Grid, LeftCurtainProbe, OffGridError, PowerSpread, SeparableBound, Summed,
                               check_integrable_bound, cost_from_json, evaluate, probe_family)
from martcurtain.measures import DiscreteMeasure

reals = st.floats(-100, 100)


def test_probe_values():
    c = LeftCurtainProbe(0.0, 0.0)
    assert evaluate(c, 0.0, 3.0) == 3.0
    assert evaluate(c, 1.0, 3.0) == 0.0


def test_power_spread():
    assert evaluate(PowerSpread(2.0), 1.0, 4.0) == pytest.approx(9.0)
    with pytest.raises(CostError):
        PowerSpread(0.0)


def test_grid_lookup():
    g = Grid([0.0, 1.0], [-1.0, 1.0], [[1.0, 2.0], [3.0, 4.0]])
    assert g.matrix([1.0], [-1.0, 1.0]).tolist() == [[3.0, 4.0]]
    with pytest.raises(OffGridError):
        g(0.5, 1.0)


def test_sum_and_separable():
    s = Summed((LeftCurtainProbe(0.0, 0.0), PowerSpread(1.0)))
    assert s(0.0, 2.0) == pytest.approx(4.0)
    sb = SeparableBound([0.0], [1.0, 2.0], [1.0], [0.5, 0.25])
    assert sb.matrix([0.0], [1.0, 2.0]).tolist() == [[1.5, 1.25]]


@pytest.mark.parametrize("c", [LeftCurtainProbe(0.5, -1.0), PowerSpread(1.5),
                               Grid([0.0], [1.0, 2.0], [[0.5, 1.5]]),
                               Summed((LeftCurtainProbe(0.0, 1.0), PowerSpread(2.0)))])
def test_json_round_trip(c):
    back = cost_from_json(c.to_json())
    xs, ys = [0.0], [1.0, 2.0]
    assert np.array_equal(back.matrix(xs, ys), c.matrix(xs, ys))


def test_unknown_cost_type():
    with pytest.raises(CostError):
        cost_from_json({"type": "banana"})


@given(reals, reals, reals, reals, st.floats(0.1, 4))
def test_nonnegative(x, y, s, t, p):
    assert evaluate(LeftCurtainProbe(s, t), x, y) >= 0
    assert evaluate(PowerSpread(p), x, y) >= 0


def test_probe_family_size():
    assert len(probe_family([0.0, 1.0], [-1.0, 0.0, 2.0])) == 6


class TestIntegrableBound:
    def test_probe_row_max(self):
        mu = DiscreteMeasure([-1.0, 1.0], [0.5, 0.5])
        nu = DiscreteMeasure([-2.0, 2.0], [0.5, 0.5])
        b = check_integrable_bound(LeftCurtainProbe(0.0, 0.0), mu, nu)
        assert b.c1.tolist() == [2.0, 0.0]
        assert np.all(b.c2 == 0.0)

    def test_power(self):
        b = check_integrable_bound(PowerSpread(1.0), DiscreteMeasure.dirac(0.0), DiscreteMeasure([-1.0, 1.0], [0.5, 0.5]))
        assert b.c1.tolist() == [1.0]

    def test_grid_row_max(self):
        g = Grid([0.0, 1.0], [-1.0, 1.0], [[1.0, 2.0], [5.0, 4.0]])
        b = check_integrable_bound(g, DiscreteMeasure([0.0, 1.0], [0.5, 0.5]), DiscreteMeasure([-1.0, 1.0], [0.5, 0.5]))
        assert b.c1.tolist() == [2.0, 5.0]
