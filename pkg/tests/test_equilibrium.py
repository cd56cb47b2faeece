import numpy as np
import pytest

from wlanfair.equilibrium import ConvergenceError, collision_probs, solve_equilibrium, station_states
from wlanfair.fairness import invert_w0
from wlanfair.params import Scenario, StationConfig, scenario_a, scenario_b

from conftest import random_scenario


def test_scenario_a_frozen():
    eq = solve_equilibrium(scenario_a())
    np.testing.assert_allclose(eq.tau, [0.04649479, 0.04649479, 0.04464861], atol=1e-8)
    np.testing.assert_allclose(eq.throughput, [651942.30213757, 651942.30213757, 624845.75067868], rtol=1e-8)
    assert eq.aggregate == pytest.approx(1.89e6, rel=0.15)
    assert eq.residual <= 1e-10


def test_scenario_b_frozen():
    eq = solve_equilibrium(scenario_b())
    assert eq.aggregate == pytest.approx(2221415.2084144154, rel=1e-8)


def test_saturated_single_station_closed_form():
    sc = Scenario((StationConfig(1, 1e6, 11e6),))
    eq = solve_equilibrium(sc)
    # no collisions, empty-queue mass negligible: tau = 2 / (W0 + 1)
    assert eq.tau[0] == pytest.approx(2 / 33, rel=1e-3)
    assert eq.throughput[0] == pytest.approx(8 * 1028 / (1324e-6 + 15.5 * 20e-6), rel=1e-3)


def test_w0_one_starts_inside_domain():
    sc = Scenario((StationConfig(1, 500, 11e6, w0=1), StationConfig(2, 500, 11e6, w0=1)))
    eq = solve_equilibrium(sc)
    assert np.all((eq.tau > 0) & (eq.tau < 1))


def test_fixed_point_property(rng):
    for _ in range(10):
        sc = random_scenario(rng)
        eq = solve_equilibrium(sc)
        again = np.array([s.tau for s in station_states(eq.tau, sc)])
        np.testing.assert_allclose(again, eq.tau, atol=1e-10)


def test_round_trip_w0(rng):
    for _ in range(10):
        sc = random_scenario(rng, w0_int=False)
        eq = solve_equilibrium(sc)
        w0 = invert_w0(eq.tau, sc)
        np.testing.assert_allclose(w0, [st.w0 for st in sc.stations], rtol=1e-4)


def test_collision_probs():
    np.testing.assert_allclose(collision_probs([0.1, 0.2]), [0.2, 0.1])


def test_nonconvergence_reported():
    with pytest.raises(ConvergenceError) as exc:
        solve_equilibrium(scenario_a(), max_iter=2)
    assert exc.value.iterations == 2


def test_bad_damping():
    with pytest.raises(ValueError):
        solve_equilibrium(scenario_a(), damping=0)
