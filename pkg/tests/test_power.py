import dataclasses

import numpy as np
import pytest

from app.markov import LatencyBreakdown
from app.scenario import PlacedScenario, Scenario, place_nodes
from app.power import PowerParams, link_rate, mean_power
from app.spectrum import ChannelProcess
from app.topology import form_topology

LATENCY = LatencyBreakdown(tau_o=0.2, tau_p=0.05, tau_a=0.2)


@pytest.fixture
def placed(placed_factory):
    return placed_factory([[1, 1], [4, 5]], [[2, 2]])


@pytest.fixture
def topology(placed):
    return form_topology(placed, [ChannelProcess(0, lambda_p=1.0, mu_p=2.0)])


def test_zero_traffic(placed, topology):
    power = mean_power(placed, topology, LATENCY, PowerParams(message_rate=0.0))
    assert power.p_tx_mean == 0.0
    assert power.p_compute_mean == 0.0
    assert power.p_storage_mean == 0.0


def test_linear_in_message_rate(placed, topology):
    single = mean_power(placed, topology, LATENCY, PowerParams(message_rate=0.01))
    double = mean_power(placed, topology, LATENCY, PowerParams(message_rate=0.02))
    assert double.p_tx_mean == pytest.approx(2 * single.p_tx_mean)
    assert double.p_compute_mean == pytest.approx(2 * single.p_compute_mean)


def test_switching_is_free(placed, topology):
    power = mean_power(placed, topology, LATENCY)
    assert power.p_switching_mean == 0.0
    assert power.to_dict()['p_switching'] == 0.0
    assert power.p_total_mean == pytest.approx(power.p_tx_mean + power.p_compute_mean + power.p_storage_mean)


def test_overloaded_duty_is_capped(placed, topology):
    params = PowerParams(message_rate=1e6)
    power = mean_power(placed, topology, LATENCY, params)
    assert power.overloaded == (0, 1)
    assert power.p_tx_mean == pytest.approx(params.p_tx)


def test_tx_power_never_exceeds_radio_power(placed, topology):
    for rate in (1e-4, 1e-2, 1.0, 1e3):
        assert mean_power(placed, topology, LATENCY, PowerParams(message_rate=rate)).p_tx_mean <= 0.75


def test_storage_follows_latency_and_capacity(placed, topology):
    params = PowerParams(message_rate=0.5, p_storage_per_unit=1.0)
    slow = LatencyBreakdown(tau_o=2.0, tau_p=0.0, tau_a=0.0)
    power = mean_power(placed, topology, slow, params)
    assert power.p_storage_mean == pytest.approx(1.0 * 0.5 * 2.0)

    tiny = dataclasses.replace(placed.scenario.tap_profiles[0], storage_capacity=0.25)
    capped_scenario = dataclasses.replace(placed.scenario, tap_profiles=(tiny,))
    capped = dataclasses.replace(placed, scenario=capped_scenario)
    assert mean_power(capped, topology, slow, params).p_storage_mean == pytest.approx(0.25)


def test_link_rate_decreases_with_distance():
    params = PowerParams()
    rates = link_rate(np.array([0.0, 0.1, 1.0, 10.0]), params)
    assert rates[0] == rates[1]
    assert np.all(np.diff(rates[1:]) < 0)
    assert rates[2] == pytest.approx(np.log2(1001.0))


def test_no_assigned_objects(placed_factory):
    placed = placed_factory(np.zeros((0, 2)), [[2, 2]])
    topology = form_topology(placed, [ChannelProcess(0, lambda_p=1.0, mu_p=2.0)])
    assert mean_power(placed, topology, LATENCY).p_total_mean == 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        PowerParams(p_tx=-1.0)
    with pytest.raises(ValueError):
        PowerParams(snr0=0.0)


def _pulled_in(placed, topology, factor):
    objects = np.array(placed.object_positions)
    for i, (tap, _) in topology.assignments.items():
        anchor = placed.tap_positions[tap]
        objects[i] = anchor + factor * (objects[i] - anchor)
    return PlacedScenario(scenario=placed.scenario, object_positions=objects, tap_positions=placed.tap_positions)


@pytest.mark.parametrize('message_rate', [0.002, 5.0])
def test_power_never_grows_as_objects_move_closer(rng, message_rate):
    params = PowerParams(message_rate=message_rate)
    scenario = Scenario(n_o=8, n_tap=3, n_channels=2, n_users=0, area_side=200.0)
    for _ in range(20):
        placed = place_nodes(scenario, rng)
        topology = form_topology(placed, [ChannelProcess(b, lambda_p=1.0, mu_p=2.0) for b in range(2)])
        previous = mean_power(placed, topology, LATENCY, params).p_total_mean
        for factor in (0.8, 0.5, 0.2, 0.0):
            current = mean_power(_pulled_in(placed, topology, factor), topology, LATENCY, params).p_total_mean
            assert current <= previous + 1e-15
            previous = current
