import dataclasses

import numpy as np
import pytest
from scipy import stats

from app.errors import ScenarioError
from app.scenario import (
    Backhaul,
    Scenario,
    build_scenario,
    build_tap_profiles,
    nearest_tap_distances,
    place_nodes,
)
from app.scenario_config import ScenarioConfig


def test_empty_world():
    scenario = build_scenario(ScenarioConfig.from_dict({'n_o': 0, 'n_tap': 1, 'n_channels': 1, 'n_users': 0}))
    assert scenario.n_o == 0
    placed = place_nodes(scenario, np.random.default_rng(1))
    assert placed.object_positions.shape == (0, 2)
    assert nearest_tap_distances(placed).size == 0


def test_cardinalities_kept():
    scenario = build_scenario(ScenarioConfig.from_dict({'n_o': 50, 'n_tap': 10, 'n_channels': 4, 'n_users': 40}))
    assert (scenario.n_o, scenario.n_tap, scenario.n_channels, scenario.n_users) == (50, 10, 4, 40)
    assert len(scenario.tap_profiles) == 10


def test_negative_tap_count_rejected():
    with pytest.raises(ScenarioError) as info:
        build_scenario(ScenarioConfig.from_dict({'n_tap': -3}))
    assert info.value.field == 'n_tap'


def test_no_bandwidth_field():
    names = {f.name for f in dataclasses.fields(Scenario)}
    assert not any('bandwidth' in name for name in names)


def test_tau_d2d_above_base_rejected():
    with pytest.raises(ScenarioError) as info:
        build_scenario(ScenarioConfig.from_dict({'tau_a_base': 0.1, 'tau_d2d': 0.2}))
    assert info.value.field == 'tau_d2d'


def test_wired_profiles_do_not_depend_on_count():
    taps = ScenarioConfig.from_dict({'wired_fraction': 0.3}).section('taps')
    short = build_tap_profiles(5, taps)
    long = build_tap_profiles(20, taps)
    assert short == long[:5]
    wired = sum(1 for p in long if p.backhaul is Backhaul.WIRED)
    assert wired == 6
    assert all(p.availability == 0.95 for p in long if p.backhaul is Backhaul.WIRED)


def test_placement_is_reproducible():
    scenario = Scenario(n_o=0, n_tap=1, n_channels=1, area_side=100.0)
    first = place_nodes(scenario, np.random.default_rng(42))
    second = place_nodes(scenario, np.random.default_rng(42))
    assert np.array_equal(first.tap_positions, second.tap_positions)
    assert np.all((first.tap_positions >= 0) & (first.tap_positions <= 100.0))


def test_placement_prefix_is_common():
    small = Scenario(n_o=5, n_tap=3, n_channels=1)
    large = Scenario(n_o=5, n_tap=8, n_channels=1)
    a = place_nodes(small, np.random.default_rng(7))
    b = place_nodes(large, np.random.default_rng(7))
    assert np.array_equal(a.object_positions, b.object_positions)
    assert np.array_equal(a.tap_positions, b.tap_positions[:3])


def test_positions_are_read_only():
    placed = place_nodes(Scenario(n_o=2, n_tap=1, n_channels=1), np.random.default_rng(0))
    with pytest.raises(ValueError):
        placed.object_positions[0, 0] = 1.0


def test_nearest_distance_shrinks_like_inverse_sqrt():
    side = 100.0
    rng = np.random.default_rng(99)
    means = []
    for n_tap in (5, 10, 20, 40):
        scenario = Scenario(n_o=1, n_tap=n_tap, n_channels=1, area_side=side)
        samples = [nearest_tap_distances(place_nodes(scenario, rng))[0] for _ in range(10_000)]
        means.append((n_tap, float(np.mean(samples)), float(np.std(samples) / np.sqrt(len(samples)))))

    assert all(a[1] > b[1] for a, b in zip(means, means[1:]))
    # Fit c in mean = c * side / sqrt(n_tap); edge effects keep the residuals small
    xs = np.array([side / np.sqrt(n) for n, _, _ in means])
    ys = np.array([m for _, m, _ in means])
    c = float(xs @ ys / (xs @ xs))
    assert 0.4 < c < 0.7
    assert np.all(np.abs(ys - c * xs) / ys < 0.1)


def test_more_taps_stochastically_shorter_distance():
    rng = np.random.default_rng(7)

    def sample(n_tap):
        scenario = Scenario(n_o=1, n_tap=n_tap, n_channels=1, area_side=50.0)
        return np.array([nearest_tap_distances(place_nodes(scenario, rng))[0] for _ in range(10_000)])

    few, many = sample(5), sample(20)
    # Empirical CDF with 5 TAPs lies below the one with 20
    result = stats.ks_2samp(few, many, alternative='less')
    assert result.pvalue < 0.01
