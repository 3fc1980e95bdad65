import numpy as np
import pytest

from app.scenario import PlacedScenario, Scenario, TapProfile, TrafficParams, build_scenario
from app.scenario_config import ScenarioConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_config():
    """A quick scenario: 12 objects, 4 TAPs, 3 channels"""
    return ScenarioConfig.from_dict({
        'scenario': {'n_o': 12, 'n_tap': 4, 'n_channels': 3, 'n_users': 10, 'area_side': 50.0},
        'traffic': {'pu_distance_gain': 4.0},
        'experiment': {'reps': 20, 'messages': 200, 'monitor_window': 50.0},
    })


@pytest.fixture
def small_scenario(small_config):
    return build_scenario(small_config)


def make_placed(objects, taps, side=10.0, tap_profiles=(), traffic=None, **kwargs):
    """PlacedScenario at fixed positions"""
    objects = np.asarray(objects, dtype=float).reshape(-1, 2)
    taps = np.asarray(taps, dtype=float).reshape(-1, 2)
    scenario = Scenario(
        n_o=len(objects),
        n_tap=len(taps),
        n_channels=kwargs.pop('n_channels', 1),
        area_side=side,
        tap_profiles=tuple(tap_profiles),
        traffic=traffic or TrafficParams(),
        **kwargs,
    )
    return PlacedScenario(scenario=scenario, object_positions=objects, tap_positions=taps)


@pytest.fixture
def placed_factory():
    return make_placed


@pytest.fixture
def tap_profile():
    return TapProfile
