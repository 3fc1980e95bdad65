"""
Static world of the edge network: objects, TAPs, channels, geometry, workload.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from app.errors import ScenarioError
from app.power import PowerParams

logger = logging.getLogger(__name__)


class Backhaul(str, Enum):
    WIRED = 'wired'
    WIRELESS = 'wireless'


@dataclass(frozen=True)
class TapProfile:
    """A user terminal sharing its connectivity"""
    backhaul: Backhaul = Backhaul.WIRED
    compute_capacity: float = 20.0
    storage_capacity: float = 100.0
    availability: float = 1.0
    incentive_weight: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.availability <= 1.0:
            raise ScenarioError('availability', f"must be in [0, 1], got {self.availability}")
        if self.compute_capacity <= 0:
            raise ScenarioError('compute_capacity', f"must be > 0, got {self.compute_capacity}")
        if self.storage_capacity < 0:
            raise ScenarioError('storage_capacity', f"must be >= 0, got {self.storage_capacity}")
        if self.incentive_weight < 0:
            raise ScenarioError('incentive_weight', f"must be >= 0, got {self.incentive_weight}")


@dataclass(frozen=True)
class TrafficParams:
    mu_s: float = 6.0
    lambda_p: float = 1.0
    mu_p: float = 2.0
    p_share: float = 0.5
    tau_p_per_unit: float = 0.05
    tau_a_base: float = 0.2
    tau_d2d: float = 0.05
    pu_distance_gain: float = 0.0

    def __post_init__(self):
        if self.mu_s <= 0:
            raise ScenarioError('mu_s', f"must be > 0, got {self.mu_s}")
        if self.lambda_p < 0:
            raise ScenarioError('lambda_p', f"must be >= 0, got {self.lambda_p}")
        if self.mu_p <= 0:
            raise ScenarioError('mu_p', f"must be > 0, got {self.mu_p}")
        if not 0.0 <= self.p_share <= 1.0:
            raise ScenarioError('p_share', f"must be in [0, 1], got {self.p_share}")
        for name in ('tau_p_per_unit', 'tau_a_base', 'tau_d2d', 'pu_distance_gain'):
            if getattr(self, name) < 0:
                raise ScenarioError(name, f"must be >= 0, got {getattr(self, name)}")
        if self.tau_d2d > self.tau_a_base:
            raise ScenarioError('tau_d2d', f"must not exceed tau_a_base ({self.tau_d2d} > {self.tau_a_base})")


@dataclass(frozen=True)
class Scenario:
    """
    Immutable description of one edge network.

    All channels have unit bandwidth; there is deliberately no per-channel
    bandwidth field.
    """
    n_o: int
    n_tap: int
    n_channels: int
    n_users: int = 40
    area_side: float = 50.0
    msg_size: float = 1.0
    slot_duration: float = 0.1
    tap_profiles: tuple = ()
    traffic: TrafficParams = field(default_factory=TrafficParams)
    power: PowerParams = field(default_factory=PowerParams)

    def __post_init__(self):
        _check_int('n_o', self.n_o, 0)
        _check_int('n_tap', self.n_tap, 1)
        _check_int('n_channels', self.n_channels, 1)
        _check_int('n_users', self.n_users, 0)
        if not self.area_side > 0:
            raise ScenarioError('area_side', f"must be > 0, got {self.area_side}")
        if self.msg_size < 0:
            raise ScenarioError('msg_size', f"must be >= 0, got {self.msg_size}")
        if not self.slot_duration > 0:
            raise ScenarioError('slot_duration', f"must be > 0, got {self.slot_duration}")
        if not self.tap_profiles:
            object.__setattr__(self, 'tap_profiles', tuple(TapProfile() for _ in range(self.n_tap)))
        else:
            object.__setattr__(self, 'tap_profiles', tuple(self.tap_profiles))
        if len(self.tap_profiles) != self.n_tap:
            raise ScenarioError('tap_profiles',
                                f"expected {self.n_tap} profiles, got {len(self.tap_profiles)}")

    @property
    def tap_availability(self):
        return np.array([tap.availability for tap in self.tap_profiles], dtype=float)


@dataclass(frozen=True, eq=False)
class PlacedScenario:
    scenario: Scenario
    object_positions: np.ndarray
    tap_positions: np.ndarray

    def __post_init__(self):
        objects = np.asarray(self.object_positions, dtype=float).reshape(-1, 2)
        taps = np.asarray(self.tap_positions, dtype=float).reshape(-1, 2)
        side = self.scenario.area_side
        if len(objects) != self.scenario.n_o:
            raise ScenarioError('object_positions', f"expected {self.scenario.n_o} positions, got {len(objects)}")
        if len(taps) != self.scenario.n_tap:
            raise ScenarioError('tap_positions', f"expected {self.scenario.n_tap} positions, got {len(taps)}")
        for name, points in (('object_positions', objects), ('tap_positions', taps)):
            if points.size and (points.min() < 0 or points.max() > side):
                raise ScenarioError(name, f"positions must lie inside [0, {side}]^2")
        objects.setflags(write=False)
        taps.setflags(write=False)
        object.__setattr__(self, 'object_positions', objects)
        object.__setattr__(self, 'tap_positions', taps)


def build_tap_profiles(n_tap, taps):
    """
    Generate TAP profiles from a [taps] config section.

    TAP j is wired when floor((j+1)*f) > floor(j*f) for wired fraction f, so
    each TAP keeps its profile whatever the total number of TAPs is.

    Args:
        n_tap: Number of TAPs
        taps: Dict with the [taps] keys

    Returns:
        tuple: TapProfile per TAP
    """
    fraction = taps['wired_fraction']
    if not 0.0 <= fraction <= 1.0:
        raise ScenarioError('wired_fraction', f"must be in [0, 1], got {fraction}")
    profiles = []
    for j in range(n_tap):
        wired = math.floor((j + 1) * fraction) > math.floor(j * fraction)
        profiles.append(TapProfile(
            backhaul=Backhaul.WIRED if wired else Backhaul.WIRELESS,
            compute_capacity=taps['compute_capacity'],
            storage_capacity=taps['storage_capacity'],
            availability=taps['wired_availability'] if wired else taps['wireless_availability'],
            incentive_weight=taps['incentive_weight'],
        ))
    return tuple(profiles)


def build_scenario(config):
    """
    Build a validated Scenario from a parsed config.

    Args:
        config: ScenarioConfig

    Returns:
        Scenario

    Raises:
        ScenarioError: Naming the first violated field
    """
    s = config.section('scenario')
    # Counts are checked first so a bad n_tap is reported before profile generation
    _check_int('n_o', s['n_o'], 0)
    _check_int('n_tap', s['n_tap'], 1)
    _check_int('n_channels', s['n_channels'], 1)
    _check_int('n_users', s['n_users'], 0)

    profiles = build_tap_profiles(s['n_tap'], config.section('taps'))
    traffic = TrafficParams(**config.section('traffic'))
    power = PowerParams(**config.section('power'))

    scenario = Scenario(
        n_o=s['n_o'],
        n_tap=s['n_tap'],
        n_channels=s['n_channels'],
        n_users=s['n_users'],
        area_side=s['area_side'],
        msg_size=s['msg_size'],
        slot_duration=s['slot_duration'],
        tap_profiles=profiles,
        traffic=traffic,
        power=power,
    )
    logger.debug("Built scenario n_o=%d n_tap=%d B=%d", scenario.n_o, scenario.n_tap, scenario.n_channels)
    return scenario


def place_nodes(scenario, rng):
    """
    Place objects and TAPs uniformly at random over the square region.

    Objects are drawn before TAPs, so under the same seed the first k TAPs of a
    larger placement coincide with a k-TAP placement.

    Args:
        scenario: Scenario
        rng: numpy.random.Generator

    Returns:
        PlacedScenario
    """
    side = scenario.area_side
    objects = rng.uniform(0.0, side, size=(scenario.n_o, 2))
    taps = rng.uniform(0.0, side, size=(scenario.n_tap, 2))
    return PlacedScenario(scenario=scenario, object_positions=objects, tap_positions=taps)


def distance_matrix(placed):
    """Euclidean object-to-TAP distances, shape (n_o, n_tap)"""
    diff = placed.object_positions[:, None, :] - placed.tap_positions[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def nearest_tap_distances(placed):
    """Distance from each object to its closest TAP"""
    if placed.scenario.n_o == 0:
        return np.zeros(0)
    return distance_matrix(placed).min(axis=1)


def _check_int(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ScenarioError(name, f"must be an integer, got {value!r}")
    if value < minimum:
        raise ScenarioError(name, f"must be >= {minimum}, got {value}")
