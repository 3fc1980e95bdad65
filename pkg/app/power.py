"""
Mean power drawn by transmission, computation and storage.
"""
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PowerParams:
    p_tx: float = 0.75                   # W while transmitting
    message_rate: float = 0.002          # messages per second per object
    e_compute_per_unit: float = 0.02     # J per payload unit pre-processed
    p_storage_per_unit: float = 0.001    # W per payload unit held
    path_loss_exponent: float = 3.0
    d0: float = 1.0                      # m
    snr0: float = 1000.0                 # SNR at d0
    d_min: float = 0.1                   # m

    def __post_init__(self):
        for name in ('p_tx', 'message_rate', 'e_compute_per_unit', 'p_storage_per_unit'):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ('path_loss_exponent', 'd0', 'snr0', 'd_min'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class PowerBreakdown:
    p_tx_mean: float
    p_compute_mean: float
    p_storage_mean: float
    p_switching_mean: float = 0.0
    overloaded: tuple = ()

    @property
    def p_total_mean(self):
        return self.p_tx_mean + self.p_compute_mean + self.p_storage_mean + self.p_switching_mean

    def to_dict(self):
        return {
            'p_tx': self.p_tx_mean,
            'p_compute': self.p_compute_mean,
            'p_storage': self.p_storage_mean,
            'p_switching': self.p_switching_mean,
            'p_total': self.p_total_mean,
        }


def link_rate(distance, params):
    """Spectral efficiency log2(1 + snr0 (d0/d)^alpha) on a unit-bandwidth channel"""
    d = np.maximum(np.asarray(distance, dtype=float), params.d_min)
    snr = params.snr0 * (params.d0 / d) ** params.path_loss_exponent
    return np.log2(1.0 + snr)


def mean_power(placed, topology, latency, params=None):
    """
    Mean per-object power for transmission, computation and storage.

    p_tx: p_tx * duty cycle, duty = message_rate * msg_size / rate(d) over the
        distance to the primary TAP. A duty cycle above 1 marks the object as
        overloaded; it counts as 1 in the mean.
    p_compute: e_compute_per_unit * msg_size * message_rate.
    p_storage: p_storage_per_unit * stored units, where stored units are
        msg_size * message_rate * tau_total (Little's law), at most the
        serving TAP's storage capacity.
    Channel switching draws no power.

    Args:
        placed: PlacedScenario
        topology: Topology
        latency: LatencyBreakdown
        params: PowerParams (defaults to the scenario's)

    Returns:
        PowerBreakdown
    """
    scenario = placed.scenario
    params = params or scenario.power
    objects = sorted(topology.assignments)
    if not objects:
        return PowerBreakdown(0.0, 0.0, 0.0)

    taps = np.array([topology.assignments[i][0] for i in objects])
    distances = np.hypot(*(placed.object_positions[objects] - placed.tap_positions[taps]).T)
    airtime = scenario.msg_size / link_rate(distances, params)
    duty = params.message_rate * airtime

    overloaded = tuple(int(i) for i in np.asarray(objects)[duty > 1.0])
    if overloaded:
        logger.warning("Duty cycle above 1 for %d object(s): %s", len(overloaded), list(overloaded))

    p_tx = params.p_tx * float(np.mean(np.minimum(duty, 1.0)))
    p_compute = params.e_compute_per_unit * scenario.msg_size * params.message_rate

    capacity = np.array([scenario.tap_profiles[j].storage_capacity for j in taps])
    stored = np.minimum(scenario.msg_size * params.message_rate * latency.tau_total, capacity)
    p_storage = params.p_storage_per_unit * float(np.mean(stored))

    return PowerBreakdown(
        p_tx_mean=p_tx,
        p_compute_mean=p_compute,
        p_storage_mean=p_storage,
        p_switching_mean=0.0,
        overloaded=overloaded,
    )
