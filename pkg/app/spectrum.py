"""
Primary-user activity on the cognitive channels.

Each channel alternates between idle periods, exponential with rate lambda_p
(PU arrivals), and busy periods, exponential with rate mu_p (PU departures).
TAPs monitor those periods to estimate lambda_p and rank channels by how
likely they are to stay idle through a transmission.
"""
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


class LinkScale(Mapping):
    """Read-only (object, tap) -> PU rate multiplier, backed by an array"""

    def __init__(self, values):
        array = np.array(values, dtype=float)
        if array.ndim != 2:
            raise ValueError(f"Link scale must be a 2-D array, got shape {array.shape}")
        if array.size and array.min() < 0:
            raise ValueError("Link scale multipliers must be >= 0")
        array.setflags(write=False)
        self.array = array

    def __getitem__(self, link):
        i, j = link
        if not (0 <= i < self.array.shape[0] and 0 <= j < self.array.shape[1]):
            raise KeyError(link)
        return float(self.array[i, j])

    def __iter__(self):
        n_o, n_tap = self.array.shape
        return ((i, j) for i in range(n_o) for j in range(n_tap))

    def __len__(self):
        return self.array.size

    def __repr__(self):
        return f'<LinkScale shape={self.array.shape}>'

    @classmethod
    def from_distances(cls, distances, area_side, gain):
        """Multiplier 1 + gain * d / area_side: far links see more PU activity"""
        return cls(1.0 + gain * np.asarray(distances, dtype=float) / area_side)


@dataclass(frozen=True)
class ChannelProcess:
    channel_id: int
    lambda_p: float
    mu_p: float
    per_link_scale: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.lambda_p < 0:
            raise ValueError(f"lambda_p must be >= 0, got {self.lambda_p}")
        if not self.mu_p > 0:
            raise ValueError(f"mu_p must be > 0, got {self.mu_p}")
        if not isinstance(self.per_link_scale, LinkScale):
            if any(v < 0 for v in self.per_link_scale.values()):
                raise ValueError("per_link_scale multipliers must be >= 0")

    def __hash__(self):
        return hash((self.channel_id, self.lambda_p, self.mu_p))

    def scale(self, link=None):
        """Multiplier for a link; 1 for links without an entry"""
        if link is None:
            return 1.0
        return float(self.per_link_scale.get(tuple(link), 1.0))

    def scale_array(self, n_o, n_tap):
        """Multipliers for every link as an (n_o, n_tap) array"""
        if isinstance(self.per_link_scale, LinkScale) and self.per_link_scale.array.shape == (n_o, n_tap):
            return self.per_link_scale.array
        scales = np.ones((n_o, n_tap))
        for (i, j), value in self.per_link_scale.items():
            if i < n_o and j < n_tap:
                scales[i, j] = value
        return scales


@dataclass(frozen=True, eq=False)
class PuEventTrace:
    """Busy intervals of one channel within [0, horizon]"""
    channel_id: int
    horizon: float
    intervals: np.ndarray

    def __post_init__(self):
        intervals = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if len(intervals):
            starts, ends = intervals[:, 0], intervals[:, 1]
            if starts.min() < 0 or ends.max() > self.horizon:
                raise ValueError("Busy intervals must lie inside [0, horizon]")
            if np.any(ends < starts) or np.any(starts[1:] < ends[:-1]):
                raise ValueError("Busy intervals must be sorted and non-overlapping")
        intervals.setflags(write=False)
        object.__setattr__(self, 'intervals', intervals)

    @property
    def n_arrivals(self):
        return len(self.intervals)

    @property
    def busy_time(self):
        if not len(self.intervals):
            return 0.0
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    @property
    def idle_time(self):
        return self.horizon - self.busy_time

    @property
    def busy_fraction(self):
        return self.busy_time / self.horizon


@dataclass(frozen=True)
class ChannelEstimate:
    channel_id: int
    lambda_hat: float = 0.0
    n_obs: int = 0
    window: float = 0.0
    idle_time: float = 0.0

    def __post_init__(self):
        if self.lambda_hat < 0 or self.n_obs < 0:
            raise ValueError("lambda_hat and n_obs must be >= 0")

    @classmethod
    def empty(cls, channel_id):
        return cls(channel_id=channel_id)

    @classmethod
    def known(cls, channel):
        """Ideal knowledge: the estimate equals the true arrival rate"""
        return cls(channel_id=channel.channel_id, lambda_hat=channel.lambda_p)


def availability(link, channel):
    """
    Stationary probability that `channel` is idle on `link`.

    a = mu_p / (mu_p + lambda_p * scale(link))

    Args:
        link: (object, tap) pair
        channel: ChannelProcess

    Returns:
        float: Availability in [0, 1]
    """
    rate = channel.lambda_p * channel.scale(link)
    return channel.mu_p / (channel.mu_p + rate)


def availability_grid(channel, n_o, n_tap):
    """availability() for every link at once, shape (n_o, n_tap)"""
    rates = channel.lambda_p * channel.scale_array(n_o, n_tap)
    return channel.mu_p / (channel.mu_p + rates)


def transmission_survival(lambda_p, duration):
    """Probability that no PU returns during a transmission of `duration`"""
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    if lambda_p < 0:
        raise ValueError(f"lambda_p must be >= 0, got {lambda_p}")
    return math.exp(-lambda_p * duration)


def sample_pu_trace(channel, horizon, rng, link=None):
    """
    Sample the busy intervals of a channel over [0, horizon].

    The channel starts idle at t=0. Durations are drawn in batches sized to
    the expected number of cycles, so the output depends only on the seed.

    Args:
        channel: ChannelProcess
        horizon: Observation length, > 0
        rng: numpy.random.Generator
        link: Optional (object, tap) whose scale multiplies lambda_p

    Returns:
        PuEventTrace
    """
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    rate = channel.lambda_p * channel.scale(link)
    if rate == 0:
        return PuEventTrace(channel.channel_id, horizon, np.zeros((0, 2)))

    cycle = 1.0 / rate + 1.0 / channel.mu_p
    batch = int(horizon / cycle * 1.1) + 16
    chunks = []
    t = 0.0
    while True:
        idle = rng.exponential(1.0 / rate, batch)
        busy = rng.exponential(1.0 / channel.mu_p, batch)
        ends = t + np.cumsum(idle + busy)
        starts = ends - busy
        inside = starts < horizon
        if not inside.all():
            keep = int(np.argmin(inside))
            chunks.append(np.column_stack((starts[:keep], np.minimum(ends[:keep], horizon))))
            break
        chunks.append(np.column_stack((starts, np.minimum(ends, horizon))))
        t = float(ends[-1])
        if t >= horizon:
            break
    intervals = np.vstack(chunks) if chunks else np.zeros((0, 2))
    return PuEventTrace(channel.channel_id, horizon, intervals)


def monitor_update(estimate, trace):
    """
    Fold a new observation trace into a channel estimate.

    lambda_hat is the maximum-likelihood rate of PU arrivals: arrivals seen so
    far divided by the idle time observed so far.

    Args:
        estimate: ChannelEstimate accumulated so far
        trace: PuEventTrace of the same channel

    Returns:
        ChannelEstimate: Updated estimate
    """
    if trace.channel_id != estimate.channel_id:
        raise ValueError(f"Trace of channel {trace.channel_id} cannot update channel {estimate.channel_id}")
    n_obs = estimate.n_obs + trace.n_arrivals
    idle = estimate.idle_time + trace.idle_time
    lambda_hat = n_obs / idle if idle > 0 else 0.0
    return ChannelEstimate(
        channel_id=estimate.channel_id,
        lambda_hat=lambda_hat,
        n_obs=n_obs,
        window=estimate.window + trace.horizon,
        idle_time=idle,
    )


def smart_assign(object_id, channels, msg_duration):
    """
    Rank channels by the chance they stay idle through a message.

    Args:
        object_id: Object the ranking is made for (logging only)
        channels: List of ChannelEstimate
        msg_duration: Transmission time of one message

    Returns:
        list: ChannelEstimates, best first; ties go to the lower channel id
    """
    if not channels:
        raise ValueError(f"No channels to assign to object {object_id}")
    ranked = sorted(
        channels,
        key=lambda est: (-transmission_survival(est.lambda_hat, msg_duration), est.channel_id),
    )
    logger.debug("Object %s ranked channels %s", object_id, [est.channel_id for est in ranked])
    return ranked
