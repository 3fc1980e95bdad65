"""
Monte Carlo replications of the edge network.

A replication runs place -> sample PU traces -> monitor -> form topology ->
build chain -> latency -> power -> message delivery from a single seed.
Delivery and walk statistics are sampled on the topology and chain the
replication formed.
Batches fan replications out over a thread pool and merge them in
replication order, so summaries do not depend on the number of workers.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace

import numpy as np

from app.errors import RdnaError, SimulationError
from app.markov import build_chain, expected_absorption_steps, latency_breakdown, sample_absorption_steps
from app.power import mean_power
from app.scenario import distance_matrix, place_nodes
from app.spectrum import ChannelEstimate, ChannelProcess, LinkScale, monitor_update, sample_pu_trace
from app.topology import AssociationPolicy, form_topology
from app.utils import derive_seed, validate_seed
from config import Config

logger = logging.getLogger(__name__)

Z_95 = 1.96

METRICS = (
    'tau_o', 'tau_p', 'tau_a', 'tau_total',
    'p_tx', 'p_compute', 'p_storage', 'p_switching', 'p_total',
    'reliability', 'signaling_messages', 'mean_steps', 'expected_steps', 'assigned_objects',
)


@dataclass(frozen=True)
class RunOptions:
    smart: bool = False
    d2d: bool = False
    w: int = 1
    n_a: int = 1
    messages: int = Config.DEFAULT_MESSAGES
    monitor_window: float = Config.DEFAULT_MONITOR_WINDOW

    def __post_init__(self):
        if self.w < 1:
            raise ValueError(f"w must be >= 1, got {self.w}")
        if self.n_a < 1:
            raise ValueError(f"n_a must be >= 1, got {self.n_a}")
        if self.messages < 0:
            raise ValueError(f"messages must be >= 0, got {self.messages}")
        if not self.monitor_window > 0:
            raise ValueError(f"monitor_window must be > 0, got {self.monitor_window}")

    @classmethod
    def from_config(cls, config):
        e = config.section('experiment')
        return cls(smart=e['smart'], d2d=e['d2d'], w=e['w'], n_a=e['n_a'],
                   messages=e['messages'], monitor_window=e['monitor_window'])


@dataclass(frozen=True)
class ReplicationResult:
    seed: int
    latency: object
    power: object
    reliability_empirical: float
    signaling_messages: int
    mean_steps: float = 0.0
    expected_steps: float = 0.0
    assigned_objects: int = 0

    def __post_init__(self):
        if not 0.0 <= self.reliability_empirical <= 1.0:
            raise ValueError(f"reliability_empirical out of range: {self.reliability_empirical}")

    def metrics(self):
        values = dict(self.latency.to_dict())
        values.update(self.power.to_dict())
        values['reliability'] = self.reliability_empirical
        values['signaling_messages'] = self.signaling_messages
        values['mean_steps'] = self.mean_steps
        values['expected_steps'] = self.expected_steps
        values['assigned_objects'] = self.assigned_objects
        return values


@dataclass(frozen=True)
class MetricStat:
    mean: float
    stderr: float
    half_width: float
    n: int

    @property
    def ci_low(self):
        return self.mean - self.half_width

    @property
    def ci_high(self):
        return self.mean + self.half_width


@dataclass
class MetricsSummary:
    stats: dict = field(default_factory=dict)
    replications: list = field(default_factory=list)

    @property
    def n_reps(self):
        return len(self.replications)

    def __getitem__(self, metric):
        return self.stats[metric]

    def __eq__(self, other):
        if not isinstance(other, MetricsSummary):
            return NotImplemented
        return self.stats == other.stats and self.replications == other.replications


def build_channels(scenario, placed):
    """One ChannelProcess per channel, with distance-driven link scales"""
    traffic = scenario.traffic
    if traffic.pu_distance_gain > 0 and scenario.n_o:
        scale = LinkScale.from_distances(distance_matrix(placed), scenario.area_side, traffic.pu_distance_gain)
    else:
        scale = {}
    return [ChannelProcess(channel_id=b, lambda_p=traffic.lambda_p, mu_p=traffic.mu_p, per_link_scale=scale)
            for b in range(scenario.n_channels)]


def monitor_channels(channels, window, seed_sequence):
    """Estimates a TAP obtains by watching each channel for `window` time units"""
    estimates = []
    for channel, child in zip(channels, seed_sequence.spawn(len(channels))):
        trace = sample_pu_trace(channel, window, np.random.default_rng(child))
        estimates.append(monitor_update(ChannelEstimate.empty(channel.channel_id), trace))
    return estimates


def message_reliability(placed, topology, channels, mu_s, messages, rng):
    """
    Fraction of messages delivered without PU interruption on a formed topology.

    Messages are spread uniformly over the objects. A message of object i may
    leave through any TAP of J_i that is sharing its connectivity at that
    moment, on any channel of W_i. One option delivers when its
    exponential(mu_s) service ends before the PU of that link returns at
    rate lambda_p * scale(i, j). Messages of unassigned objects are lost.

    Args:
        placed: PlacedScenario
        topology: Topology from form_topology
        channels: List of ChannelProcess
        mu_s: Message service rate
        messages: Number of messages to send
        rng: numpy.random.Generator

    Returns:
        float: Delivered fraction (1.0 when nothing is sent)
    """
    scenario = placed.scenario
    if messages == 0 or scenario.n_o == 0:
        return 1.0
    counts = rng.multinomial(messages, np.full(scenario.n_o, 1.0 / scenario.n_o))
    tap_avail = scenario.tap_availability
    by_id = {ch.channel_id: ch for ch in channels}

    delivered = 0
    for i in sorted(topology.assignments):
        k = int(counts[i])
        if k == 0:
            continue
        taps = topology.tap_set(i)
        chans = [by_id[c] for c in topology.channel_set(i)]
        rates = np.array([[ch.lambda_p * ch.scale((i, j)) for ch in chans] for j in taps])
        sharing = rng.random((k, len(taps))) < tap_avail[taps]
        service = rng.exponential(1.0 / mu_s, size=(k,) + rates.shape)
        with np.errstate(divide='ignore', invalid='ignore'):
            returns = rng.standard_exponential((k,) + rates.shape) / rates
        survives = np.where(rates > 0, service < returns, True)
        delivered += int(((survives.any(axis=2)) & sharing).any(axis=1).sum())
    return delivered / messages


def measured_steps(chain, walks, rng):
    """Mean steps to absorption over `walks` walks from uniformly drawn objects"""
    if chain.n_transient == 0 or walks == 0:
        return 0.0
    starts = rng.integers(0, chain.n_transient, size=walks)
    return float(np.mean(sample_absorption_steps(chain, starts, rng)))


def run_replication(scenario, options, seed):
    """
    Run one replication end to end.

    Args:
        scenario: Scenario
        options: RunOptions
        seed: 64-bit seed; the replication is a pure function of it

    Returns:
        ReplicationResult

    Raises:
        SimulationError: Any model error, tagged with the seed
    """
    try:
        validate_seed(seed)
        place_seq, monitor_seq, access_seq, message_seq, walk_seq = np.random.SeedSequence(seed).spawn(5)

        placed = place_nodes(scenario, np.random.default_rng(place_seq))
        channels = build_channels(scenario, placed)
        estimates = monitor_channels(channels, options.monitor_window, monitor_seq) if options.smart else None

        policy = AssociationPolicy(w=options.w, n_a=options.n_a)
        topology = form_topology(placed, channels, policy)
        chain = build_chain(topology, placed, channels, smart=options.smart, estimates=estimates)
        latency = latency_breakdown(scenario, chain, d2d=options.d2d, rng=np.random.default_rng(access_seq))
        power = mean_power(placed, topology, latency, scenario.power)

        reliability = message_reliability(placed, topology, channels, scenario.traffic.mu_s,
                                          options.messages, np.random.default_rng(message_seq))
        expected = float(np.mean(expected_absorption_steps(chain))) if chain.n_transient else 0.0
        steps = measured_steps(chain, options.messages, np.random.default_rng(walk_seq))
    except SimulationError:
        raise
    except (RdnaError, ValueError, ArithmeticError) as e:
        raise SimulationError(str(e), seed=seed) from e

    logger.debug("Replication seed=%d tau_total=%.6g p_total=%.6g", seed, latency.tau_total, power.p_total_mean)
    return ReplicationResult(
        seed=seed,
        latency=latency,
        power=power,
        reliability_empirical=reliability,
        signaling_messages=topology.signaling_messages,
        mean_steps=steps,
        expected_steps=expected,
        assigned_objects=len(topology.assignments),
    )


def summarize(results):
    """
    Aggregate replications, in the order given, into a MetricsSummary.

    With a single replication the standard error and half-width are 0.
    """
    if not results:
        raise ValueError("Cannot summarize an empty batch")
    n = len(results)
    stats = {}
    for metric in METRICS:
        values = np.array([r.metrics()[metric] for r in results], dtype=float)
        mean = math.fsum(values) / n
        stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        stats[metric] = MetricStat(mean=mean, stderr=stderr, half_width=Z_95 * stderr, n=n)
    return MetricsSummary(stats=stats, replications=list(results))


def run_batch(scenario, options, n_reps, base_seed, parallelism=1, progress_callback=None):
    """
    Run n_reps replications and summarise them.

    Replication k uses derive_seed(base_seed, k). Results are merged in k
    order, so the summary is identical for every parallelism.

    Args:
        scenario: Scenario
        options: RunOptions
        n_reps: Number of replications, >= 1
        base_seed: Batch seed
        parallelism: Worker threads
        progress_callback: Optional callable(completed, total)

    Returns:
        MetricsSummary

    Raises:
        SimulationError: The lowest-index failing replication, with its seed
    """
    if n_reps < 1:
        raise ValueError(f"n_reps must be >= 1, got {n_reps}")
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    validate_seed(base_seed)
    seeds = [derive_seed(base_seed, k) for k in range(n_reps)]
    logger.info("Running %d replications (base_seed=%d, workers=%d)", n_reps, base_seed, parallelism)

    results = [None] * n_reps
    if parallelism == 1:
        for k, seed in enumerate(seeds):
            results[k] = run_replication(scenario, options, seed)
            if progress_callback:
                progress_callback(k + 1, n_reps)
    else:
        failures = {}
        with ThreadPoolExecutor(max_workers=parallelism) as executor:
            future_to_index = {
                executor.submit(run_replication, scenario, options, seed): k
                for k, seed in enumerate(seeds)
            }
            completed = 0
            for future in as_completed(future_to_index):
                k = future_to_index[future]
                if future.cancelled():
                    continue
                try:
                    results[k] = future.result()
                except SimulationError as e:
                    failures[k] = e
                    # Only a lower index can still replace this failure
                    for pending, index in future_to_index.items():
                        if index > k:
                            pending.cancel()
                    continue
                completed += 1
                if progress_callback:
                    progress_callback(completed, n_reps)
        if failures:
            raise failures[min(failures)]

    summary = summarize(results)
    logger.info("Batch complete: tau_total=%.6g p_total=%.6g",
                summary['tau_total'].mean, summary['p_total'].mean)
    return summary


def latency_profile(scenario, options, w_values, n_reps, base_seed, parallelism=1):
    """
    Mean latency for each channel count, the tau(w) table of the planner.

    Returns:
        dict: w -> mean tau_total
    """
    profile = {}
    for w in sorted(w_values):
        summary = run_batch(scenario, replace(options, w=w), n_reps, base_seed, parallelism)
        profile[w] = summary['tau_total'].mean
    return profile
