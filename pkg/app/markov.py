"""
Absorbing Markov chain of message progress toward the TAPs.

One transient state per object in transit; the TAPs are the absorbing states.
Every slot the object tries the TAPs of its set in order and is absorbed at
the first one that succeeds, otherwise it stays put and retries.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from app.errors import ChainError
from app.spectrum import ChannelEstimate, availability_grid, smart_assign, transmission_survival

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class AbsorbingChain:
    Q: np.ndarray
    R: np.ndarray
    slot_duration: float = 1.0
    object_ids: tuple = field(default=None)

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if Q.size == 0:
            Q = Q.reshape(0, 0)
            R = R.reshape(0, R.shape[-1] if R.ndim == 2 else 0)
        if Q.shape[0] != Q.shape[1]:
            raise ChainError(f"Q must be square, got {Q.shape}")
        if R.shape[0] != Q.shape[0]:
            raise ChainError(f"R has {R.shape[0]} rows, Q has {Q.shape[0]}")
        if Q.size and Q.min() < 0 or R.size and R.min() < 0:
            raise ChainError("Transition probabilities must be >= 0")
        rows = Q.sum(axis=1) + R.sum(axis=1)
        if rows.size and np.max(np.abs(rows - 1.0)) > ROW_SUM_TOLERANCE:
            raise ChainError(f"Rows of [Q | R] must sum to 1, worst is {rows[np.argmax(np.abs(rows - 1.0))]!r}")
        if not self.slot_duration > 0:
            raise ChainError(f"slot_duration must be > 0, got {self.slot_duration}")
        Q.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, 'Q', Q)
        object.__setattr__(self, 'R', R)
        ids = tuple(range(Q.shape[0])) if self.object_ids is None else tuple(self.object_ids)
        object.__setattr__(self, 'object_ids', ids)

    @property
    def n_transient(self):
        return self.Q.shape[0]

    @property
    def n_absorbing(self):
        return self.R.shape[1]


@dataclass(frozen=True)
class LatencyBreakdown:
    tau_o: float
    tau_p: float
    tau_a: float

    def __post_init__(self):
        for name in ('tau_o', 'tau_p', 'tau_a'):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @property
    def tau_total(self):
        return self.tau_o + self.tau_p + self.tau_a

    def to_dict(self):
        return {
            'tau_o': self.tau_o,
            'tau_p': self.tau_p,
            'tau_a': self.tau_a,
            'tau_total': self.tau_total,
        }


def build_chain(topology, placed, channels, smart=False, estimates=None):
    """
    Build the absorbing chain of the assigned objects.

    Per slot TAP k of object i's set succeeds with
        q_k = tap_k.availability * (1 - prod_{b in W_i} (1 - a_ikb))
    and the object is absorbed at the first succeeding TAP. With a single TAP
    and channel this is p_i = a_ij^b * tap.availability.

    With smart=True the channel term becomes the larger of itself and the
    one-slot survival of the channel ranked first by smart_assign on the
    link-scaled estimates.

    Args:
        topology: Topology from form_topology
        placed: PlacedScenario
        channels: List of ChannelProcess
        smart: Use the TAP channel monitor
        estimates: ChannelEstimates for smart mode (defaults to known rates)

    Returns:
        AbsorbingChain

    Raises:
        ChainError: An object can never reach a TAP
    """
    scenario = placed.scenario
    slot = scenario.slot_duration
    n_o, n_tap = scenario.n_o, scenario.n_tap
    objects = sorted(topology.assignments)
    position = {ch.channel_id: k for k, ch in enumerate(channels)}
    avail = np.stack([availability_grid(ch, n_o, n_tap) for ch in channels], axis=-1)
    tap_avail = scenario.tap_availability

    if smart:
        estimates = estimates or [ChannelEstimate.known(ch) for ch in channels]
        scales = [ch.scale_array(n_o, n_tap) for ch in channels]
        by_channel = {est.channel_id: est for est in estimates}

    Q = np.zeros((len(objects), len(objects)))
    R = np.zeros((len(objects), n_tap))
    for row, i in enumerate(objects):
        W = [position[c] for c in topology.channel_set(i)]
        stay = 1.0
        for j in topology.tap_set(i):
            term = 1.0 - np.prod(1.0 - avail[i, j, W])
            if smart:
                scaled = [replace(by_channel[ch.channel_id],
                                  lambda_hat=by_channel[ch.channel_id].lambda_hat * scales[k][i, j])
                          for k, ch in enumerate(channels)]
                best = smart_assign(i, scaled, slot)[0]
                # The max keeps smart no slower than baseline when large link scales
                # make the best monitored channel worse than the assigned set
                term = max(term, transmission_survival(best.lambda_hat, slot))
            q = tap_avail[j] * term
            R[row, j] += stay * q
            stay *= 1.0 - q
        if stay >= 1.0:
            raise ChainError(f"Object {i} has success probability 0; absorption is not certain")
        Q[row, row] = stay

    return AbsorbingChain(Q=Q, R=R, slot_duration=slot, object_ids=tuple(objects))


def fundamental_matrix(chain):
    """
    N = (I - Q)^-1.

    Raises:
        ChainError: (I - Q) is singular or N has negative entries, i.e. some
            transient state is never absorbed
    """
    n = chain.n_transient
    if n == 0:
        return np.zeros((0, 0))
    try:
        N = linalg.solve(np.eye(n) - chain.Q, np.eye(n))
    except linalg.LinAlgError as e:
        raise ChainError(f"Chain is not absorbing: I - Q is singular ({e})") from e
    if not np.all(np.isfinite(N)) or N.min() < -1e-9:
        raise ChainError("Chain is not absorbing: fundamental matrix has invalid entries")
    return N


def expected_absorption_steps(chain):
    """Expected number of steps to absorption from each transient state, N * 1"""
    return fundamental_matrix(chain).sum(axis=1)


def absorption_probabilities(chain):
    """B = N * R: probability that state i is absorbed at TAP j"""
    return fundamental_matrix(chain) @ chain.R


def sample_absorption_steps(chain, starts, rng, max_steps=1_000_000):
    """
    Steps to absorption of independent walks from the given transient states.

    Args:
        chain: AbsorbingChain
        starts: Start state of every walk
        rng: numpy.random.Generator
        max_steps: Guard against chains that practically never absorb

    Returns:
        numpy.ndarray: Step count of every walk
    """
    n = chain.n_transient
    state = np.array(starts, dtype=np.int64).reshape(-1)
    steps = np.zeros(state.size, dtype=np.int64)
    if state.size and (state.min() < 0 or state.max() >= n):
        raise ChainError(f"Walks must start in a transient state (0..{n - 1})")
    cumulative = np.cumsum(np.hstack((chain.Q, chain.R)), axis=1)
    last = cumulative.shape[1] - 1
    active = np.arange(state.size)
    for _ in range(max_steps):
        if not active.size:
            break
        u = rng.random(active.size)
        nxt = np.minimum((u[:, None] >= cumulative[state[active]]).sum(axis=1), last)
        steps[active] += 1
        state[active] = nxt
        active = active[nxt < n]
    if active.size:
        raise ChainError(f"{active.size} walks did not absorb within {max_steps} steps")
    return steps


def simulate_absorption(chain, rng, n_walks=10_000, max_steps=1_000_000):
    """
    Monte Carlo estimate of the steps to absorption.

    Args:
        chain: AbsorbingChain
        rng: numpy.random.Generator
        n_walks: Walks started from every transient state
        max_steps: Guard against chains that practically never absorb

    Returns:
        tuple: (mean steps, standard error) arrays, one entry per transient state
    """
    n = chain.n_transient
    if n == 0:
        return np.zeros(0), np.zeros(0)
    steps = sample_absorption_steps(chain, np.repeat(np.arange(n), n_walks), rng, max_steps)
    steps = steps.reshape(n, n_walks)
    means = steps.mean(axis=1)
    errors = steps.std(axis=1, ddof=1) / np.sqrt(n_walks) if n_walks > 1 else np.zeros(n)
    return means, errors


def latency_breakdown(scenario, chain, d2d=False, rng=None):
    """
    Mean latency tau_o + tau_p + tau_a.

    tau_o: mean absorption time over the assigned objects.
    tau_p: msg_size * tau_p_per_unit * max(1, load_j / compute_capacity_j),
        averaged over the TAPs each object is absorbed at; load_j is the
        expected number of objects absorbed at TAP j.
    tau_a: mean access delay over n_users users; with d2d each user is served
        by a neighbour with probability p_share.

    Args:
        scenario: Scenario
        chain: AbsorbingChain
        d2d: Enable collaborative D2D sharing
        rng: numpy.random.Generator for the D2D draws

    Returns:
        LatencyBreakdown
    """
    traffic = scenario.traffic
    if chain.n_transient:
        tau_o = float(np.mean(expected_absorption_steps(chain))) * chain.slot_duration
        absorbed = absorption_probabilities(chain)
        load = absorbed.sum(axis=0)
        capacity = np.array([tap.compute_capacity for tap in scenario.tap_profiles])
        factor = np.maximum(1.0, load / capacity)
        per_object = scenario.msg_size * traffic.tau_p_per_unit * (absorbed @ factor)
        tau_p = float(np.mean(per_object))
    else:
        tau_o = tau_p = 0.0

    share = traffic.p_share if d2d else 0.0
    if share == 0.0:
        tau_a = traffic.tau_a_base
    elif scenario.n_users == 0:
        tau_a = (1.0 - share) * traffic.tau_a_base + share * traffic.tau_d2d
    else:
        if rng is None:
            raise ValueError("latency_breakdown needs an rng when D2D sharing is enabled")
        served = rng.random(scenario.n_users) < share
        tau_a = float(np.mean(np.where(served, traffic.tau_d2d, traffic.tau_a_base)))

    return LatencyBreakdown(tau_o=tau_o, tau_p=tau_p, tau_a=tau_a)
