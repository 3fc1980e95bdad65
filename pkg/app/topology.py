"""
Topology formation: object -> (TAP, channel) association and backup sets.

Association is realised as request/response accounting: an object queries each
(TAP, channel) pair it can hear, one message per request, and keeps the pair
with the best score. Querying every pair is the worst case, so the message
count never exceeds n_o * n_tap * B.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from app.scenario import distance_matrix
from app.spectrum import availability_grid
from app.utils import validate_probability

logger = logging.getLogger(__name__)

# Above this many subsets the backup search keeps the most reliable subset
EXHAUSTIVE_SUBSET_LIMIT = 200_000


@dataclass(frozen=True)
class AssociationPolicy:
    w: int = 1
    n_a: int = 1
    xi_min: float = None
    coverage_radius: float = None

    def __post_init__(self):
        if self.w < 1:
            raise ValueError(f"w must be >= 1, got {self.w}")
        if self.n_a < 1:
            raise ValueError(f"n_a must be >= 1, got {self.n_a}")
        if self.xi_min is not None:
            validate_probability('xi_min', self.xi_min, low_open=True, high_open=True)
        if self.coverage_radius is not None and self.coverage_radius <= 0:
            raise ValueError(f"coverage_radius must be > 0, got {self.coverage_radius}")


@dataclass
class Topology:
    assignments: dict = field(default_factory=dict)
    backup_channels: dict = field(default_factory=dict)
    backup_taps: dict = field(default_factory=dict)
    signaling_messages: int = 0
    scores: dict = field(default_factory=dict)
    unassigned: tuple = ()
    infeasible_backups: tuple = ()

    def tap_set(self, object_id):
        """Ordered TAP set J_i: primary first, then backups"""
        primary, _ = self.assignments[object_id]
        return [primary] + list(self.backup_taps.get(object_id, []))

    def channel_set(self, object_id):
        """Ordered channel set W_i: primary first, then backups"""
        _, channel = self.assignments[object_id]
        return [channel] + list(self.backup_channels.get(object_id, []))


@dataclass(frozen=True)
class BackupSelection:
    taps: tuple
    reliability: float
    feasible: bool

    @property
    def n_a(self):
        return len(self.taps)


def combined_reliability(reliabilities):
    """1 - prod(1 - xi_j): at least one TAP of the set delivers"""
    failure = 1.0
    for xi in reliabilities:
        failure *= 1.0 - xi
    return 1.0 - failure


def select_backup_taps(object_id, candidates, xi_min):
    """
    Pick the smallest TAP set whose combined reliability reaches xi_min.

    Among feasible sets of that size the one with the least slack
    (reliability - xi_min) wins; remaining ties go to the lexicographically
    smallest TAP ids. When no set is feasible every candidate is returned and
    the selection is flagged infeasible.

    Args:
        object_id: Object the set is chosen for
        candidates: List of (tap_id, reliability) pairs, reliability in (0, 1]
        xi_min: Target reliability in (0, 1)

    Returns:
        BackupSelection
    """
    if not candidates:
        raise ValueError(f"No candidate TAPs for object {object_id}")
    validate_probability('xi_min', xi_min, low_open=True, high_open=True)
    pool = sorted((int(tap), float(xi)) for tap, xi in candidates)
    for tap, xi in pool:
        validate_probability(f'reliability of TAP {tap}', xi, low_open=True)

    # The best k-set is the k most reliable TAPs, so the minimal size is found greedily
    by_reliability = sorted(pool, key=lambda c: (-c[1], c[0]))
    size = None
    for k in range(1, len(pool) + 1):
        if combined_reliability(xi for _, xi in by_reliability[:k]) >= xi_min:
            size = k
            break

    if size is None:
        logger.warning("Object %s: no TAP set reaches xi_min=%s", object_id, xi_min)
        return BackupSelection(
            taps=tuple(tap for tap, _ in pool),
            reliability=combined_reliability(xi for _, xi in pool),
            feasible=False,
        )

    best = None
    if math.comb(len(pool), size) <= EXHAUSTIVE_SUBSET_LIMIT:
        for subset in itertools.combinations(pool, size):
            reliability = combined_reliability(xi for _, xi in subset)
            if reliability < xi_min:
                continue
            key = (reliability - xi_min, tuple(tap for tap, _ in subset))
            if best is None or key < best[0]:
                best = (key, reliability)

    if best is None:
        chosen = sorted(by_reliability[:size])
        return BackupSelection(
            taps=tuple(tap for tap, _ in chosen),
            reliability=combined_reliability(xi for _, xi in chosen),
            feasible=True,
        )
    (_, taps), reliability = best
    return BackupSelection(taps=taps, reliability=reliability, feasible=True)


def form_topology(placed, channels, policy=None):
    """
    Associate every object with its best (TAP, channel) pair.

    score = availability(link, channel) * tap.availability; ties go to the
    shorter distance, then higher incentive weight, then lower TAP id, then
    lower channel id. Objects whose every pair scores 0 stay unassigned.

    Args:
        placed: PlacedScenario
        channels: List of ChannelProcess, one per channel
        policy: AssociationPolicy (defaults to w = n_a = 1)

    Returns:
        Topology
    """
    policy = policy or AssociationPolicy()
    scenario = placed.scenario
    if not channels:
        raise ValueError("At least one channel is required to form a topology")
    n_o, n_tap, n_ch = scenario.n_o, scenario.n_tap, len(channels)

    distances = distance_matrix(placed)
    tap_avail = scenario.tap_availability
    incentive = np.array([tap.incentive_weight for tap in scenario.tap_profiles])
    # avail[i, j, b]
    avail = np.stack([availability_grid(ch, n_o, n_tap) for ch in channels], axis=-1)
    scores = avail * tap_avail[None, :, None]

    in_range = np.ones((n_o, n_tap), dtype=bool)
    if policy.coverage_radius is not None:
        in_range = distances <= policy.coverage_radius

    tap_ids = np.repeat(np.arange(n_tap), n_ch)
    ch_ids = np.tile(np.arange(n_ch), n_tap)
    channel_ids = np.array([ch.channel_id for ch in channels])

    topology = Topology()
    unassigned = []
    infeasible = []
    messages = 0
    for i in range(n_o):
        reachable = np.flatnonzero(in_range[i])
        messages += len(reachable) * n_ch
        flat_score = scores[i].reshape(-1)
        usable = np.repeat(in_range[i], n_ch) & (flat_score > 0)
        if not usable.any():
            unassigned.append(i)
            continue
        idx = np.flatnonzero(usable)
        order = np.lexsort((
            ch_ids[idx],
            tap_ids[idx],
            -incentive[tap_ids[idx]],
            distances[i, tap_ids[idx]],
            -flat_score[idx],
        ))
        best = idx[order[0]]
        tap, b = int(tap_ids[best]), int(ch_ids[best])
        topology.assignments[i] = (tap, int(channel_ids[b]))
        topology.scores[i] = float(flat_score[best])

        # Backup channels on the primary link
        others = [c for c in range(n_ch) if c != b and avail[i, tap, c] > 0]
        others.sort(key=lambda c: (-avail[i, tap, c], channel_ids[c]))
        topology.backup_channels[i] = [int(channel_ids[c]) for c in others[:policy.w - 1]]

        # Backup TAPs on the primary channel
        rivals = [j for j in reachable if j != tap and scores[i, j, b] > 0]
        rivals.sort(key=lambda j: (-scores[i, j, b], distances[i, j], -incentive[j], j))
        if policy.xi_min is None:
            topology.backup_taps[i] = [int(j) for j in rivals[:policy.n_a - 1]]
        else:
            backups, feasible = _backups_for_target(i, topology.scores[i], rivals, scores[i, :, b], policy.xi_min)
            topology.backup_taps[i] = backups
            if not feasible:
                infeasible.append(i)

    topology.signaling_messages = messages
    topology.unassigned = tuple(unassigned)
    topology.infeasible_backups = tuple(infeasible)
    logger.debug("Formed topology: %d assigned, %d unassigned, %d signaling messages",
                 len(topology.assignments), len(unassigned), messages)
    return topology


def _backups_for_target(object_id, primary_score, rivals, tap_scores, xi_min):
    """Backups that lift the primary TAP's reliability to xi_min"""
    if primary_score >= xi_min:
        return [], True
    if not rivals:
        return [], False
    residual = 1.0 - (1.0 - xi_min) / (1.0 - primary_score)
    selection = select_backup_taps(object_id, [(j, tap_scores[j]) for j in rivals], residual)
    rank = {j: r for r, j in enumerate(rivals)}
    return sorted((int(j) for j in selection.taps), key=rank.get), selection.feasible
