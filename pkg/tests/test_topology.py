import itertools
from dataclasses import replace

import numpy as np
import pytest

from app.scenario import PlacedScenario, Scenario, TapProfile, place_nodes
from app.spectrum import ChannelProcess, LinkScale, availability
from app.topology import AssociationPolicy, combined_reliability, form_topology, select_backup_taps


def test_single_pair(placed_factory):
    placed = placed_factory([[1, 1]], [[2, 2]])
    topology = form_topology(placed, [ChannelProcess(0, lambda_p=0.0, mu_p=1.0)])
    assert topology.assignments == {0: (0, 0)}
    assert topology.signaling_messages <= 1


def test_best_channel_wins(placed_factory):
    placed = placed_factory([[1, 1]], [[2, 2]], n_channels=2)
    channels = [
        ChannelProcess(0, lambda_p=1.0, mu_p=1.0),    # a = 0.5
        ChannelProcess(1, lambda_p=1.0, mu_p=9.0),    # a = 0.9
    ]
    assert form_topology(placed, channels).assignments[0] == (0, 1)


def test_tie_goes_to_nearer_tap(placed_factory):
    placed = placed_factory([[5, 5]], [[9, 9], [6, 6]])
    topology = form_topology(placed, [ChannelProcess(0, lambda_p=1.0, mu_p=2.0)])
    assert topology.assignments[0] == (1, 0)


def test_tie_goes_to_higher_incentive(placed_factory):
    profiles = (TapProfile(incentive_weight=0.0), TapProfile(incentive_weight=1.0))
    placed = placed_factory([[5, 5]], [[4, 5], [6, 5]], tap_profiles=profiles)
    topology = form_topology(placed, [ChannelProcess(0, lambda_p=1.0, mu_p=2.0)])
    assert topology.assignments[0] == (1, 0)


def test_zero_score_leaves_object_unassigned(placed_factory):
    placed = placed_factory([[1, 1], [2, 2]], [[3, 3]], tap_profiles=(TapProfile(availability=0.0),))
    topology = form_topology(placed, [ChannelProcess(0, lambda_p=0.0, mu_p=1.0)])
    assert topology.assignments == {}
    assert topology.unassigned == (0, 1)


def test_coverage_radius_limits_signaling(placed_factory):
    placed = placed_factory([[0, 0]], [[1, 0], [9, 9]], n_channels=2)
    channels = [ChannelProcess(b, lambda_p=1.0, mu_p=2.0) for b in range(2)]
    topology = form_topology(placed, channels, AssociationPolicy(coverage_radius=2.0))
    assert topology.signaling_messages == 2
    assert topology.assignments[0][0] == 0


def _random_instance(rng, n_o=5, n_tap=4, n_ch=3):
    scenario = Scenario(
        n_o=n_o, n_tap=n_tap, n_channels=n_ch, area_side=20.0,
        tap_profiles=tuple(TapProfile(availability=float(a)) for a in rng.uniform(0.5, 1.0, n_tap)),
    )
    placed = place_nodes(scenario, rng)
    channels = [
        ChannelProcess(b, lambda_p=float(rng.uniform(0.1, 3)), mu_p=float(rng.uniform(0.5, 3)),
                       per_link_scale=LinkScale(rng.uniform(0.5, 2.0, (n_o, n_tap))))
        for b in range(n_ch)
    ]
    return placed, channels


def test_assignment_is_exhaustive_argmax(rng):
    for _ in range(50):
        placed, channels = _random_instance(rng)
        topology = form_topology(placed, channels)
        tap_avail = placed.scenario.tap_availability
        for i in range(placed.scenario.n_o):
            best = max(
                availability((i, j), ch) * tap_avail[j]
                for j in range(placed.scenario.n_tap) for ch in channels
            )
            tap, channel = topology.assignments[i]
            assert availability((i, tap), channels[channel]) * tap_avail[tap] == pytest.approx(best)


def test_structural_invariants(rng):
    for _ in range(50):
        placed, channels = _random_instance(rng, n_o=8, n_tap=5, n_ch=4)
        topology = form_topology(placed, channels, AssociationPolicy(w=3, n_a=3))
        s = placed.scenario
        assert topology.signaling_messages <= s.n_o * s.n_tap * s.n_channels
        for i, (tap, channel) in topology.assignments.items():
            assert 0 <= tap < s.n_tap and 0 <= channel < s.n_channels
            backups = topology.backup_taps[i]
            assert tap not in backups and len(set(backups)) == len(backups) <= 2
            spare = topology.backup_channels[i]
            assert channel not in spare and len(set(spare)) == len(spare) <= 2


def test_signaling_bound_random_scenarios(rng):
    for _ in range(50):
        n_o, n_tap, n_ch = (int(v) for v in rng.integers(1, 10, 3))
        placed, channels = _random_instance(rng, n_o, n_tap, n_ch)
        topology = form_topology(placed, channels)
        assert topology.signaling_messages <= n_o * n_tap * n_ch


def test_backup_channels_limited_by_channel_count(placed_factory):
    placed = placed_factory([[1, 1]], [[2, 2]], n_channels=2)
    channels = [ChannelProcess(b, lambda_p=1.0, mu_p=2.0) for b in range(2)]
    topology = form_topology(placed, channels, AssociationPolicy(w=5))
    assert topology.channel_set(0) == [0, 1]


def test_backups_for_target(placed_factory):
    placed = placed_factory([[5, 5]], [[5, 6], [5, 4], [6, 5]],
                            tap_profiles=[TapProfile(availability=0.5)] * 3)
    topology = form_topology(placed, [ChannelProcess(0, lambda_p=0.0, mu_p=1.0)],
                             AssociationPolicy(xi_min=0.8))
    # 1 - 0.5 * 0.5 = 0.75 < 0.8 <= 1 - 0.5^3
    assert len(topology.tap_set(0)) == 3
    assert topology.infeasible_backups == ()


def test_single_candidate_is_enough():
    selection = select_backup_taps(0, [(4, 0.999)], 0.99)
    assert selection.taps == (4,)
    assert selection.feasible


def test_identical_candidates_need_four():
    selection = select_backup_taps(0, [(j, 6 / 7) for j in range(8)], 0.999)
    assert selection.n_a == 4
    assert selection.taps == (0, 1, 2, 3)
    assert 1 - (1 / 7) ** 3 < 0.999 <= selection.reliability


def test_infeasible_returns_everything():
    selection = select_backup_taps(0, [(0, 0.5), (1, 0.5)], 0.9)
    assert not selection.feasible
    assert selection.taps == (0, 1)


def _brute_force(candidates, xi_min):
    for size in range(1, len(candidates) + 1):
        feasible = []
        for subset in itertools.combinations(sorted(candidates), size):
            r = combined_reliability(xi for _, xi in subset)
            if r >= xi_min:
                feasible.append((r - xi_min, tuple(t for t, _ in subset)))
        if feasible:
            return min(feasible)[1]
    return None


def test_selection_matches_brute_force(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        taps = rng.permutation(20)[:n]
        candidates = [(int(t), float(x)) for t, x in zip(taps, rng.uniform(0.05, 0.95, n))]
        xi_min = float(rng.uniform(0.3, 0.999))
        expected = _brute_force(candidates, xi_min)
        selection = select_backup_taps(0, candidates, xi_min)
        if expected is None:
            assert not selection.feasible
        else:
            assert selection.taps == expected


def test_combined_reliability():
    assert combined_reliability([0.9, 0.9]) == pytest.approx(0.99)
    assert combined_reliability([]) == 0.0
    assert np.isclose(combined_reliability([0.5] * 3), 0.875)


def _without_last_tap(placed, channels):
    n_tap = placed.scenario.n_tap - 1
    scenario = replace(placed.scenario, n_tap=n_tap, tap_profiles=placed.scenario.tap_profiles[:n_tap])
    fewer = PlacedScenario(scenario=scenario, object_positions=placed.object_positions,
                           tap_positions=placed.tap_positions[:n_tap])
    trimmed = [replace(ch, per_link_scale=LinkScale(ch.per_link_scale.array[:, :n_tap])) for ch in channels]
    return fewer, trimmed


def test_extra_tap_never_lowers_scores(rng):
    for _ in range(50):
        n_o, n_tap, n_ch = int(rng.integers(1, 8)), int(rng.integers(2, 7)), int(rng.integers(1, 4))
        placed, channels = _random_instance(rng, n_o, n_tap, n_ch)
        fewer, trimmed = _without_last_tap(placed, channels)
        before = form_topology(fewer, trimmed).scores
        after = form_topology(placed, channels).scores
        for i, score in before.items():
            assert after[i] >= score


def test_backup_set_shrinks_as_candidates_improve(rng):
    for _ in range(300):
        n = int(rng.integers(1, 9))
        xi = rng.uniform(0.05, 0.95, n)
        xi_min = float(rng.uniform(0.3, 0.999))
        sizes = []
        for lift in (0.0, 0.2, 0.5, 0.8, 0.95):
            candidates = [(j, float(x + (1 - x) * lift)) for j, x in enumerate(xi)]
            sizes.append(select_backup_taps(0, candidates, xi_min).n_a)
        assert sizes == sorted(sizes, reverse=True)
