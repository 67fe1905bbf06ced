import math

import numpy as np
import pytest

from mobile_gossip.errors import InvalidParameterError
from mobile_gossip.geometry import SpatialIndex, WorldConfig
from mobile_gossip.gossip import (GossipMode, SpreadTrajectory, choose_contacts, deliver,
                                  gossip_round, increment_estimate, mean_and_se, run_spread,
                                  spreading_time, write_trajectories)
from mobile_gossip.mobility import MobilitySpec
from mobile_gossip.theory import optimal_time_floor


def traj(source, completion):
    return SpreadTrajectory([1], completion, source)


def test_forced_contact_pair():
    idx = SpatialIndex([(0.4, 0.5), (0.5, 0.5)], 0.2)
    for seed in range(20):
        out = gossip_round(idx, np.array([True, False]), GossipMode.PUSH_PULL,
                           np.random.default_rng(seed))
        assert out.all()


def test_all_informed_is_absorbing(rng):
    idx = SpatialIndex(rng.random((30, 2)), 0.3)
    full = np.ones(30, dtype=bool)
    for mode in GossipMode:
        assert gossip_round(idx, full, mode, rng).all()


def test_star_push_probability():
    pos = [(0.5, 0.5), (0.6, 0.5), (0.4, 0.5), (0.5, 0.6), (0.5, 0.4)]
    idx = SpatialIndex(pos, 0.11)
    assert idx.degree.tolist() == [4, 1, 1, 1, 1]
    rng = np.random.default_rng(0)
    informed = np.array([True, False, False, False, False])
    rounds = 10 ** 5
    hits = sum(gossip_round(idx, informed, GossipMode.PUSH, rng)[1] for _ in range(rounds))
    assert abs(hits / rounds - 0.25) <= 0.01


def test_deliver_uses_round_start_state():
    # 0 -> 1 and 1 -> 2 in the same round: 2 must not learn through 1
    informed = np.array([True, False, False])
    out = deliver(informed, np.array([1, 2, 1]), GossipMode.PUSH)
    assert out.tolist() == [True, True, False]
    out = deliver(informed, np.array([1, 0, 1]), GossipMode.PULL)
    assert out.tolist() == [True, True, False]


def test_modes_differ_in_direction():
    informed = np.array([True, False])
    targets = np.array([-1, 0])  # only node 1 initiates, toward the informed node
    assert not deliver(informed, targets, GossipMode.PUSH)[1]
    assert deliver(informed, targets, GossipMode.PULL)[1]


def test_isolated_nodes_do_not_contact(rng):
    idx = SpatialIndex([(0.1, 0.1), (0.9, 0.9)], 0.1)
    assert choose_contacts(idx, rng).tolist() == [-1, -1]


def test_contacts_are_neighbors(rng):
    idx = SpatialIndex(rng.random((300, 2)), 0.1)
    t = choose_contacts(idx, rng)
    for i in range(300):
        assert (t[i] == -1) == (idx.degree[i] == 0)
        if t[i] >= 0:
            assert t[i] in idx.neighbors(i)


def test_two_nodes_complete_in_one_slot():
    world = WorldConfig(2, r=math.sqrt(2))
    run = run_spread(world, MobilitySpec.fully_random(), 0, seed=1)
    assert run.completion_slot == 1 and run.sizes == [1, 2]


def test_disconnected_static_never_completes(monkeypatch):
    from mobile_gossip import gossip

    pos = np.array([[0.1, 0.1], [0.12, 0.1], [0.9, 0.9], [0.88, 0.9], [0.9, 0.88]])

    def fixed_init(spec, world, rng):
        from mobile_gossip.mobility import MobilityState, Snapshot
        return Snapshot(pos), MobilityState()

    monkeypatch.setattr(gossip, "init_stationary", fixed_init)
    run = run_spread(WorldConfig(5, r=0.1), MobilitySpec.static(), 0, max_slots=10 ** 5, seed=2)
    assert run.completion_slot is None and run.sizes[-1] == 2


def test_max_slots_cutoff_returns_partial(rng):
    world = WorldConfig(500, r=0.02)
    run = run_spread(world, MobilitySpec.velocity(0.01), 0, max_slots=3, rng=rng)
    assert run.completion_slot is None and len(run.sizes) == 4


def complete_graph_pushpull(n, rng):
    """Direct simulation: every node calls a uniform other node each round."""
    informed = np.zeros(n, dtype=bool)
    informed[0] = True
    t = 0
    while not informed.all():
        t += 1
        callee = rng.integers(0, n - 1, size=n)
        callee += callee >= np.arange(n)
        new = informed.copy()
        new[callee[informed]] = True
        new[informed[callee]] = True
        informed = new
    return t


def test_complete_graph_regime_matches_direct_simulation():
    means = []
    for n in (64, 128, 256):
        world = WorldConfig(n, r=math.sqrt(2))
        rng = np.random.default_rng(n)
        sim = [run_spread(world, MobilitySpec.fully_random(), 0, rng=rng).completion_slot
               for _ in range(300)]
        ref = [complete_graph_pushpull(n, rng) for _ in range(300)]
        a, b = mean_and_se(sim), mean_and_se(ref)
        assert abs(a.mean - b.mean) <= 4 * math.hypot(a.std_error, b.std_error)
        means.append(a.mean)
    steps = np.diff(means)
    assert steps.min() > 0 and steps.max() / steps.min() < 2.0


def test_spreading_time_quantiles():
    assert spreading_time([traj(0, 5)] * 7, 0.3) == 5
    runs = [traj(0, 8)] * 99 + [traj(0, 12)]
    assert spreading_time(runs, 0.01) == 8
    assert spreading_time(runs, 0.005) == 12
    assert spreading_time([traj(0, 3), traj(1, 9)], 0.1) == 9
    assert spreading_time([traj(0, 3), traj(0, None)], 0.1) is None
    with pytest.raises(InvalidParameterError):
        spreading_time([], 0.1)
    with pytest.raises(InvalidParameterError):
        spreading_time([traj(0, 1)], 1.0)


def test_fully_random_beats_static():
    ratios = []
    for n in (256, 1024):
        world = WorldConfig(n)
        t = {}
        for spec in (MobilitySpec.static(), MobilitySpec.fully_random()):
            rng = np.random.default_rng(n)
            runs = [run_spread(world, spec, i % 10, rng=rng, max_slots=50 * n)
                    for i in range(60)]
            t[spec.kind] = spreading_time(runs, 0.05)
        ratios.append(t[MobilitySpec.static().kind] / t[MobilitySpec.fully_random().kind])
    assert ratios[0] > 1 and ratios[1] > ratios[0]


def test_completion_never_beats_doubling_under_push(rng):
    for n in (64, 200):
        for spec in (MobilitySpec.fully_random(), MobilitySpec.velocity(0.1)):
            run = run_spread(WorldConfig(n), spec, 0, GossipMode.PUSH, rng=rng, max_slots=50 * n)
            assert run.completion_slot >= optimal_time_floor(n)
            assert all(b <= 2 * a for a, b in zip(run.sizes, run.sizes[1:]))


def test_run_is_deterministic():
    world = WorldConfig(300)
    a = run_spread(world, MobilitySpec.velocity(0.05), 3, seed=11)
    b = run_spread(world, MobilitySpec.velocity(0.05), 3, seed=11)
    assert a.sizes == b.sizes


def test_source_range_checked():
    with pytest.raises(InvalidParameterError):
        run_spread(WorldConfig(10), MobilitySpec.static(), 10)


def test_increment_examples(rng):
    world = WorldConfig(2, r=math.sqrt(2))
    est = increment_estimate(world, MobilitySpec.fully_random(), [True, False],
                             GossipMode.PUSH_PULL, 50, rng)
    assert est.mean == 1.0 and est.std_error == 0.0
    est = increment_estimate(WorldConfig(20), MobilitySpec.fully_random(), np.ones(20, bool),
                             GossipMode.PUSH_PULL, 10, rng)
    assert est.mean == 0.0
    with pytest.raises(InvalidParameterError):
        increment_estimate(world, MobilitySpec.static(), [True, False], GossipMode.PUSH, 0, rng)


def test_increment_lower_bound_fully_random():
    from mobile_gossip.conductance import CutFamily, minimize_over_family

    world = WorldConfig(500)
    spec = MobilitySpec.fully_random()
    rng = np.random.default_rng(21)
    _, phi = minimize_over_family(world, spec, CutFamily(), 100, rng)
    informed = np.zeros(500, dtype=bool)
    informed[rng.choice(500, 100, replace=False)] = True
    est = increment_estimate(world, spec, informed, GossipMode.PUSH, 500, rng)
    assert est.mean >= 0.8 * 100 / 2 * phi.mean


def test_write_trajectories():
    import io

    buf = io.StringIO()
    write_trajectories([SpreadTrajectory([1, 2, 4], 2, 5, seed=9)], buf)
    assert buf.getvalue().splitlines() == [
        "run_id,source,seed,slot,informed_count", "0,5,9,0,1", "0,5,9,1,2", "0,5,9,2,4"]
