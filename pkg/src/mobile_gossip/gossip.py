"""
Move-and-gossip slot loop.

Each slot every node first moves, then contacts one uniformly chosen
neighbor in the post-move graph. All deliveries of a round are decided
against the informed set at the start of the round.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .geometry import SpatialIndex, WorldConfig
from .mobility import MobilitySpec, init_stationary, step


class GossipMode(enum.Enum):
    PUSH_PULL = "pushpull"
    PUSH = "push"
    PULL = "pull"


@dataclass
class SpreadTrajectory:
    """Informed-set sizes ``sizes[t] = |S(t)|`` of one run.

    For frozen (non-moving) graphs the run stops as soon as the source's
    connected component is fully informed, so ``sizes`` may end early with
    ``completion_slot=None``.
    """

    sizes: list
    completion_slot: int | None
    source: int
    seed: object = None
    n: int = field(default=0, repr=False)

    @property
    def completed(self) -> bool:
        return self.completion_slot is not None

    def size_at(self, t: int) -> int:
        return self.sizes[min(t, len(self.sizes) - 1)]


def choose_contacts(index: SpatialIndex, rng: np.random.Generator) -> np.ndarray:
    """Uniform neighbor choice per node; ``-1`` for isolated nodes."""
    deg = index.degree
    u = rng.random(index.n)
    pick = np.minimum((u * deg).astype(np.int64), np.maximum(deg - 1, 0))
    targets = np.full(index.n, -1, dtype=np.int64)
    has = deg > 0
    targets[has] = index.indices[index.indptr[:-1][has] + pick[has]]
    return targets


def deliver(informed: np.ndarray, targets: np.ndarray, mode: GossipMode) -> np.ndarray:
    """Apply one round of contacts ``i -> targets[i]`` to an informed mask."""
    new = informed.copy()
    has = targets >= 0
    src = np.flatnonzero(has)
    dst = targets[has]
    if mode in (GossipMode.PUSH_PULL, GossipMode.PUSH):
        new[dst[informed[src]]] = True
    if mode in (GossipMode.PUSH_PULL, GossipMode.PULL):
        new[src[informed[dst]]] = True
    return new


def gossip_round(index: SpatialIndex, informed: np.ndarray, mode: GossipMode,
                 rng: np.random.Generator) -> np.ndarray:
    informed = np.asarray(informed, dtype=bool)
    return deliver(informed, choose_contacts(index, rng), mode)


def default_max_slots(world: WorldConfig, spec: MobilitySpec, epsilon: float = 0.05) -> int:
    """Generous slot cap: 200 times the spreading-time bound, at most 10**6."""
    from .theory import table1_phi

    phi = table1_phi(spec, world.n, world.r).phi
    if phi <= 0:
        return 10 ** 6
    bound = 200.0 * (math.log(world.n) + math.log(1.0 / epsilon)) / phi
    return int(min(10 ** 6, math.ceil(bound)))


def run_spread(world: WorldConfig, spec: MobilitySpec, source: int,
               mode: GossipMode = GossipMode.PUSH_PULL, max_slots: int | None = None,
               rng: np.random.Generator | None = None, seed=None) -> SpreadTrajectory:
    """Simulate one broadcast from ``source`` until everyone is informed.

    Per slot: move, rebuild the neighbor index, gossip. The run is cut off
    after ``max_slots`` slots, in which case ``completion_slot`` is None.
    """
    n = world.n
    if not (0 <= source < n):
        raise InvalidParameterError(f"source {source} out of range for n={n}")
    if rng is None:
        rng = np.random.default_rng(seed)
    if max_slots is None:
        max_slots = default_max_slots(world, spec)
    if max_slots < 1:
        raise InvalidParameterError("max_slots must be >= 1")

    snap, state = init_stationary(spec, world, rng)
    informed = np.zeros(n, dtype=bool)
    informed[source] = True
    sizes = [1]
    index = None
    reachable = None
    completion = None
    for t in range(1, max_slots + 1):
        if not spec.frozen or index is None:
            snap = step(spec, state, snap, rng, world.boundary)
            index = SpatialIndex(snap.positions, world.r, world.boundary)
            if spec.frozen:
                labels = index.component_labels()
                reachable = int(np.count_nonzero(labels == labels[source]))
        informed = gossip_round(index, informed, mode, rng)
        count = int(np.count_nonzero(informed))
        sizes.append(count)
        if count == n:
            completion = t
            break
        if reachable is not None and count == reachable:
            break
    return SpreadTrajectory(sizes, completion, source, seed, n)


def spreading_time(runs, epsilon: float):
    """Empirical epsilon-spreading time over a collection of runs.

    For every source, the smallest ``t`` with at most a fraction ``epsilon``
    of its runs still incomplete at ``t``; the worst source wins. Returns
    None when some source never reaches that level within the recorded runs.
    """
    runs = list(runs)
    if not runs:
        raise InvalidParameterError("spreading_time needs at least one run")
    if not (0.0 < epsilon < 1.0):
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    by_source = {}
    for run in runs:
        by_source.setdefault(run.source, []).append(
            math.inf if run.completion_slot is None else run.completion_slot)
    worst = 0
    for times in by_source.values():
        times.sort()
        allowed = int(math.floor(epsilon * len(times) + 1e-9))
        t = times[len(times) - 1 - allowed]
        if math.isinf(t):
            return None
        worst = max(worst, t)
    return int(worst)


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    samples: int


def mean_and_se(values) -> Estimate:
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return Estimate(float(v.mean()), se, int(v.size))


def increment_estimate(world: WorldConfig, spec: MobilitySpec, informed, mode: GossipMode,
                       samples: int, rng: np.random.Generator) -> Estimate:
    """Monte-Carlo estimate of ``E[|S(t+1)| - |S(t)|]`` for a fixed informed set.

    Each sample draws a fresh stationary pre-move snapshot, applies one move
    and one gossip round.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    informed = np.asarray(getattr(informed, "members", informed), dtype=bool)
    if informed.shape != (world.n,) or not informed.any():
        raise InvalidParameterError("informed set must be a non-empty mask of length n")
    base = int(np.count_nonzero(informed))
    gains = np.empty(samples)
    for s in range(samples):
        snap, state = init_stationary(spec, world, rng)
        snap = step(spec, state, snap, rng, world.boundary)
        index = SpatialIndex(snap.positions, world.r, world.boundary)
        gains[s] = np.count_nonzero(gossip_round(index, informed, mode, rng)) - base
    return mean_and_se(gains)


TRAJECTORY_HEADER = ("run_id", "source", "seed", "slot", "informed_count")


def write_trajectories(runs, stream):
    """Dump runs as CSV, one row per recorded slot."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for run_id, run in enumerate(runs):
        for slot, count in enumerate(run.sizes):
            w.writerow((run_id, run.source, "" if run.seed is None else run.seed, slot, count))
