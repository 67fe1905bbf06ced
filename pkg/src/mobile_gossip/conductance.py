"""
Monte-Carlo estimation of mobile conductance.

A cut is a node set fixed before the move. For a cut ``S`` the sampled
quantity is the post-move cut quotient

    sum_{i in S, j not in S, j ~ i} 1/deg(i)  /  |S|

(isolated nodes contribute nothing), and mobile conductance is its expectation
over the move, minimized over cuts with ``1 <= |S| <= n/2``.

Two sampling regimes are supported:

* marginal (default): every sample draws a fresh stationary pre-move
  snapshot; geometric cut rules are materialized on that snapshot.
* conditional: pass ``snapshot`` (and ``state``); every sample is an
  independent move from that fixed configuration.

Within one call all cuts share the same samples (common random numbers).
"""

from __future__ import annotations

import csv
import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .geometry import CutSet, SpatialIndex, WorldConfig
from .gossip import mean_and_se
from .mobility import MobilityKind, MobilitySpec, MobilityState, Snapshot, init_stationary, step

EXHAUSTIVE_LIMIT = 14


class QuotientKind(enum.Enum):
    EXACT_PIJ = "exact-pij"
    EDGE_COUNT = "edge-count"


@dataclass(frozen=True)
class ConductanceEstimate:
    mean: float
    std_error: float
    samples: int
    cut: str = ""
    quotient_kind: QuotientKind = QuotientKind.EXACT_PIJ


def _smaller_side(mask, label):
    n = mask.size
    if np.count_nonzero(mask) > n // 2:
        mask = ~mask
    if not mask.any():
        return None
    return CutSet(mask, label)


@dataclass(frozen=True)
class LineCut:
    """Nodes on the low side of an axis-parallel line (smaller side kept).

    ``axis=0`` is the vertical line ``x = offset``, ``axis=1`` the horizontal
    line ``y = offset``.
    """

    axis: int
    offset: float

    @property
    def label(self):
        return f"{'v' if self.axis == 0 else 'h'}line@{self.offset:.4f}"

    def materialize(self, snap: Snapshot, state: MobilityState | None = None):
        return _smaller_side(snap.positions[:, self.axis] < self.offset, self.label)


@dataclass(frozen=True)
class AxisBisection:
    """Bisection along each node's fixed coordinate.

    With 1-d area constrained mobility V-nodes (fixed x) are split by
    ``x < 1/2`` and H-nodes (fixed y) by ``y < 1/2``, so no node can cross
    the cut during a move. For other models this is the vertical bisection.
    """

    label = "axis-bisection"

    def materialize(self, snap: Snapshot, state: MobilityState | None = None):
        pos = snap.positions
        side = pos[:, 0] < 0.5
        if state is not None and state.vertical_mask is not None:
            v = state.vertical_mask
            side = np.where(v, pos[:, 0] < 0.5, pos[:, 1] < 0.5)
        return _smaller_side(side, self.label)


BISECTION = LineCut(0, 0.5)


def _materialize(cut, snap, state):
    if isinstance(cut, CutSet):
        return cut
    return cut.materialize(snap, state)


def _label(cut):
    return getattr(cut, "label", "") or "cut"


@dataclass(frozen=True)
class CutFamily:
    """Candidate cuts searched by :func:`minimize_over_family`."""

    vertical_offsets: tuple = tuple((np.arange(32) + 0.5) / 32)
    horizontal_offsets: tuple = tuple((np.arange(32) + 0.5) / 32)
    bisection: bool = True
    axis_bisection: bool = True
    random_balanced: int = 8
    exhaustive: bool = False

    @classmethod
    def only(cls, *, vertical=(), horizontal=(), bisection=False, axis_bisection=False,
             random_balanced=0, exhaustive=False):
        return cls(tuple(vertical), tuple(horizontal), bisection, axis_bisection,
                   random_balanced, exhaustive)

    def members(self, n: int, rng: np.random.Generator) -> list:
        """Cuts in deterministic generation order (random sets drawn from ``rng``)."""
        out = []
        if self.bisection:
            out.append(BISECTION)
        if self.axis_bisection:
            out.append(AxisBisection())
        out += [LineCut(0, float(o)) for o in self.vertical_offsets]
        out += [LineCut(1, float(o)) for o in self.horizontal_offsets]
        for b in range(self.random_balanced):
            ids = rng.choice(n, size=n // 2, replace=False)
            out.append(CutSet.from_ids(n, ids, f"random{b}"))
        if self.exhaustive:
            out += exhaustive_cuts(n)
        return out


def exhaustive_cuts(n: int) -> list:
    """Every node set of size 1..n//2, by size then lexicographically."""
    if n > EXHAUSTIVE_LIMIT:
        raise InvalidParameterError(
            f"exhaustive cut enumeration refused for n={n} > {EXHAUSTIVE_LIMIT}")
    cuts = []
    for size in range(1, n // 2 + 1):
        for ids in itertools.combinations(range(n), size):
            cuts.append(CutSet.from_ids(n, ids, "{" + ",".join(map(str, ids)) + "}"))
    return cuts


def _cut_matrix(cuts, n):
    mat = np.zeros((n, len(cuts)), dtype=float)
    for c, cut in enumerate(cuts):
        if cut is not None:
            mat[:, c] = cut.members
    return mat


def _evaluate(index: SpatialIndex, mat: np.ndarray, kind: str) -> np.ndarray:
    """Quotients (or crossing counts) for every column of a cut matrix."""
    sizes = mat.sum(axis=0)
    if kind == "count":
        p = index.pairs
        return (mat[p[:, 0]] != mat[p[:, 1]]).sum(axis=0).astype(float)
    if kind == QuotientKind.EDGE_COUNT:
        p = index.pairs
        cross = (mat[p[:, 0]] != mat[p[:, 1]]).sum(axis=0)
        prob = 1.0 / (index.n * math.pi * index.r ** 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(sizes > 0, prob * cross / sizes, np.nan)
    w = index.contact_matrix()
    numer = (mat * (w @ (1.0 - mat))).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(sizes > 0, numer / sizes, np.nan)


def _check_state(spec, snapshot, state):
    if snapshot is None:
        return
    needs = {
        MobilityKind.PARTIALLY_RANDOM: "mobile_mask",
        MobilityKind.AREA_1D: "vertical_mask",
        MobilityKind.AREA_2D: "home",
    }.get(spec.kind)
    if needs and (state is None or getattr(state, needs) is None):
        raise InvalidParameterError(f"conditional sampling of {spec.kind.value} needs its state")


def sample_cut_values(world: WorldConfig, spec: MobilitySpec, cuts, samples: int,
                      rng: np.random.Generator, snapshot: Snapshot | None = None,
                      state: MobilityState | None = None,
                      kind=QuotientKind.EXACT_PIJ) -> np.ndarray:
    """``(samples, len(cuts))`` array of sampled values, shared across cuts.

    ``kind`` is a :class:`QuotientKind` or ``"count"`` for raw crossing-edge
    counts. Entries are NaN where a geometric rule produced no valid cut.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    _check_state(spec, snapshot, state)
    spec.validate_for(world.n)
    n = world.n
    out = np.empty((samples, len(cuts)))
    fixed = None
    if snapshot is not None:
        state = state or MobilityState()
        fixed = _cut_matrix([_materialize(c, snapshot, state) for c in cuts], n)
    for s in range(samples):
        if snapshot is None:
            pre, st = init_stationary(spec, world, rng)
            mat = _cut_matrix([_materialize(c, pre, st) for c in cuts], n)
        else:
            pre, st, mat = snapshot, state, fixed
        post = step(spec, st, pre, rng, world.boundary)
        index = SpatialIndex(post.positions, world.r, world.boundary)
        out[s] = _evaluate(index, mat, kind)
    return out


def _estimate(values, cut, kind):
    v = values[~np.isnan(values)]
    if v.size == 0:
        return ConductanceEstimate(math.nan, math.nan, 0, _label(cut), kind)
    est = mean_and_se(v)
    se = est.std_error if v.size > 1 else 0.0
    return ConductanceEstimate(est.mean, se, est.samples, _label(cut), kind)


def cut_quotient_sample(world, spec, cut, rng, snapshot=None, state=None) -> float:
    """One draw of the post-move cut quotient."""
    return float(sample_cut_values(world, spec, [cut], 1, rng, snapshot, state)[0, 0])


def estimate_cut_quotient(world, spec, cut, samples, rng, snapshot=None, state=None
                          ) -> ConductanceEstimate:
    vals = sample_cut_values(world, spec, [cut], samples, rng, snapshot, state)[:, 0]
    return _estimate(vals, cut, QuotientKind.EXACT_PIJ)


def edge_count_quotient(world, spec, cut, samples, rng, snapshot=None, state=None
                        ) -> ConductanceEstimate:
    """Quotient ``P(n, r) E[N_S] / |S|`` with ``P(n, r) = 1 / (n pi r^2)``."""
    vals = sample_cut_values(world, spec, [cut], samples, rng, snapshot, state,
                             kind=QuotientKind.EDGE_COUNT)[:, 0]
    return _estimate(vals, cut, QuotientKind.EDGE_COUNT)


def expected_crossing_edges(world, spec, cut, samples, rng, snapshot=None, state=None):
    """Monte-Carlo mean of the post-move crossing-edge count ``N_S``."""
    vals = sample_cut_values(world, spec, [cut], samples, rng, snapshot, state,
                             kind="count")[:, 0]
    return mean_and_se(vals[~np.isnan(vals)])


def _argmin(cuts, values, kind):
    means = np.array([np.nanmean(col) if np.any(~np.isnan(col)) else np.inf
                      for col in values.T])
    if not np.isfinite(means).any():
        raise InvalidParameterError("cut family produced no valid cut")
    best = int(np.argmin(means))  # first occurrence wins ties
    return cuts[best], _estimate(values[:, best], cuts[best], kind)


def minimize_over_family(world, spec, family: CutFamily, samples, rng,
                         snapshot=None, state=None, kind=QuotientKind.EXACT_PIJ):
    """Family member with the smallest estimated quotient.

    Returns ``(cut, estimate)``; ``cut`` is the rule or node set as generated.
    """
    cut_rng, sample_rng = rng.spawn(2)
    cuts = family.members(world.n, cut_rng)
    if not cuts:
        raise InvalidParameterError("empty cut family")
    values = sample_cut_values(world, spec, cuts, samples, sample_rng, snapshot, state, kind)
    return _argmin(cuts, values, kind)


def family_estimates(world, spec, family: CutFamily, samples, rng,
                     snapshot=None, state=None, kind=QuotientKind.EXACT_PIJ) -> list:
    """Estimates for every family member (same sampling as the minimizer)."""
    cut_rng, sample_rng = rng.spawn(2)
    cuts = family.members(world.n, cut_rng)
    values = sample_cut_values(world, spec, cuts, samples, sample_rng, snapshot, state, kind)
    return [_estimate(values[:, c], cut, kind) for c, cut in enumerate(cuts)]


def brute_force_min(world, spec, samples, rng, snapshot=None, state=None,
                    kind=QuotientKind.EXACT_PIJ):
    """Exact minimum over all cuts of size 1..n//2, conditional on one snapshot.

    Without ``snapshot`` one stationary configuration is drawn first. Given
    the same generator seed and snapshot, the move samples are identical to
    those of :func:`minimize_over_family`, so the two are directly comparable.
    """
    if world.n > EXHAUSTIVE_LIMIT:
        raise InvalidParameterError(
            f"brute-force minimization refused for n={world.n} > {EXHAUSTIVE_LIMIT}")
    cut_rng, sample_rng = rng.spawn(2)
    if snapshot is None:
        snapshot, state = init_stationary(spec, world, cut_rng)
    cuts = exhaustive_cuts(world.n)
    values = sample_cut_values(world, spec, cuts, samples, sample_rng, snapshot, state, kind)
    return _argmin(cuts, values, kind)


ESTIMATE_HEADER = ("model", "n", "r", "param", "cut_id", "quotient_kind",
                   "mean", "std_error", "samples")


def write_estimates(rows, stream):
    """CSV dump; ``rows`` yields ``(world, spec, estimate)`` triples."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(ESTIMATE_HEADER)
    for world, spec, est in rows:
        param = spec.param
        w.writerow((spec.kind.value, world.n, repr(world.r), "" if param is None else param,
                    est.cut, est.quotient_kind.value, repr(est.mean), repr(est.std_error),
                    est.samples))
