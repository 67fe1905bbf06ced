"""
Unit-square world, random geometric graph snapshots and neighbor queries.

Positions are stored as ``(n, 2)`` float arrays with coordinates in [0, 1].
Two nodes are neighbors when their distance is at most ``r`` (closed ball).
Under ``boundary="torus"`` distances wrap around both axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidParameterError

BOUNDARIES = ("square", "torus")

# Half stencil of neighboring cells; with the cell itself this visits every
# unordered pair of adjacent cells exactly once.
_HALF_STENCIL = ((1, -1), (1, 0), (1, 1), (0, 1))


def default_radius(n: int) -> float:
    """Transmission radius ``sqrt(8 log n / (pi n))`` used for simulations."""
    if n < 2:
        raise InvalidParameterError(f"default radius needs n >= 2, got {n}")
    return math.sqrt(8.0 * math.log(n) / (math.pi * n))


def _check_boundary(boundary):
    if boundary not in BOUNDARIES:
        raise InvalidParameterError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")


@dataclass(frozen=True)
class WorldConfig:
    """Node count, radius, boundary semantics and master seed of a world.

    ``r=None`` selects :func:`default_radius`.
    """

    n: int
    r: float | None = None
    boundary: str = "square"
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidParameterError(f"n must be an integer >= 2, got {self.n}")
        _check_boundary(self.boundary)
        if self.r is None:
            object.__setattr__(self, "r", default_radius(self.n))
        if not (0.0 < self.r <= math.sqrt(2.0)):
            raise InvalidParameterError(f"r must lie in (0, sqrt(2)], got {self.r}")

    @property
    def contact_probability(self) -> float:
        """Common contact probability ``1 / (n pi r^2)`` with unit constant."""
        return 1.0 / (self.n * math.pi * self.r ** 2)


def displacement(a, b, boundary="square"):
    """Coordinate-wise difference ``b - a``, wrapped to [-1/2, 1/2] on the torus."""
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    if boundary == "torus":
        d = d - np.round(d)
    return d


def distance(a, b, boundary="square"):
    """Euclidean distance between positions (broadcasts over leading axes)."""
    _check_boundary(boundary)
    d = displacement(a, b, boundary)
    return np.hypot(d[..., 0], d[..., 1])


def as_positions(positions) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise InvalidParameterError(f"positions must have shape (n, 2), got {pos.shape}")
    if pos.size and (pos.min() < 0.0 or pos.max() > 1.0):
        raise InvalidParameterError("positions must lie in the unit square")
    return pos


@dataclass(frozen=True)
class CutSet:
    """A subset of node ids stored as a boolean mask."""

    members: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        mask = np.array(self.members, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "members", mask)

    @classmethod
    def from_ids(cls, n, ids, label=""):
        mask = np.zeros(n, dtype=bool)
        ids = np.asarray(list(ids), dtype=int)
        if ids.size and (ids.min() < 0 or ids.max() >= n):
            raise InvalidParameterError("cut contains out-of-range node ids")
        mask[ids] = True
        return cls(mask, label)

    @property
    def n(self) -> int:
        return self.members.size

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.members))

    @property
    def ids(self) -> np.ndarray:
        return np.flatnonzero(self.members)

    def complement(self) -> "CutSet":
        return CutSet(~self.members, f"~{self.label}" if self.label else "")

    def is_valid_bottleneck_cut(self) -> bool:
        """True iff ``1 <= |S| <= n // 2``."""
        return 1 <= self.size <= self.n // 2

    def __eq__(self, other):
        if not isinstance(other, CutSet):
            return NotImplemented
        return np.array_equal(self.members, other.members)

    def __hash__(self):
        return hash(self.members.tobytes())


def _grid_size(n, r):
    # cells no smaller than r; no point in many more cells than nodes
    return max(1, min(int(math.floor(1.0 / r)), 2 * int(math.isqrt(n)) + 2))


def _cell_pairs(pos, r, boundary):
    """Candidate pairs ``(i, j)`` from the cell grid, each unordered pair once."""
    n = len(pos)
    m = _grid_size(n, r)
    cell = np.minimum((pos * m).astype(np.int64), m - 1)
    cid = cell[:, 0] * m + cell[:, 1]
    order = np.argsort(cid, kind="stable")
    counts = np.bincount(cid, minlength=m * m)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))

    out_i, out_j = [], []
    # same cell: only j > i within the sorted block
    for dx, dy in ((0, 0),) + _HALF_STENCIL:
        cx = cell[:, 0] + dx
        cy = cell[:, 1] + dy
        if boundary == "torus":
            cx %= m
            cy %= m
            src = np.arange(n)
        else:
            ok = (cx >= 0) & (cx < m) & (cy >= 0) & (cy < m)
            src = np.flatnonzero(ok)
            cx, cy = cx[ok], cy[ok]
        other = cx * m + cy
        cnt = counts[other]
        total = int(cnt.sum())
        if total == 0:
            continue
        rep_i = np.repeat(src, cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        rep_j = order[np.repeat(starts[other], cnt) + offs]
        if dx == 0 and dy == 0:
            keep = rep_j > rep_i
            rep_i, rep_j = rep_i[keep], rep_j[keep]
        out_i.append(rep_i)
        out_j.append(rep_j)
    if not out_i:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(out_i), np.concatenate(out_j)


def _all_pairs(n):
    i, j = np.triu_indices(n, k=1)
    return i.astype(np.int64), j.astype(np.int64)


class SpatialIndex:
    """Cell-grid index over one snapshot, materialized as an adjacency list.

    The grid has ``floor(1/r)`` cells per side (capped near ``2 sqrt(n)``),
    so every cell side is at least ``r`` and a neighbor query only scans the
    3x3 block around a cell.
    Grids with fewer than three cells per side fall back to all pairs.

    Attributes:
        pairs: ``(E, 2)`` array of unordered neighbor pairs with ``i < j``.
        indptr, indices: CSR adjacency (neighbors of ``i`` are
            ``indices[indptr[i]:indptr[i + 1]]``, in no particular order).
        degree: neighbor count per node.
    """

    def __init__(self, positions, r, boundary="square"):
        if not r > 0:
            raise InvalidParameterError(f"r must be positive, got {r}")
        _check_boundary(boundary)
        pos = as_positions(positions).copy()
        pos.setflags(write=False)
        self.positions = pos
        self.r = float(r)
        self.boundary = boundary
        n = self.n = len(pos)
        self.cells_per_side = _grid_size(n, self.r)

        if n < 2:
            i = j = np.empty(0, dtype=np.int64)
        elif self.cells_per_side < 3:
            i, j = _all_pairs(n)
        else:
            i, j = _cell_pairs(pos, self.r, boundary)
        if i.size:
            x, y = pos[:, 0], pos[:, 1]
            dx = x[j] - x[i]
            dy = y[j] - y[i]
            if boundary == "torus":
                dx -= np.rint(dx)
                dy -= np.rint(dy)
            close = dx * dx + dy * dy <= self.r * self.r
            i, j = np.minimum(i[close], j[close]), np.maximum(i[close], j[close])
        self.pairs = np.column_stack((i, j)) if i.size else np.empty((0, 2), dtype=np.int64)
        self.pairs.setflags(write=False)

        src = np.concatenate((i, j))
        dst = np.concatenate((j, i))
        # counting sort by source id; neighbor lists are sorted on query
        small = np.int16 if n < 2 ** 15 else np.int64
        key = np.argsort(src.astype(small), kind="stable")
        self.indices = dst[key]
        self.degree = np.bincount(src, minlength=n)
        self.indptr = np.concatenate(([0], np.cumsum(self.degree)))
        for a in (self.indices, self.degree, self.indptr):
            a.setflags(write=False)

    @property
    def edge_count(self) -> int:
        return len(self.pairs)

    def neighbors(self, i) -> np.ndarray:
        """Sorted neighbor ids of node ``i``."""
        if not (0 <= int(i) < self.n) or int(i) != i:
            raise InvalidParameterError(f"node id {i} out of range for n={self.n}")
        return np.sort(self.indices[self.indptr[i]:self.indptr[i + 1]])

    def adjacency(self) -> csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def contact_matrix(self) -> csr_matrix:
        """Row-stochastic gossip matrix ``P_ij = 1/deg(i)`` over neighbors.

        Rows of isolated nodes are all zero.
        """
        deg = np.repeat(self.degree, self.degree).astype(float)
        data = 1.0 / deg if deg.size else deg
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def component_labels(self) -> np.ndarray:
        _, labels = connected_components(self.adjacency(), directed=False)
        return labels


def build_index(snapshot, r, boundary="square") -> SpatialIndex:
    """Index a snapshot (anything with ``.positions``) or a raw position array."""
    positions = getattr(snapshot, "positions", snapshot)
    return SpatialIndex(positions, r, boundary)


def neighbors(index: SpatialIndex, i) -> set:
    return set(index.neighbors(i).tolist())


def _mask_of(cut, n):
    mask = cut.members if isinstance(cut, CutSet) else np.asarray(cut, dtype=bool)
    if mask.shape != (n,):
        raise InvalidParameterError(f"cut mask must have length {n}")
    return mask


def crossing_edges(index: SpatialIndex, cut) -> int:
    """Number of unordered neighbor pairs with exactly one endpoint in ``cut``."""
    mask = _mask_of(cut, index.n)
    k = int(np.count_nonzero(mask))
    if k == 0 or k == index.n:
        raise InvalidParameterError("cut and its complement must both be non-empty")
    p = index.pairs
    return int(np.count_nonzero(mask[p[:, 0]] != mask[p[:, 1]]))


def is_connected(index: SpatialIndex) -> bool:
    if index.n <= 1:
        return True
    ncomp, _ = connected_components(index.adjacency(), directed=False)
    return ncomp == 1


def brute_force_pairs(positions, r, boundary="square") -> set:
    """All neighbor pairs by O(n^2) distance checks; reference for tests."""
    pos = np.asarray(positions, dtype=float)
    d = distance(pos[:, None, :], pos[None, :, :], boundary)
    i, j = np.nonzero(np.triu(d <= r, k=1))
    return set(zip(i.tolist(), j.tolist()))
