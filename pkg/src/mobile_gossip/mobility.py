"""
Mobility models: stationary initialization and the one-slot move phase.

Every model keeps the node distribution stationary. Random draws are made
as full length-``n`` blocks per slot and node ``i`` always reads row ``i``,
so a node's trajectory does not depend on the order in which nodes are
updated. Rejection sampling (square boundary) redraws whole blocks and only
consumes rows of still-pending nodes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .geometry import WorldConfig, displacement


class MobilityKind(enum.Enum):
    STATIC = "static"
    FULLY_RANDOM = "fully-random"
    PARTIALLY_RANDOM = "partially-random"
    VELOCITY = "velocity"
    AREA_1D = "area-1d"
    AREA_2D = "area-2d"


@dataclass(frozen=True)
class MobilitySpec:
    """Which transition law applies, plus its parameters.

    Use the classmethod constructors; parameters that do not belong to the
    kind must stay ``None``.
    """

    kind: MobilityKind
    k: int | None = None
    v_max: float | None = None
    n_v: int | None = None
    n_h: int | None = None
    r_c: float | None = None

    @classmethod
    def static(cls):
        return cls(MobilityKind.STATIC)

    @classmethod
    def fully_random(cls):
        return cls(MobilityKind.FULLY_RANDOM)

    @classmethod
    def partially_random(cls, k):
        return cls(MobilityKind.PARTIALLY_RANDOM, k=int(k))

    @classmethod
    def velocity(cls, v_max):
        return cls(MobilityKind.VELOCITY, v_max=float(v_max))

    @classmethod
    def area_1d(cls, n_v, n_h):
        return cls(MobilityKind.AREA_1D, n_v=int(n_v), n_h=int(n_h))

    @classmethod
    def area_2d(cls, r_c):
        return cls(MobilityKind.AREA_2D, r_c=float(r_c))

    def __post_init__(self):
        needed = {
            MobilityKind.STATIC: set(),
            MobilityKind.FULLY_RANDOM: set(),
            MobilityKind.PARTIALLY_RANDOM: {"k"},
            MobilityKind.VELOCITY: {"v_max"},
            MobilityKind.AREA_1D: {"n_v", "n_h"},
            MobilityKind.AREA_2D: {"r_c"},
        }[self.kind]
        for name in ("k", "v_max", "n_v", "n_h", "r_c"):
            present = getattr(self, name) is not None
            if present != (name in needed):
                state = "missing" if name in needed else "not allowed"
                raise InvalidParameterError(f"{name} is {state} for {self.kind.value}")
        if self.k is not None and self.k < 0:
            raise InvalidParameterError(f"k must be >= 0, got {self.k}")
        if self.v_max is not None and not (0.0 <= self.v_max <= math.sqrt(2.0)):
            raise InvalidParameterError(f"v_max must lie in [0, sqrt(2)], got {self.v_max}")
        if self.n_v is not None and (self.n_v < 0 or self.n_h < 0):
            raise InvalidParameterError("n_v and n_h must be non-negative")
        if self.r_c is not None and not self.r_c > 0:
            raise InvalidParameterError(f"r_c must be positive, got {self.r_c}")

    def validate_for(self, n):
        if self.kind is MobilityKind.PARTIALLY_RANDOM and self.k > n:
            raise InvalidParameterError(f"k={self.k} exceeds n={n}")
        if self.kind is MobilityKind.AREA_1D and self.n_v + self.n_h != n:
            raise InvalidParameterError(f"n_v + n_h = {self.n_v + self.n_h} != n = {n}")

    @property
    def frozen(self) -> bool:
        """True when no node can ever move (the graph never changes)."""
        return (
            self.kind is MobilityKind.STATIC
            or (self.kind is MobilityKind.PARTIALLY_RANDOM and self.k == 0)
            or (self.kind is MobilityKind.VELOCITY and self.v_max == 0.0)
        )

    @property
    def param(self):
        """The single scalar parameter of the model (None if it has none)."""
        if self.kind is MobilityKind.AREA_1D:
            return self.n_v
        return next((v for v in (self.k, self.v_max, self.r_c) if v is not None), None)

    def label(self) -> str:
        p = self.param
        if self.kind is MobilityKind.AREA_1D:
            return f"{self.kind.value}(nv={self.n_v},nh={self.n_h})"
        return self.kind.value if p is None else f"{self.kind.value}({p:g})"


@dataclass(frozen=True)
class MobilityState:
    """Per-run auxiliary data fixed at initialization.

    Attributes:
        mobile_mask: for partially random mobility, True marks the k mobile nodes.
        vertical_mask: for 1-d area constrained mobility, True marks V-nodes
            (x fixed, y redrawn); the rest are H-nodes.
        home: for 2-d area constrained mobility, ``(n, 2)`` home points.
    """

    mobile_mask: np.ndarray | None = None
    vertical_mask: np.ndarray | None = None
    home: np.ndarray | None = None


@dataclass(frozen=True)
class Snapshot:
    positions: np.ndarray
    slot: int = 0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return len(self.positions)


def _disk_offsets(rng, n, radius):
    rad = radius * np.sqrt(rng.random(n))
    ang = 2.0 * math.pi * rng.random(n)
    return np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))


def _inside(p):
    return np.all((p >= 0.0) & (p <= 1.0), axis=1)


def _around(centers, radius, rng, boundary, active=None):
    """Uniform point in the disk around each center; clipped disks by rejection."""
    n = len(centers)
    out = np.array(centers, dtype=float)
    pending = np.ones(n, dtype=bool) if active is None else active.copy()
    while pending.any():
        cand = centers + _disk_offsets(rng, n, radius)
        if boundary == "torus":
            out[pending] = cand[pending] % 1.0
            break
        ok = pending & _inside(cand)
        out[ok] = cand[ok]
        pending &= ~ok
    return out


def init_stationary(spec: MobilitySpec, world: WorldConfig, rng: np.random.Generator):
    """Draw ``X(0)`` from the stationary law together with the run's fixed state."""
    n = world.n
    spec.validate_for(n)
    pos = rng.random((n, 2))
    state = MobilityState()
    if spec.kind is MobilityKind.PARTIALLY_RANDOM:
        mask = np.zeros(n, dtype=bool)
        mask[rng.choice(n, size=spec.k, replace=False)] = True
        state = MobilityState(mobile_mask=mask)
    elif spec.kind is MobilityKind.AREA_1D:
        mask = np.zeros(n, dtype=bool)
        mask[rng.choice(n, size=spec.n_v, replace=False)] = True
        state = MobilityState(vertical_mask=mask)
    elif spec.kind is MobilityKind.AREA_2D:
        home = pos
        pos = _around(home, spec.r_c, rng, world.boundary)
        state = MobilityState(home=home)
    for a in (state.mobile_mask, state.vertical_mask, state.home):
        if a is not None:
            a.setflags(write=False)
    return Snapshot(pos, 0), state


def step(spec: MobilitySpec, state: MobilityState, snap: Snapshot,
         rng: np.random.Generator, boundary: str = "square") -> Snapshot:
    """Apply one move phase to every node."""
    n = snap.n
    pos = snap.positions
    kind = spec.kind
    if spec.frozen:
        new = pos
    elif kind is MobilityKind.FULLY_RANDOM:
        new = rng.random((n, 2))
    elif kind is MobilityKind.PARTIALLY_RANDOM:
        draw = rng.random((n, 2))
        new = np.where(state.mobile_mask[:, None], draw, pos)
    elif kind is MobilityKind.VELOCITY:
        new = _around(pos, spec.v_max, rng, boundary)
    elif kind is MobilityKind.AREA_1D:
        draw = rng.random(n)
        new = pos.copy()
        v = state.vertical_mask
        new[v, 1] = draw[v]
        new[~v, 0] = draw[~v]
    elif kind is MobilityKind.AREA_2D:
        new = _around(state.home, spec.r_c, rng, boundary)
    else:  # pragma: no cover
        raise InvalidParameterError(f"unknown mobility kind {kind}")
    return Snapshot(new, snap.slot + 1)


def speed_of(snap_before: Snapshot, snap_after: Snapshot, i: int, boundary="square") -> float:
    """Displacement magnitude of node ``i`` over one slot."""
    if snap_after.slot != snap_before.slot + 1:
        raise InvalidParameterError(
            f"snapshots are not consecutive (slots {snap_before.slot} -> {snap_after.slot})")
    d = displacement(snap_before.positions[i], snap_after.positions[i], boundary)
    return float(math.hypot(d[0], d[1]))
