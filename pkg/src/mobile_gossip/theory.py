"""
Closed-form conductance predictions and spreading-time bounds.

Order-only predictions (``Theta(.)`` results) use a unit constant and are
flagged as such; compare them through ratios and shapes only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import InvalidParameterError, NumericalError
from .mobility import MobilityKind, MobilitySpec


class PredictionKind(enum.Enum):
    ORDER_ONLY = "order-only"
    CLOSED_FORM = "closed-form"
    APPROXIMATION = "approximation"


@dataclass(frozen=True)
class Prediction:
    model: str
    phi: float
    kind: PredictionKind

    @property
    def unspecified_constant(self) -> bool:
        return self.kind is PredictionKind.ORDER_ONLY


def static_phi(n: float) -> float:
    """``sqrt(log n / n)``, the static RGG conductance order."""
    if n < 2:
        raise InvalidParameterError(f"static_phi needs n >= 2, got {n}")
    return math.sqrt(math.log(n) / n)


def table1_phi(spec: MobilitySpec, n: int, r: float | None = None) -> Prediction:
    """Mobile conductance predicted for ``spec`` on ``n`` nodes with radius ``r``."""
    phi_s = static_phi(n)
    kind = spec.kind
    label = spec.label()
    if kind is MobilityKind.STATIC:
        return Prediction(label, phi_s, PredictionKind.ORDER_ONLY)
    if kind is MobilityKind.FULLY_RANDOM:
        return Prediction(label, 1.0, PredictionKind.ORDER_ONLY)
    if kind is MobilityKind.PARTIALLY_RANDOM:
        k = spec.k
        phi = ((n - k) / n) ** 2 * phi_s + k * (2 * n - k) / (2.0 * n * n)
        return Prediction(label, phi, PredictionKind.CLOSED_FORM)
    if kind is MobilityKind.AREA_1D:
        nv, nh = spec.n_v, spec.n_h
        phi = (nv * nv + nh * nh) / n ** 2 * phi_s + nv * nh / n ** 2
        return Prediction(label, phi, PredictionKind.CLOSED_FORM)
    if r is None:
        raise InvalidParameterError(f"{kind.value} prediction needs the radius r")
    if kind is MobilityKind.VELOCITY:
        return Prediction(label, max(spec.v_max, r), PredictionKind.ORDER_ONLY)
    return Prediction(label, max(spec.r_c, r), PredictionKind.ORDER_ONLY)


def partially_random_phi(n, k, phi_static):
    """Partially random formula with a measured static conductance plugged in."""
    return ((n - k) / n) ** 2 * phi_static + k * (2 * n - k) / (2.0 * n * n)


def area_1d_phi(n, n_v, n_h, phi_static):
    return (n_v ** 2 + n_h ** 2) / n ** 2 * phi_static + n_v * n_h / n ** 2


def density_profile(l, v_max):
    """Normalized post-move density of the left half's nodes at offset ``l``.

    Nodes start uniformly on ``l < 0`` and jump uniformly into a disk of
    radius ``v_max``; the result is the fraction of the disk lying beyond
    ``l``, i.e. ``(arccos u - u sqrt(1 - u^2)) / pi`` with ``u = l / v_max``.
    The right half's density is one minus this.
    """
    if not v_max > 0:
        raise InvalidParameterError(f"v_max must be positive, got {v_max}")
    u = np.clip(np.asarray(l, dtype=float) / v_max, -1.0, 1.0)
    out = (np.arccos(u) - u * np.sqrt(1.0 - u * u)) / math.pi
    return out if out.ndim else float(out)


def _profile(v_max):
    if v_max == 0:
        return lambda l: 1.0 if l < 0 else (0.5 if l == 0 else 0.0)
    return lambda l: density_profile(l, v_max)


def _band_profile(v_max):
    """Post-move density of the torus band ``0 <= x < 1/2`` (periodic in ``l``)."""
    left = _profile(v_max)
    reach = int(math.ceil(v_max)) + 1

    def f(l):
        # band = half-plane {x < 1/2} minus half-plane {x < 0}, summed over images
        s = 0.0
        for k in range(-reach, reach + 1):
            s += left(l - 0.5 - k) - left(l - k)
        return s
    return f


def contact_pairs_integral(v_max: float, r: float, n: int, boundary: str = "square",
                           rtol: float = 1e-6) -> float:
    """Expected number of contact pairs across a bisection after one move.

    ``boundary="square"`` integrates across a single bisection line of unit
    length. ``boundary="torus"`` integrates the same expression for the band
    ``x < 1/2`` on the torus, whose two boundary lines may interact.
    """
    if v_max < 0 or not r > 0:
        raise InvalidParameterError("need v_max >= 0 and r > 0")
    if boundary == "square":
        f = _profile(v_max)
        lo, hi = -v_max - r, v_max + r
        kinks = sorted({-v_max - r, -v_max, v_max, v_max + r, -v_max + r, v_max - r, -r, r, 0.0})
    elif boundary == "torus":
        if r >= 0.5:
            raise InvalidParameterError("torus integral needs r < 1/2")
        f = _band_profile(v_max)
        lo, hi = 0.0, 1.0
        kinks = set()
        for base in (0.0, 0.5, 1.0):
            for a in (-v_max - r, -v_max, v_max, v_max + r, -v_max + r, v_max - r, -r, r, 0.0):
                kinks.add(round((base + a) % 1.0, 12))
        kinks = sorted(kinks)
    else:
        raise InvalidParameterError(f"unknown boundary {boundary!r}")
    breaks = [p for p in kinks if lo < p < hi]

    def inner(x):
        # l = x + r sin(theta) removes the sqrt endpoint singularity
        def g(th):
            return (1.0 - f(x + r * math.sin(th))) * 2.0 * r * r * math.cos(th) ** 2
        pts = []
        for p in kinks:
            for shift in (-1.0, 0.0, 1.0) if boundary == "torus" else (0.0,):
                s = (p + shift - x) / r
                if -1.0 < s < 1.0:
                    pts.append(math.asin(s))
        val, _ = quad(g, -math.pi / 2, math.pi / 2, points=sorted({round(p, 12) for p in pts}) or None,
                      limit=200, epsabs=0.0, epsrel=rtol)
        return val

    total, _ = quad(lambda x: f(x) * inner(x), lo, hi, points=breaks or None,
                    limit=400, epsabs=0.0, epsrel=rtol)
    result = n * n * total
    if not math.isfinite(result):
        raise NumericalError("contact-pair quadrature did not produce a finite value")
    return result


def velocity_phi(v_max: float, r: float) -> float:
    """Piecewise approximation of the velocity-constrained mobile conductance."""
    if not r > 0 or v_max < 0:
        raise InvalidParameterError("need r > 0 and v_max >= 0")
    if v_max <= r / 2:
        return r / 2 + v_max ** 2 / (3 * r)
    return -r ** 3 / (48 * v_max ** 2) + r ** 2 / (6 * v_max) + 2 * v_max / 3


def spreading_time_bound(n: int, epsilon: float, phi: float, c: float = 1.0) -> int:
    """``ceil(c (log n + log(1/epsilon)) / phi)``."""
    if phi <= 0:
        raise InvalidParameterError("phi must be positive; zero conductance never spreads")
    if not (0 < epsilon < 1) or c <= 0:
        raise InvalidParameterError("need 0 < epsilon < 1 and c > 0")
    return math.ceil(c * (math.log(n) + math.log(1.0 / epsilon)) / phi - 1e-12)


def optimal_time_floor(n: int) -> int:
    """``ceil(log2 n)``: slots needed if the informed set at most doubles per slot."""
    if n < 2:
        raise InvalidParameterError("n must be >= 2")
    return math.ceil(math.log2(n) - 1e-12)
