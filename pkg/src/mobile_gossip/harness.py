"""
Configuration-driven experiment runner.

Config files are INI-style (``configparser``)::

    [experiment]
    kind = sweep                 ; spread | sweep | conductance | density | increment | connectivity
    n = 128, 256, 512            ; required
    boundary = square            ; square | torus
    r =                          ; blank -> sqrt(8 log n / (pi n)) per n
    epsilon = 0.05
    rounds = 1000
    sources = 10
    samples =                    ; blank -> rounds
    seed = 0
    mode = pushpull              ; pushpull | push | pull
    cuts = bisect                ; bisect | sweep | random | exhaustive
    workers =                    ; blank -> os.cpu_count()
    out =                        ; blank -> standard output

    [model fr]                   ; one section per mobility model
    kind = fully-random

    [model slow]
    kind = velocity
    vmax_sqrt_n = 0.2            ; v_max = 0.2 / sqrt(n)

Model keys: ``kind`` plus ``k`` / ``k_frac``, ``vmax`` / ``vmax_r`` /
``vmax_sqrt_n``, ``nv`` / ``nv_frac``, ``rc`` / ``rc_r`` as the kind requires.
Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import logging
import math
import os
import platform
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .conductance import (BISECTION, CutFamily, brute_force_min, edge_count_quotient,
                          estimate_cut_quotient, minimize_over_family)
from .errors import ConfigError, InvalidParameterError
from .geometry import SpatialIndex, WorldConfig, default_radius, is_connected
from .gossip import GossipMode, increment_estimate, mean_and_se, run_spread, spreading_time
from .mobility import MobilityKind, MobilitySpec, Snapshot, step
from .theory import density_profile, table1_phi, velocity_phi

log = logging.getLogger(__name__)

EXPERIMENTS = ("spread", "sweep", "conductance", "density", "increment", "connectivity")
CUT_CHOICES = ("bisect", "sweep", "random", "exhaustive")
CSV_HEADER = ("experiment", "model", "n", "r", "param", "metric", "value",
              "std_error", "rounds", "seed")


@dataclass(frozen=True)
class ModelTemplate:
    """A mobility model whose parameters may scale with ``n`` and ``r``."""

    name: str
    kind: MobilityKind
    k: float | None = None
    k_frac: float | None = None
    vmax: float | None = None
    vmax_r: float | None = None
    vmax_sqrt_n: float | None = None
    nv: int | None = None
    nv_frac: float | None = None
    rc: float | None = None
    rc_r: float | None = None

    def resolve(self, n: int, r: float) -> MobilitySpec:
        kind = self.kind
        if kind is MobilityKind.STATIC:
            return MobilitySpec.static()
        if kind is MobilityKind.FULLY_RANDOM:
            return MobilitySpec.fully_random()
        if kind is MobilityKind.PARTIALLY_RANDOM:
            k = self.k if self.k is not None else round(self.k_frac * n)
            return MobilitySpec.partially_random(int(k))
        if kind is MobilityKind.VELOCITY:
            if self.vmax is not None:
                v = self.vmax
            elif self.vmax_r is not None:
                v = self.vmax_r * r
            else:
                v = self.vmax_sqrt_n / math.sqrt(n)
            return MobilitySpec.velocity(v)
        if kind is MobilityKind.AREA_1D:
            nv = self.nv if self.nv is not None else round(self.nv_frac * n)
            return MobilitySpec.area_1d(int(nv), n - int(nv))
        return MobilitySpec.area_2d(self.rc if self.rc is not None else self.rc_r * r)

    def to_items(self):
        items = [("kind", self.kind.value)]
        for f in fields(self)[2:]:
            v = getattr(self, f.name)
            if v is not None:
                items.append((f.name, repr(v)))
        return items


_MODEL_REQUIRES = {
    MobilityKind.STATIC: (),
    MobilityKind.FULLY_RANDOM: (),
    MobilityKind.PARTIALLY_RANDOM: (("k", "k_frac"),),
    MobilityKind.VELOCITY: (("vmax", "vmax_r", "vmax_sqrt_n"),),
    MobilityKind.AREA_1D: (("nv", "nv_frac"),),
    MobilityKind.AREA_2D: (("rc", "rc_r"),),
}


def make_model(name, kind, **params) -> ModelTemplate:
    """Build and validate a model template; raises ConfigError on bad params."""
    try:
        kind = kind if isinstance(kind, MobilityKind) else MobilityKind(kind)
    except ValueError:
        raise ConfigError(f"unknown mobility kind {kind!r}", field=f"model {name}.kind") from None
    allowed = {a for group in _MODEL_REQUIRES[kind] for a in group}
    for key, value in params.items():
        if value is None:
            continue
        if key not in allowed:
            raise ConfigError(f"parameter not used by {kind.value}", field=f"model {name}.{key}")
    for group in _MODEL_REQUIRES[kind]:
        given = [g for g in group if params.get(g) is not None]
        if len(given) != 1:
            raise ConfigError(f"{kind.value} needs exactly one of {', '.join(group)}",
                              field=f"model {name}.{group[0]}")
    return ModelTemplate(name, kind, **{k: v for k, v in params.items() if v is not None})


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n_values: tuple
    models: tuple = ()
    boundary: str = "square"
    r: float | None = None
    epsilon: float = 0.05
    rounds: int = 1000
    sources: int = 10
    samples: int | None = None
    seed: int = 0
    mode: str = "pushpull"
    cuts: str = "bisect"
    workers: int | None = None
    output_path: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"must be one of {EXPERIMENTS}", field="kind")
        if not self.n_values:
            raise ConfigError("at least one n is required", field="n")
        for n in self.n_values:
            if int(n) != n or n < 2:
                raise ConfigError(f"node counts must be integers >= 2, got {n}", field="n")
        if self.boundary not in ("square", "torus"):
            raise ConfigError("must be square or torus", field="boundary")
        if self.r is not None and not (0 < self.r <= math.sqrt(2)):
            raise ConfigError("must lie in (0, sqrt(2)]", field="r")
        if not (0 < self.epsilon < 1):
            raise ConfigError("must lie strictly between 0 and 1", field="epsilon")
        if self.rounds < 1:
            raise ConfigError("must be >= 1", field="rounds")
        if self.sources < 1:
            raise ConfigError("must be >= 1", field="sources")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("must be >= 1", field="samples")
        if self.mode not in {m.value for m in GossipMode}:
            raise ConfigError("must be pushpull, push or pull", field="mode")
        if self.cuts not in CUT_CHOICES:
            raise ConfigError(f"must be one of {CUT_CHOICES}", field="cuts")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("must be >= 1", field="workers")
        needs_models = self.experiment != "connectivity"
        if needs_models and not self.models:
            raise ConfigError("at least one [model ...] section is required", field="models")
        if self.experiment == "density":
            for m in self.models:
                if m.kind is not MobilityKind.VELOCITY:
                    raise ConfigError("density experiments need velocity models",
                                      field=f"model {m.name}.kind")

    def radius(self, n: int) -> float:
        return self.r if self.r is not None else default_radius(n)

    def world(self, n: int) -> WorldConfig:
        return WorldConfig(n, self.radius(n), self.boundary, self.seed)

    @property
    def sample_count(self) -> int:
        return self.samples if self.samples is not None else self.rounds

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        exp = {"kind": self.experiment, "n": ", ".join(str(n) for n in self.n_values),
               "boundary": self.boundary, "epsilon": repr(self.epsilon),
               "rounds": str(self.rounds), "sources": str(self.sources),
               "seed": str(self.seed), "mode": self.mode, "cuts": self.cuts}
        for key, value in (("r", self.r), ("samples", self.samples),
                           ("workers", self.workers), ("out", self.output_path)):
            if value is not None:
                exp[key] = repr(value) if isinstance(value, float) else str(value)
        cp["experiment"] = exp
        for m in self.models:
            cp[f"model {m.name}"] = dict(m.to_items())
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


_EXPERIMENT_KEYS = {
    "kind": str, "n": "ints", "boundary": str, "r": float, "epsilon": float,
    "rounds": int, "sources": int, "samples": int, "seed": int, "mode": str,
    "cuts": str, "workers": int, "out": str,
}
_MODEL_KEYS = {"kind": str, "k": int, "k_frac": float, "vmax": float, "vmax_r": float,
               "vmax_sqrt_n": float, "nv": int, "nv_frac": float, "rc": float,
               "rc_r": float}
_CONFIG_FIELD = {"kind": "experiment", "n": "n_values", "out": "output_path"}


def _line_of(text, section, key):
    cur = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("["):
            cur = s.strip("[]").strip()
        elif cur == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return lineno
    return None


def _convert(text, section, key, raw, kind):
    raw = raw.strip()
    if raw == "":
        return None
    try:
        if kind == "ints":
            return tuple(int(v) for v in raw.replace(",", " ").split())
        return kind(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r}", field=key,
                          line=_line_of(text, section, key)) from None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed config line", line=line) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(":")[0], line=exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("missing [experiment] section header", line=exc.lineno) from None

    values, models = {}, []
    for section in cp.sections():
        if section == "experiment":
            for key, raw in cp[section].items():
                if key not in _EXPERIMENT_KEYS:
                    raise ConfigError("unknown key", field=key, line=_line_of(text, section, key))
                values[_CONFIG_FIELD.get(key, key)] = _convert(
                    text, section, key, raw, _EXPERIMENT_KEYS[key])
        elif section.startswith("model "):
            name = section[len("model "):].strip()
            params = {}
            for key, raw in cp[section].items():
                if key not in _MODEL_KEYS:
                    raise ConfigError("unknown key", field=f"model {name}.{key}",
                                      line=_line_of(text, section, key))
                params[key] = _convert(text, section, key, raw, _MODEL_KEYS[key])
            kind = params.pop("kind", None)
            if kind is None:
                raise ConfigError("missing", field=f"model {name}.kind")
            models.append(make_model(name, kind, **params))
        else:
            raise ConfigError(f"unknown section [{section}]", field=section)
    if "experiment" not in values:
        raise ConfigError("missing", field="kind")
    if values.get("n_values") is None:
        raise ConfigError("missing", field="n")
    values = {k: v for k, v in values.items() if v is not None}
    return ExperimentConfig(models=tuple(models), **values)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, str(path))


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(config.to_ini().encode()).hexdigest()


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    model: str
    n: int
    r: float
    param: float | None
    metric: str
    value: float
    std_error: float | None
    rounds: int
    seed: int

    def as_tuple(self):
        def fmt(x):
            if x is None or (isinstance(x, float) and math.isnan(x)):
                return ""
            return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)
        return (self.experiment, self.model, str(self.n), fmt(self.r), fmt(self.param),
                self.metric, fmt(self.value), fmt(self.std_error), str(self.rounds),
                str(self.seed))


def derive_seed(master: int, point: int, replicate: int | None = None) -> np.random.SeedSequence:
    """Independent stream for a grid point (and optionally one replicate)."""
    key = (point,) if replicate is None else (point, replicate)
    return np.random.SeedSequence(entropy=master, spawn_key=key)


def _grid(config):
    points = []
    if config.experiment == "connectivity":
        for n in config.n_values:
            points.append((len(points), n, None))
        return points
    for n in config.n_values:
        for model in config.models:
            points.append((len(points), n, model))
    return points


def _se(est, count):
    return None if count < 2 or not math.isfinite(est) else est


def _run_point(config: ExperimentConfig, point):
    p, n, model = point
    world = config.world(n)
    spec = model.resolve(n, world.r) if model is not None else None
    label = model.name if model is not None else "static-rgg"
    param = None if spec is None else spec.param

    def row(metric, value, se=None, par=param, count=None):
        return ResultRow(config.experiment, label, n, world.r, par, metric, float(value),
                         se, config.rounds if count is None else count, config.seed)

    try:
        runner = _RUNNERS[config.experiment]
        return runner(config, p, world, spec, row)
    except Exception as exc:  # recorded per point; never aborts the grid
        log.error("grid point %d (n=%d, model=%s) failed: %s", p, n, label, exc)
        return [row(f"failed:{type(exc).__name__}", 1.0)]


def spread_runs(config: ExperimentConfig, n: int, model: ModelTemplate) -> list:
    """The raw trajectories behind one spread/sweep grid point."""
    p = next(i for i, pn, m in _grid(config) if pn == n and m == model)
    world = config.world(n)
    return _spread_runs(config, p, world, model.resolve(n, world.r))


def _spread_runs(config, p, world, spec):
    n = world.n
    mode = GossipMode(config.mode)
    pick = np.random.default_rng(derive_seed(config.seed, p))
    nsrc = min(config.sources, n)
    sources = pick.choice(n, size=nsrc, replace=False)
    runs = []
    for rep in range(config.rounds):
        rng = np.random.default_rng(derive_seed(config.seed, p, rep))
        runs.append(run_spread(world, spec, int(sources[rep % nsrc]), mode,
                               max_slots=50 * n, rng=rng, seed=rep))
    return runs


def _spread_point(config, p, world, spec, row):
    runs = _spread_runs(config, p, world, spec)
    done = [r.completion_slot for r in runs if r.completed]
    rows = []
    if done:
        est = mean_and_se(done)
        rows.append(row("mean_completion_slot", est.mean, _se(est.std_error, len(done))))
    t_eps = spreading_time(runs, config.epsilon)
    rows.append(row("spreading_time", math.nan if t_eps is None else t_eps))
    rows.append(row("incomplete_fraction", 1.0 - len(done) / len(runs)))
    if config.experiment == "sweep":
        rows.append(row("theory_phi", table1_phi(spec, world.n, world.r).phi))
        if t_eps is not None:
            rows.append(row("spreading_time_per_log_n", t_eps / math.log(world.n)))
    return rows


def _family(config):
    if config.cuts == "sweep":
        return CutFamily(random_balanced=0)
    if config.cuts == "random":
        return CutFamily.only(random_balanced=16)
    return None


def _conductance_point(config, p, world, spec, row):
    rng = np.random.default_rng(derive_seed(config.seed, p))
    samples = config.sample_count
    if config.cuts == "bisect":
        exact = estimate_cut_quotient(world, spec, BISECTION, samples, rng)
        edge_rng = np.random.default_rng(derive_seed(config.seed, p))
        edge = edge_count_quotient(world, spec, BISECTION, samples, edge_rng)
        rows = [row("quotient_exact", exact.mean, _se(exact.std_error, samples), count=samples),
                row("quotient_edge_count", edge.mean, _se(edge.std_error, samples), count=samples)]
    elif config.cuts == "exhaustive":
        _, est = brute_force_min(world, spec, samples, rng)
        rows = [row("quotient_min_exhaustive", est.mean, _se(est.std_error, samples),
                    count=samples)]
    else:
        _, est = minimize_over_family(world, spec, _family(config), samples, rng)
        rows = [row("quotient_min_family", est.mean, _se(est.std_error, samples),
                    count=samples)]
    rows.append(row("theory_phi", table1_phi(spec, world.n, world.r).phi))
    if spec.kind is MobilityKind.VELOCITY:
        rows.append(row("velocity_phi", velocity_phi(spec.v_max, world.r)))
    return rows


def mixing_profile(v_max: float, node_samples: int, rng: np.random.Generator, bins: int = 20):
    """Monte-Carlo post-move fraction of left-side nodes across a bisection line.

    Nodes start uniformly within ``2 v_max`` of the line ``x = 1/2`` on the
    torus, take one velocity-constrained move, and are binned by their
    landing offset ``l`` in ``[-v_max, v_max]``. Returns ``(centers,
    fraction_from_left, counts)``.
    """
    if not 0 < v_max <= 0.2:
        raise InvalidParameterError("mixing_profile needs 0 < v_max <= 0.2")
    start = np.column_stack((0.5 + (2.0 * rng.random(node_samples) - 1.0) * 2.0 * v_max,
                             rng.random(node_samples)))
    left = start[:, 0] < 0.5
    after = step(MobilitySpec.velocity(v_max), None, Snapshot(start), rng, "torus")
    offset = after.positions[:, 0] - 0.5
    edges = np.linspace(-v_max, v_max, bins + 1)
    which = np.digitize(offset, edges) - 1
    ok = (which >= 0) & (which < bins)
    counts = np.bincount(which[ok], minlength=bins)
    from_left = np.bincount(which[ok], weights=left[ok].astype(float), minlength=bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    with np.errstate(invalid="ignore"):
        return centers, from_left / counts, counts


def _density_point(config, p, world, spec, row):
    rng = np.random.default_rng(derive_seed(config.seed, p))
    centers, frac, counts = mixing_profile(spec.v_max, config.sample_count, rng)
    rows = []
    for l, f, c in zip(centers, frac, counts):
        se = math.sqrt(f * (1 - f) / c) if c > 1 else None
        rows.append(row("profile_empirical", f, se, par=float(l), count=int(c)))
        rows.append(row("profile_closed_form", density_profile(l, spec.v_max), par=float(l)))
    return rows


def _increment_point(config, p, world, spec, row):
    rng = np.random.default_rng(derive_seed(config.seed, p))
    samples = config.sample_count
    _, phi = minimize_over_family(world, spec, CutFamily(), samples, rng)
    rows = [row("phi_hat", phi.mean, _se(phi.std_error, samples), count=samples)]
    for frac in (0.1, 0.25, 0.5):
        size = max(1, int(world.n * frac))
        informed = np.zeros(world.n, dtype=bool)
        informed[rng.choice(world.n, size=size, replace=False)] = True
        est = increment_estimate(world, spec, informed, GossipMode(config.mode), samples, rng)
        rows.append(row("increment_mean", est.mean, _se(est.std_error, samples),
                        par=size, count=samples))
        rows.append(row("increment_lower_bound", size / 2 * phi.mean, par=size, count=samples))
    return rows


def _connectivity_point(config, p, world, spec, row):
    hits = 0
    for rep in range(config.rounds):
        rng = np.random.default_rng(derive_seed(config.seed, p, rep))
        pos = rng.random((world.n, 2))
        hits += is_connected(SpatialIndex(pos, world.r, world.boundary))
    f = hits / config.rounds
    se = math.sqrt(f * (1 - f) / config.rounds) if config.rounds > 1 else None
    return [row("connected_fraction", f, se)]


_RUNNERS = {
    "spread": _spread_point,
    "sweep": _spread_point,
    "conductance": _conductance_point,
    "density": _density_point,
    "increment": _increment_point,
    "connectivity": _connectivity_point,
}


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> list:
    """Run every grid point; rows come back in grid order."""
    points = _grid(config)
    workers = workers or config.workers or os.cpu_count() or 1
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            chunks = list(pool.map(_run_point, [config] * len(points), points))
    else:
        chunks = [_run_point(config, pt) for pt in points]
    return [r for chunk in chunks for r in chunk]


def _sort_key(row: ResultRow):
    param = row.param
    return (row.experiment, row.model, row.n, param is not None,
            param if param is not None else 0.0)


def sorted_rows(rows):
    return sorted(rows, key=_sort_key)


def write_csv(rows, path=None, stream=None):
    """Write rows in deterministic order to ``path`` (or an open text stream)."""
    rows = list(rows)
    if not rows:
        raise InvalidParameterError("refusing to write an empty result table")
    ordered = sorted_rows(rows)

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in ordered:
            w.writerow(r.as_tuple())

    if stream is not None:
        emit(stream)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        emit(fh)


def write_manifest(config: ExperimentConfig, path):
    import scipy
    lines = [
        f"config_sha256 = {config_hash(config)}",
        f"master_seed = {config.seed}",
        f"mobile_gossip = {__version__}",
        f"python = {platform.python_version()}",
        f"numpy = {np.__version__}",
        f"scipy = {scipy.__version__}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def override(config: ExperimentConfig, **changes) -> ExperimentConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    return replace(config, **changes)
