"""
Command-line entry point (``mobile-gossip``).

Every data-producing subcommand writes the result table
``experiment,model,n,r,param,metric,value,std_error,rounds,seed`` to
standard output or ``--out``; diagnostics go to standard error.
Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .errors import ConfigError, InvalidParameterError
from .geometry import default_radius
from .harness import (CUT_CHOICES, ExperimentConfig, load_config, make_model, override,
                      run_experiment, write_csv, write_manifest)
from .mobility import MobilityKind
from .theory import table1_phi, velocity_phi

log = logging.getLogger("mobile_gossip")

RESULT_SCHEMA = "experiment,model,n,r,param,metric,value,std_error,rounds,seed"
THEORY_SCHEMA = "model,n,r,param,phi,kind"
MODEL_CHOICES = [k.value for k in MobilityKind]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated {kind.__name__} values")
    return parse


def _common(p, *, models=True, gossip=False, cuts=False, samples=False):
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="INI config file; flags given here override it")
    g.add_argument("--emit-config", action="store_true",
                   help="print the equivalent config file and exit")
    g.add_argument("--n", type=_csv_list(int), help="node count(s), comma-separated")
    g.add_argument("--r", type=float,
                   help="contact radius (default sqrt(8 log n / (pi n)) per n)")
    g.add_argument("--boundary", choices=("square", "torus"), help="default: square")
    g.add_argument("--rounds", "--trials", dest="rounds", type=int,
                   help="replications per grid point (default 1000)")
    g.add_argument("--seed", type=int, help="master seed (default 0)")
    g.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    g.add_argument("--out", help="output CSV path (default: standard output)")
    g.add_argument("-v", "--verbose", action="count", default=0)
    if models:
        m = p.add_argument_group("mobility")
        m.add_argument("--model", type=_csv_list(str),
                       help=f"mobility model(s), comma-separated: {', '.join(MODEL_CHOICES)}")
        m.add_argument("--vmax", type=_csv_list(float),
                       help="velocity bound(s); one velocity model per value")
        m.add_argument("--k", type=_csv_list(int), help="mobile node count(s), partially random")
        m.add_argument("--nv", type=int, help="V-node count, 1-d area constrained")
        m.add_argument("--nh", type=int, help="H-node count, 1-d area constrained")
        m.add_argument("--rc", type=_csv_list(float), help="home-disk radius, 2-d area constrained")
    if gossip:
        p.add_argument("--epsilon", type=float, help="spreading-time level (default 0.05)")
        p.add_argument("--sources", type=int, help="distinct sources per point (default 10)")
        p.add_argument("--mode", choices=("pushpull", "push", "pull"), help="default: pushpull")
    if samples:
        p.add_argument("--samples", type=int, help="Monte-Carlo samples (default: --rounds)")
    if cuts:
        p.add_argument("--cuts", choices=CUT_CHOICES,
                       help="cut search: bisection only (default), line sweeps, random "
                            "balanced sets, or exhaustive (n <= 14)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mobile-gossip", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    out = f"Output CSV columns: {RESULT_SCHEMA}"

    p = sub.add_parser("spread", help="spreading-time experiment", epilog=out)
    _common(p, gossip=True)
    p = sub.add_parser("sweep", help="spreading time over a grid of n and models", epilog=out)
    _common(p, gossip=True)
    p = sub.add_parser("conductance", help="mobile conductance estimates", epilog=out)
    _common(p, cuts=True, samples=True)
    p = sub.add_parser("density", help="post-move mixing profile across a bisection",
                       epilog=out + " (param is the offset l from the line)")
    _common(p, samples=True)
    p = sub.add_parser("increment", help="one-slot informed-set increment vs its lower bound",
                       epilog=out + " (param is |S|)")
    _common(p, gossip=True, samples=True)
    p = sub.add_parser("connectivity", help="connectivity frequency of the static graph",
                       epilog=out)
    _common(p, models=False)
    p = sub.add_parser("theory", help="closed-form conductance predictions",
                       epilog=f"Output CSV columns: {THEORY_SCHEMA}")
    p.add_argument("--model", type=_csv_list(str), help="model(s); default: all")
    p.add_argument("--n", type=_csv_list(int))
    p.add_argument("--r", type=float)
    p.add_argument("--vmax", type=_csv_list(float))
    p.add_argument("--k", type=_csv_list(int))
    p.add_argument("--nv", type=int)
    p.add_argument("--nh", type=int)
    p.add_argument("--rc", type=_csv_list(float))
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _models_from_flags(args, n_values):
    names = args.model
    if names is None:
        return None
    models = []
    for name in names:
        if name not in MODEL_CHOICES:
            raise ConfigError(f"unknown model {name!r}; choose from {MODEL_CHOICES}",
                              field="model")
        kind = MobilityKind(name)
        if kind is MobilityKind.VELOCITY:
            if not args.vmax:
                raise ConfigError("velocity model needs --vmax", field="vmax")
            models += [make_model(f"velocity-{v:g}", kind, vmax=v) for v in args.vmax]
        elif kind is MobilityKind.PARTIALLY_RANDOM:
            if not args.k:
                raise ConfigError("partially random model needs --k", field="k")
            models += [make_model(f"partially-random-{k}", kind, k=k) for k in args.k]
        elif kind is MobilityKind.AREA_2D:
            if not args.rc:
                raise ConfigError("2-d area model needs --rc", field="rc")
            models += [make_model(f"area-2d-{rc:g}", kind, rc=rc) for rc in args.rc]
        elif kind is MobilityKind.AREA_1D:
            nv = args.nv
            if nv is None and args.nh is not None:
                if not n_values or len(n_values) != 1:
                    raise ConfigError("--nh alone needs a single --n", field="nh")
                nv = n_values[0] - args.nh
            if nv is None:
                raise ConfigError("1-d area model needs --nv", field="nv")
            if args.nh is not None:
                for n in n_values or ():
                    if nv + args.nh != n:
                        raise ConfigError(f"nv + nh must equal n={n}", field="nh")
            models.append(make_model(f"area-1d-{nv}", kind, nv=nv))
        else:
            models.append(make_model(name, kind))
    return tuple(models)


def _config_from_args(args) -> ExperimentConfig:
    base = None
    if args.config:
        try:
            base = load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", field="config") from None
    n_values = tuple(args.n) if args.n else (base.n_values if base else ())
    flags = {
        "experiment": args.command,
        "n_values": n_values or None,
        "r": args.r,
        "boundary": args.boundary,
        "rounds": args.rounds,
        "seed": args.seed,
        "workers": args.workers,
        "output_path": args.out,
        "epsilon": getattr(args, "epsilon", None),
        "sources": getattr(args, "sources", None),
        "mode": getattr(args, "mode", None),
        "samples": getattr(args, "samples", None),
        "cuts": getattr(args, "cuts", None),
    }
    if hasattr(args, "model"):
        flags["models"] = _models_from_flags(args, n_values)
    if base is None:
        if not n_values:
            raise ConfigError("missing", field="n")
        return ExperimentConfig(**{k: v for k, v in flags.items() if v is not None})
    return override(base, **flags)


def _check_models(config: ExperimentConfig):
    for n in config.n_values:
        r = config.radius(n)
        for m in config.models:
            try:
                m.resolve(n, r).validate_for(n)
            except InvalidParameterError as exc:
                raise ConfigError(f"{exc} (n={n})", field=f"model {m.name}") from None


def _theory(args, stream):
    models = args.model or MODEL_CHOICES
    n_values = args.n or [None]
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(THEORY_SCHEMA.split(","))
    for n in n_values:
        if args.r is None and n is None:
            raise ConfigError("theory needs --n or --r", field="n")
        r = args.r if args.r is not None else default_radius(n)
        ns = "" if n is None else n
        for name in models:
            if name not in MODEL_CHOICES:
                raise ConfigError(f"unknown model {name!r}", field="model")
            kind = MobilityKind(name)
            if kind is MobilityKind.VELOCITY:
                for v in args.vmax or [r]:
                    w.writerow((name, ns, repr(r), repr(v), repr(velocity_phi(v, r)),
                                "approximation"))
                continue
            if n is None:
                raise ConfigError(f"{name} prediction needs --n", field="n")
            fake = argparse.Namespace(model=[name], vmax=args.vmax, k=args.k or [n // 2],
                                      nv=args.nv if args.nv is not None else n // 2,
                                      nh=args.nh, rc=args.rc or [r])
            for m in _models_from_flags(fake, [n]):
                spec = m.resolve(n, r)
                spec.validate_for(n)
                pred = table1_phi(spec, n, r)
                param = spec.param
                w.writerow((name, n, repr(r), "" if param is None else repr(param),
                            repr(pred.phi), pred.kind.value))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        if args.command == "theory":
            if args.out:
                with open(args.out, "w", newline="", encoding="utf-8") as fh:
                    _theory(args, fh)
            else:
                _theory(args, sys.stdout)
            return 0
        config = _config_from_args(args)
        _check_models(config)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.emit_config:
        sys.stdout.write(config.to_ini())
        return 0
    try:
        rows = run_experiment(config)
        if config.output_path:
            write_csv(rows, config.output_path)
            write_manifest(config, config.output_path + ".manifest")
        else:
            write_csv(rows, stream=sys.stdout)
    except Exception as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    failed = [r for r in rows if r.metric.startswith("failed:")]
    if failed:
        log.warning("%d grid point(s) failed; see rows with metric failed:*", len(failed))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
