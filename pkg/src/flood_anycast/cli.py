"""Command-line harness: ``run``, ``sweep`` and ``plot``.

Exit codes: 0 success, 1 usage error, 2 run failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import engine
from .config import ConfigError, SimulationConfig, parse_config
from .experiment import (
    DEFAULT_REPLICATES,
    RADII,
    RUN_COLUMNS,
    SweepError,
    SweepSpec,
    fmt,
    run_row,
    series1,
    series2,
    sweep,
    write_outputs,
)
from .plotting import PlotError, plot

EXIT_USAGE = 1
EXIT_RUN_FAILURE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seeds(text: str) -> tuple:
    """``5`` means replicates 0..4; ``3,8,9`` names the replicates explicitly."""
    values = _ints(text)
    if len(values) == 1 and "," not in text:
        if values[0] < 1:
            raise argparse.ArgumentTypeError("seed count must be >= 1")
        return tuple(range(values[0]))
    return values


def _base_config(args) -> SimulationConfig:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    cfg = parse_config(text)
    if getattr(args, "requests", None) is not None:
        cfg = replace(cfg, requests=args.requests)
    if getattr(args, "master_seed", None) is not None:
        cfg = replace(cfg, seed=args.master_seed)
    return cfg


def _single(values, flag):
    if values is None:
        return None
    if len(values) != 1:
        raise UsageError(f"{flag} takes a single value for 'run'")
    return values[0]


def cmd_run(args) -> int:
    cfg = _base_config(args)
    overrides = {
        "radius": _single(args.radius, "--radius"),
        "ttl": _single(args.ttl, "--ttl"),
        "link_availability": _single(args.l, "--l"),
        "vmax_kmh": _single(args.vmax_kmh, "--vmax-kmh"),
        "direction_change_p": args.p,
        "seed": args.seed,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    trace = any((args.event_log, args.packet_trace, args.trajectory, args.link_log))
    sim = engine.Simulation(cfg, trace=trace)
    try:
        record = sim.run()
    except Exception as exc:
        print(f"run failed for seed={cfg.seed} config={cfg!r}: {exc!r}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    for path, writer in (
        (args.event_log, engine.write_event_log),
        (args.packet_trace, engine.write_packet_trace),
        (args.trajectory, engine.write_trajectory),
        (args.link_log, engine.write_link_log),
    ):
        if path:
            writer(sim, path)
    row = run_row(cfg, record)
    lines = [",".join(RUN_COLUMNS), ",".join(fmt(row[c]) for c in RUN_COLUMNS)]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "runs.csv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def build_spec(args) -> SweepSpec:
    if args.series1 and args.series2:
        raise UsageError("--series1 and --series2 are mutually exclusive")
    kw = {"replicates": args.seeds or tuple(range(DEFAULT_REPLICATES)), "requests": args.requests}
    if args.series1:
        spec = series1(**kw)
    elif args.series2:
        spec = series2(**kw)
    else:
        spec = SweepSpec(radii=RADII, **kw)
    fields = {
        "radii": args.radius,
        "ttls": args.ttl,
        "availabilities": args.l,
        "vmax_kmh": args.vmax_kmh,
        "p_values": (args.p,) if args.p is not None else None,
    }
    return replace(spec, **{k: v for k, v in fields.items() if v is not None})


def cmd_sweep(args) -> int:
    base = _base_config(args)
    if not args.series1 and not args.series2:
        # without a preset, unspecified axes follow the base config
        args.ttl = args.ttl or (base.ttl,)
        args.l = args.l or (base.link_availability,)
        args.vmax_kmh = args.vmax_kmh or (base.vmax_kmh,)
        args.p = base.direction_change_p if args.p is None else args.p
    spec = build_spec(args)
    if args.plot and not args.group:
        raise UsageError("--plot needs --group")
    try:
        result = sweep(spec, base, workers=args.workers)
    except SweepError as exc:
        print(f"sweep aborted: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    paths = write_outputs(result, spec, base, args.out)
    print(f"{len(result.rows)} runs -> {paths['runs']}, {paths['aggregate']}")
    if args.plot:
        svg = Path(args.out) / f"{args.plot}_by_{args.group.replace(',', '_')}.svg"
        plot(paths["aggregate"], args.plot, args.group, svg, args.filter)
        print(f"plot -> {svg}")
    return 0


def cmd_plot(args) -> int:
    metric = args.metric or args.plot
    if not metric or not args.group:
        raise UsageError("plot needs --metric (or --plot) and --group")
    out = args.out or Path(args.aggregate).with_name(f"{metric}_by_{args.group.replace(',', '_')}.svg")
    path = plot(args.aggregate, metric, args.group, out, args.filter)
    print(path)
    return 0


def _common(p):
    p.add_argument("--config", help="parameter file (key = value lines)")
    p.add_argument("--radius", type=_floats, help="transmission radius, m (comma list)")
    p.add_argument("--ttl", type=_ints, help="TTL (comma list)")
    p.add_argument("--l", type=_floats, help="link availability (comma list)")
    p.add_argument("--vmax-kmh", type=_floats, help="maximal node speed, km/h (comma list)")
    p.add_argument("--p", type=float, help="direction change probability")
    p.add_argument("--requests", type=int, help="number of requests per run")
    p.add_argument("--out", help="output directory")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flood-anycast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="single run")
    _common(p)
    p.add_argument("--seed", type=int, help="run seed (overrides the file)")
    p.add_argument("--event-log", help="write CSV time_ms,tie,kind,node,seq")
    p.add_argument("--packet-trace", help="write CSV time_ms,event,node,seq,kind,ttl,hops")
    p.add_argument("--trajectory", help="write CSV time_ms,node,x,y")
    p.add_argument("--link-log", help="write CSV time_ms,up_fraction")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="parameter sweep with seed replication")
    _common(p)
    p.add_argument("--seeds", type=_seeds, help="replicate count, or comma list of replicate ids")
    p.add_argument("--master-seed", type=int, help="master seed (default: 'seed' from --config, else 0)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--series1", action="store_true", help="speed series preset")
    p.add_argument("--series2", action="store_true", help="TTL / availability series preset")
    p.add_argument("--plot", metavar="METRIC", help="also draw METRIC versus radius")
    p.add_argument("--group", help="group key(s) for --plot, comma separated")
    p.add_argument("--filter", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="chart from aggregate.csv")
    p.add_argument("aggregate")
    p.add_argument("--metric")
    p.add_argument("--plot", metavar="METRIC", help="alias of --metric")
    p.add_argument("--group")
    p.add_argument("--filter", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", help="SVG path")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, PlotError, FileNotFoundError) as exc:
        print(f"flood-anycast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
