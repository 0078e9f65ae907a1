"""Command-line entry point.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
4 numerical degeneracy.

Every command that writes output also writes a JSON manifest next to it
(``<out>.manifest.json``, or ``manifest.json`` inside an output directory).
``swarmroom replay MANIFEST`` re-runs the command from the manifest alone.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import formats as fm
from .batch import WORKERS_ENV
from .diagnostics import run_recovery_study
from .inference import DegenerateGeneration, SMCSchedule, abc_rejection, abc_smc, build_reference_table
from .observables import augment
from .params import PARAM_NAMES, DEFAULT_PRIOR
from .scenario import Scenario
from .summaries import SUMMARY_NAMES, summarize

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DEGENERATE = 0, 2, 3, 4
TABLE_PRESETS = {"small": 3000, "large": 30000}
MAX_U64 = 2**64 - 1


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value <= MAX_U64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {value}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


# ------------------------------------------------------------------ helpers

def _resolved_config(args) -> dict:
    """Config file (or the one embedded in a manifest), then flag overrides."""
    if getattr(args, "resolved_config", None) is not None:
        cfg = fm.resolve_config(args.resolved_config, "manifest")
    elif args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc.strerror}") from exc
        cfg = fm.parse_config_text(text, args.config)
    else:
        cfg = dict(fm.CONFIG_DEFAULTS)
    for name in PARAM_NAMES:
        value = getattr(args, name, None)
        if value is not None:
            cfg[name] = float(value)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = int(args.seed)
    return cfg


def _manifest_path(out: Path) -> Path:
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


def _write_manifest(args, cfg, outputs, inputs, seeds, started):
    record = {
        "tool": "swarmroom",
        "version": __version__,
        "command": args.command,
        "args": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "resolved_config", "config")},
        "config": cfg,
        "seeds": seeds,
        "inputs": [str(Path(p).resolve()) for p in inputs],
        "outputs": [str(Path(p).resolve()) for p in outputs],
        "timings": {"wall_seconds": round(time.perf_counter() - started, 6)},
    }
    path = _manifest_path(Path(args.out))
    fm.atomic_write(path, json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path


def _schedule(args) -> SMCSchedule:
    try:
        return SMCSchedule(args.population, args.generations, args.quantile, args.max_sims_factor)
    except ValueError as exc:
        raise fm.ConfigError(str(exc)) from exc


def _check_compatible(table, traj):
    t, o = table.scenario.config, traj.config
    checks = [
        ("A", t.num_agents, o.num_agents),
        ("B", t.num_beacons, o.num_beacons),
        ("T", t.num_steps, o.num_steps),
        ("dt", t.dt, o.dt),
    ]
    for name, a, b in checks:
        if a != b:
            raise fm.ConfigError(f"table and observation disagree on {name}: {a} vs {b}")
    if table.scenario.beacons != traj.beacons:
        print("warning: table and observation use different beacon layouts", file=sys.stderr)


# ----------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _resolved_config(args)
    params, scenario = fm.config_objects(cfg)
    traj = scenario.run(params, cfg["seed"])
    out = Path(args.out)
    fm.save_trajectory(traj, out)
    outputs = [out]
    if args.csv:
        fm.atomic_write(args.csv, fm.trajectory_csv(traj))
        outputs.append(Path(args.csv))
    _write_manifest(args, cfg, outputs, [], {"run": cfg["seed"], "layout": cfg["layout_seed"]}, started)
    return EXIT_OK


def cmd_table(args) -> int:
    started = time.perf_counter()
    cfg = _resolved_config(args)
    n = args.n if args.n is not None else TABLE_PRESETS[args.preset]
    _, scenario = fm.config_objects(cfg, strict_params=False)
    table = build_reference_table(DEFAULT_PRIOR, scenario, n, cfg["seed"], args.workers, progress="table")
    fm.save_table(table, args.out)
    _write_manifest(args, cfg, [args.out], [], {"base": cfg["seed"], "layout": cfg["layout_seed"]}, started)
    return EXIT_OK


def cmd_infer(args) -> int:
    started = time.perf_counter()
    cfg = _resolved_config(args)
    traj = fm.load_trajectory(args.obs)
    observed = summarize(augment(traj)).values
    inputs = [args.obs]
    table = None
    if args.table:
        table = fm.load_table(args.table)
        _check_compatible(table, traj)
        inputs.append(args.table)
    if args.method == "rejection":
        if table is None:
            raise UsageError("rejection mode needs --table")
        post = abc_rejection(observed, table, args.accept_fraction)
    else:
        if table is not None:
            scenario = table.scenario
        else:
            _, base = fm.config_objects(cfg, strict_params=False)
            scenario = Scenario(traj.config, traj.room, traj.beacons, base.fixed)
        post = abc_smc(observed, DEFAULT_PRIOR, scenario, _schedule(args), cfg["seed"], table=table, workers=args.workers)
    fm.atomic_write(args.out, fm.posterior_csv(post))
    _write_manifest(args, cfg, [args.out], inputs, {"inference": cfg["seed"]}, started)
    return EXIT_OK


def _study(args, default_method) -> int:
    started = time.perf_counter()
    cfg = _resolved_config(args)
    if args.S < 2:
        raise fm.ConfigError(f"S must be >= 2, got {args.S}")
    method = args.method or default_method
    table = None
    inputs = []
    if args.table:
        table = fm.load_table(args.table)
        scenario = table.scenario
        inputs.append(args.table)
    elif method != "prior":
        raise UsageError(f"method {method!r} needs --table")
    else:
        _, scenario = fm.config_objects(cfg, strict_params=False)
    report, _ = run_recovery_study(
        DEFAULT_PRIOR, scenario, table, args.S, cfg["seed"], method=method,
        schedule=_schedule(args), accept_fraction=args.accept_fraction,
        null_draws=args.null_draws, workers=args.workers, progress=args.command,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [out / "report.json"]
    fm.atomic_write(outputs[0], report.to_json() + "\n")
    for name in PARAM_NAMES:
        path = out / f"coverage_{name}.csv"
        fm.atomic_write(path, fm.coverage_csv(report, name))
        outputs.append(path)
    _write_manifest(args, cfg, outputs, inputs, {"study": cfg["seed"]}, started)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    return _study(args, "prior")


def cmd_recover(args) -> int:
    return _study(args, "smc")


def cmd_stats(args) -> int:
    traj = fm.load_trajectory(args.trajectory)
    vec = summarize(augment(traj))
    if args.out:
        fm.atomic_write(args.out, fm.summaries_csv(vec.values))
    else:
        width = max(map(len, SUMMARY_NAMES))
        for name, value in zip(SUMMARY_NAMES, vec.values):
            print(f"{name:<{width}}  {value!r}")
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        record = json.loads(Path(args.manifest).read_text())
    except json.JSONDecodeError as exc:
        raise fm.ConfigError(f"{args.manifest}: invalid manifest JSON: {exc.msg}") from exc
    if record.get("tool") != "swarmroom" or "command" not in record:
        raise fm.ConfigError(f"{args.manifest}: not a swarmroom manifest")
    saved = dict(record["args"])
    if args.out:
        saved["out"] = args.out
    if args.workers is not None:
        saved["workers"] = args.workers
    ns = argparse.Namespace(**saved)
    ns.config = None
    ns.resolved_config = record["config"]
    ns.func = COMMANDS[record["command"]]
    return ns.func(ns)


COMMANDS = {
    "simulate": cmd_simulate,
    "table": cmd_table,
    "infer": cmd_infer,
    "calibrate": cmd_calibrate,
    "recover": cmd_recover,
    "stats": cmd_stats,
}


# ------------------------------------------------------------------- parser

def _common(p, params=False):
    p.add_argument("--config", metavar="PATH", help="JSON configuration file")
    p.add_argument("--seed", type=_u64, metavar="U64", help="run seed (overrides the config)")
    p.add_argument("--workers", type=_positive_int, metavar="N",
                   help=f"worker processes (default: ${WORKERS_ENV} or 1)")
    if params:
        for name in PARAM_NAMES:
            p.add_argument(f"--{name}", type=float, help=f"override {name}")


def _smc_flags(p):
    p.add_argument("--population", type=int, default=500, help="SMC population size M")
    p.add_argument("--generations", type=int, default=4, help="SMC generations G")
    p.add_argument("--quantile", type=float, default=0.5, help="tolerance quantile per generation")
    p.add_argument("--max-sims-factor", type=int, default=200,
                   help="simulation budget per generation, in multiples of M")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmroom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"swarmroom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation and save its trajectory")
    _common(p, params=True)
    p.add_argument("--out", required=True, metavar="PATH", help="binary trajectory output")
    p.add_argument("--csv", metavar="PATH", help="also export the trajectory as long-format CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table", help="simulate a prior-predictive reference table")
    _common(p)
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=_positive_int, help="number of rows")
    size.add_argument("--preset", choices=sorted(TABLE_PRESETS), help="small=3000, large=30000 rows")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("infer", help="posterior for one observed trajectory")
    _common(p)
    p.add_argument("--obs", required=True, metavar="PATH", help="observed trajectory file")
    p.add_argument("--table", metavar="PATH", help="reference table (rejection, or SMC generation 0)")
    p.add_argument("--method", choices=["rejection", "smc"], default="rejection")
    p.add_argument("--accept-fraction", type=float, default=0.05)
    _smc_flags(p)
    p.add_argument("--out", required=True, metavar="PATH", help="posterior CSV")
    p.set_defaults(func=cmd_infer)

    for name, func, default, text in (
        ("calibrate", cmd_calibrate, "prior", "coverage check; defaults to the prior-as-posterior null estimator"),
        ("recover", cmd_recover, "smc", "parameter recovery study on fresh simulated cases"),
    ):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--table", metavar="PATH")
        p.add_argument("--S", type=int, default=100, help="number of test cases")
        p.add_argument("--method", choices=["smc", "rejection", "prior"], default=None,
                       help=f"estimator (default: {default})")
        p.add_argument("--accept-fraction", type=float, default=0.05)
        p.add_argument("--null-draws", type=int, default=1000)
        _smc_flags(p)
        p.add_argument("--out", required=True, metavar="DIR", help="output directory")
        p.set_defaults(func=func)

    p = sub.add_parser("stats", help="print the summary vector of a trajectory")
    p.add_argument("trajectory", metavar="PATH")
    p.add_argument("--out", metavar="PATH", help="write CSV instead of printing")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest", metavar="PATH")
    p.add_argument("--out", metavar="PATH", help="write to a different output path")
    p.add_argument("--workers", type=_positive_int, metavar="N")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (fm.ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateGeneration as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (OSError, fm.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
