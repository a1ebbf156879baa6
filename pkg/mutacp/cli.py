"""
The command line: argument parsing, the optional key=value config file and
one handler per subcommand. Handlers return the process exit code.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import math
import os
import sys
from typing import IO, Any

from mutacp import analysis, checks, config, exactsolver, montecarlo
from mutacp.dynamics.configuration import ProcessKind
from mutacp.dynamics.coupling import simulate_coupled
from mutacp.dynamics.engine import simulate
from mutacp.dynamics.trajectory import StopRule, write_trajectory
from mutacp.exceptions import DomainError, ParameterError
from mutacp.graph import TwoSite, parse_graph

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated list of numbers") from error
    if not values:
        raise argparse.ArgumentTypeError("the list is empty")
    return values


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, default=2, help="tree parameter: every vertex of HomTree(d) has d+1 neighbors")
    common.add_argument("--lambda", dest="lam", type=float, help="birth rate")
    common.add_argument("--r", type=float, help="mutation probability")
    common.add_argument("--graph", default="homtree", help="homtree[:D], rootedtree[:D], lattice:DIM[:BOX], twosite, path:N or file:PATH")
    common.add_argument("--kind", default="mutation", help="mutation, individual, restricted or nonspatial")
    common.add_argument("--trials", type=int, help="number of runs")
    common.add_argument("--tmax", type=float, default=config.T_MAX, help="time horizon")
    common.add_argument("--nmax", type=int, default=config.N_MAX, help="population cap")
    common.add_argument("--seed", type=int, help=f"master seed (falls back to ${config.SEED_ENV_VAR})")
    common.add_argument("--confidence", type=float, default=config.CONFIDENCE, help="confidence level of intervals")
    common.add_argument("--out", help="output file (standard output when omitted)")
    common.add_argument("--format", choices=FORMATS, default="csv", help="output format")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="size of the worker pool")
    common.add_argument("--config", help="key=value file of defaults; flags win")
    common.add_argument("--log-level", default="WARNING", help="logging level")
    return common


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    """Build the top-level parser and return it with the subcommand parsers by name."""
    parser = argparse.ArgumentParser(prog="mutacp", description="Simulation and analysis of the contact process with mutations.")
    common = _common_options()
    commands = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    sub = commands.add_parser("thresholds", parents=[common], help="closed-form thresholds for d (and r, lambda)")
    sub.set_defaults(handler=cmd_thresholds)
    subparsers["thresholds"] = sub

    sub = commands.add_parser("simulate", parents=[common], help="one run; trajectory to --out, summary to standard output")
    sub.set_defaults(handler=cmd_simulate)
    subparsers["simulate"] = sub

    sub = commands.add_parser("sweep", parents=[common], help="survival proxy over a lambda x r grid")
    sub.add_argument("--lambdas", type=_float_list, help="comma-separated lambda values")
    sub.add_argument("--rs", type=_float_list, help="comma-separated r values")
    sub.set_defaults(handler=cmd_sweep)
    subparsers["sweep"] = sub

    sub = commands.add_parser("couple", parents=[common], help="coupled mutation and restricted runs with containment checks")
    sub.set_defaults(handler=cmd_couple)
    subparsers["couple"] = sub

    sub = commands.add_parser("exact", parents=[common], help="exact transient values on a small graph")
    sub.add_argument("--t-grid", type=_float_list, default=[1.0], help="comma-separated observation times")
    sub.add_argument("--dump", help="write the generator as sparse triplets to this file")
    sub.set_defaults(handler=cmd_exact, graph="twosite")
    subparsers["exact"] = sub

    sub = commands.add_parser("check", parents=[common], help="run acceptance suites")
    sub.add_argument("suites", nargs="+", choices=list(checks.SUITES) + ["all"], help="suites to run")
    sub.set_defaults(handler=cmd_check)
    subparsers["check"] = sub
    return parser, subparsers


def read_config_file(path: str) -> dict[str, str]:
    """Read key=value lines; '#' starts a comment and keys may use '-' or '_'."""
    values = {}
    with open(path, encoding="utf-8") as stream:
        for number, line in enumerate(stream, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ParameterError(f"{path}:{number}: expected key=value")
            values[key.strip().replace("_", "-")] = value.strip()
    return values


def _config_defaults(parser: argparse.ArgumentParser, values: dict[str, str]) -> dict[str, Any]:
    by_flag = {}
    for action in parser._actions:  # pylint: disable=protected-access
        for option in action.option_strings:
            if option.startswith("--"):
                by_flag[option[2:]] = action.dest
    defaults = {}
    for key, value in values.items():
        if key not in by_flag or key == "config":
            raise ParameterError(f"Unknown config key {key!r}")
        defaults[by_flag[key]] = value
    return defaults


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse the command line, letting a --config file fill in defaults that flags do not set."""
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparser = subparsers[args.command]
        subparser.set_defaults(**_config_defaults(subparser, read_config_file(args.config)))
        args = parser.parse_args(argv)
    if args.seed is None and os.environ.get(config.SEED_ENV_VAR):
        try:
            args.seed = int(os.environ[config.SEED_ENV_VAR])
        except ValueError as error:
            raise ParameterError(f"${config.SEED_ENV_VAR} must be an integer") from error
    return args


# ----------------------------------------------------------------------
# Output helpers
# ----------------------------------------------------------------------

@contextlib.contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as stream:
            yield stream


def _text(value) -> str:
    if value is None:
        return "empty"
    if isinstance(value, float):
        return format(value, config.CSV_FLOAT_FORMAT)
    if isinstance(value, (tuple, list)):
        return "(" + ", ".join(_text(v) for v in value) + ")"
    return str(value)


def _json_value(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, tuple):
        return [_json_value(v) for v in value]
    return value


def _emit_table(stream: IO[str], fmt: str, rows: list[tuple[str, Any]], settings: dict[str, Any]) -> None:
    if fmt == "json":
        payload = {"config": settings, "values": {key: _json_value(value) for key, value in rows}}
        stream.write(json.dumps(payload, indent=2) + "\n")
        return
    for key, value in settings.items():
        stream.write(f"# {key}={value}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["quantity", "value"])
    for key, value in rows:
        writer.writerow([key, _text(value)])


def _emit_records(stream: IO[str], fmt: str, columns: list[str], records: list[dict], settings: dict[str, Any]) -> None:
    if fmt == "json":
        stream.write(json.dumps({"config": settings, "rows": records}, indent=2) + "\n")
        return
    for key, value in settings.items():
        stream.write(f"# {key}={value}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for record in records:
        writer.writerow([_text(record[column]) for column in columns])


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [name for name in names if getattr(args, name) is None]
    if missing:
        flags = ", ".join("--lambda" if name == "lam" else f"--{name}" for name in missing)
        raise ParameterError(f"{args.command} needs {flags}")


def _trials(args: argparse.Namespace, default: int | None) -> int | None:
    """The --trials value, or default when the flag is absent."""
    if args.trials is None:
        return default
    if args.trials < 1:
        raise ParameterError(f"--trials must be at least 1, got {args.trials}")
    return args.trials


def _graph(args: argparse.Namespace, kind: ProcessKind):
    return None if kind is ProcessKind.NON_SPATIAL else parse_graph(args.graph, args.d)


def _stop(args: argparse.Namespace) -> StopRule:
    return StopRule(t_max=args.tmax, n_max=args.nmax)


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def cmd_thresholds(args: argparse.Namespace) -> int:
    """Print the thresholds for d, and the r- and lambda-dependent values when given."""
    d = args.d
    rows: list[tuple[str, Any]] = [
        ("survive_all_r", analysis.threshold_survive(d)),
        ("die_out_all_r", 1 / (d + 1)),
    ]
    if args.r is not None:
        rows.append(("die_out", analysis.threshold_die(d, args.r)))
    rows.append(("window_transition", analysis.window_transition(d)))
    rows.append(("window_weak", analysis.window_weak(d)))
    note = analysis.weak_survival_note(d)
    if note is not None:
        rows.append(("weak_survival_note", note))
    if args.r is not None:
        rows.append(("lambdabound", analysis.lambdabound(d, args.r)))
    if args.lam is not None:
        rows.append(("r_line_verdict", str(analysis.r_line_verdict(d, args.lam))))
        if args.r is not None:
            for name, mean in (("gw_mean_U", analysis.gw_mean_U), ("gw_mean_Z", analysis.gw_mean_Z)):
                try:
                    rows.append((name, mean(d, args.lam, args.r).value))
                except DomainError:
                    rows.append((name, "undefined"))
            rows.append(("verdict", str(analysis.classify(d, args.lam, args.r))))
    settings = {"d": d, "r": args.r, "lambda": args.lam}
    with _output(args.out) as stream:
        _emit_table(stream, args.format, rows, {k: v for k, v in settings.items() if v is not None})
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run once, write the trajectory and print a one-line summary."""
    _require(args, "lam", "r")
    kind = ProcessKind.parse(args.kind)
    g = _graph(args, kind)
    trajectory = simulate(g, kind, args.lam, args.r, stop=_stop(args), seed=args.seed)
    if args.out is not None:
        write_trajectory(trajectory, args.out)
    elif args.format == "csv":
        write_trajectory(trajectory, sys.stdout)
    end = trajectory.termination
    summary = {
        "status": end.status,
        "time": end.time,
        "reason": end.reason,
        "population": trajectory.final.size,
        "types": trajectory.final.type_count,
        "events": len(trajectory.events),
    }
    if args.format == "json":
        sys.stdout.write(json.dumps(summary) + "\n")
    else:
        sys.stdout.write("# summary " + " ".join(f"{key}={_text(value) if value is not None else '-'}" for key, value in summary.items()) + "\n")
    logger.info("Simulation ended %s at t=%g.", end.status, end.time)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    """Estimate the survival proxy over the lambda x r grid."""
    _require(args, "lambdas", "rs")
    kind = ProcessKind.parse(args.kind)
    result = montecarlo.sweep(
        args.d,
        args.lambdas,
        args.rs,
        _trials(args, config.DEFAULT_TRIALS),
        stop=_stop(args),
        seed=args.seed,
        confidence=args.confidence,
        workers=args.workers,
        g=_graph(args, kind),
        kind=kind,
    )
    with _output(args.out) as stream:
        if args.format == "json":
            stream.write(montecarlo.sweep_to_json(result) + "\n")
        else:
            montecarlo.write_sweep_csv(result, stream)
    return 0


def cmd_couple(args: argparse.Namespace) -> int:
    """Run coupled pairs and report containment violations; exit 1 if any occurred."""
    _require(args, "lam", "r")
    trials = _trials(args, 1)
    records = []
    for i in range(trials):
        seed = args.seed if trials == 1 else montecarlo.trial_seed(args.seed, i)
        result = simulate_coupled(args.d, args.lam, args.r, stop=_stop(args), seed=seed, record=False)
        records.append({
            "trial": i,
            "mutation": result.mutation.termination.status,
            "mutation_time": result.mutation.termination.time,
            "restricted": result.restricted.termination.status,
            "restricted_time": result.restricted.termination.time,
            "violations": len(result.violations),
        })
        for violation in result.violations:
            logger.error("Trial %d: %s at t=%g: %s", i, violation.check, violation.time, violation.detail)
    settings = {"d": args.d, "lambda": args.lam, "r": args.r, "trials": trials, "tmax": args.tmax, "nmax": args.nmax, "seed": args.seed}
    with _output(args.out) as stream:
        _emit_records(stream, args.format, list(records[0]), records, settings)
    total = sum(record["violations"] for record in records)
    return 1 if total else 0


def cmd_exact(args: argparse.Namespace) -> int:
    """
    Print exact values. On TwoSite this is the table of the three two-site
    starts; on other graphs it is P(nonempty) from one pathogen at the root.
    """
    kind = ProcessKind.parse(args.kind)
    g = parse_graph(args.graph, args.d)
    lam = config.TWO_SITE_LAMBDA if args.lam is None else args.lam
    r = 0.5 if args.r is None else args.r
    if args.dump:
        gen = exactsolver.build_generator(g, kind, lam, r)
        exactsolver.dump_generator(gen, args.dump)
        sys.stdout.write(f"# wrote {len(gen.states)} states of {g.name} to {args.dump}\n")
        return 0
    records = []
    if isinstance(g, TwoSite) and kind is ProcessKind.MUTATION:
        for t in args.t_grid:
            values = exactsolver.two_site_values(lam, t, r)
            limit = exactsolver.two_site_limit(t, r)
            closed = exactsolver.two_site_closed_forms(t) if r == 0.5 else {}
            for name in exactsolver.TWO_SITE_STARTS:
                records.append({"t": t, "start": name, "value": values[name], "limit": limit[name], "closed_form": closed.get(name)})
        columns = ["t", "start", "value", "limit", "closed_form"]
    else:
        gen = exactsolver.build_generator(g, kind, lam, r)
        start = exactsolver.LumpedState.of([[g.root()]])
        for t in args.t_grid:
            records.append({"t": t, "nonempty": exactsolver.prob_nonempty(gen, start, t)})
        columns = ["t", "nonempty"]
    settings = {"graph": g.name, "kind": kind.value, "lambda": lam, "r": r}
    with _output(args.out) as stream:
        _emit_records(stream, args.format, columns, records, settings)
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    """Run the selected suites; exit 1 if any blocking check failed."""
    outcomes = checks.run_checks(args.suites, trials=_trials(args, None), seed=args.seed, workers=args.workers)
    with _output(args.out) as stream:
        if args.format == "json":
            payload = [{"name": o.name, "status": o.status, "detail": o.detail} for o in outcomes]
            stream.write(json.dumps(payload, indent=2) + "\n")
        else:
            for outcome in outcomes:
                stream.write(f"{outcome.status} {outcome.name}: {outcome.detail}\n")
    return 1 if any(o.status == "FAIL" for o in outcomes) else 0
