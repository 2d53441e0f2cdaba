"""Command-line interface for berwald-scalar."""

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from . import __version__

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _parse_param(text: str) -> tuple[str, Any]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def _add_metric_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--metric", help="Zoo metric name (instead of --config)")
    parser.add_argument(
        "--param",
        type=_parse_param,
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Zoo metric parameter, repeatable",
    )
    parser.add_argument("--seed", type=int, help="Sampling seed")
    parser.add_argument(
        "--resolution",
        type=int,
        help="Quadrature nodes (polar nodes when n = 3) and indicatrix nodes",
    )
    _add_output_arguments(parser)


def _add_output_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=["json", "csv"], default="json", help="Output format")
    parser.add_argument("--out", type=Path, help="Write the report to PATH instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="berwald-scalar",
        description="Curvature of Finsler metrics: classification, reports and identity checks",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Validate command
    validate_parser = subparsers.add_parser(
        "validate",
        help="Check convexity, positivity and homogeneity on sampled points",
    )
    _add_metric_arguments(validate_parser)

    # Classify command
    classify_parser = subparsers.add_parser(
        "classify",
        help="Classify a metric (Berwald, Landsberg, isotropic E, ...)",
    )
    _add_metric_arguments(classify_parser)

    # Report command
    report_parser = subparsers.add_parser(
        "report",
        help="Dump curvature tensors at the points of a CSV file",
    )
    _add_metric_arguments(report_parser)
    report_parser.add_argument(
        "--points", type=Path, required=True, help="CSV file with header x1..xn,y1..yn"
    )
    report_parser.add_argument(
        "--residual-csv",
        type=Path,
        help="Also write the fiber residual of S at the first point (n = 2)",
    )

    # Verify command
    verify_parser = subparsers.add_parser(
        "verify",
        help="Run the identity verification suite",
    )
    verify_parser.add_argument(
        "--config", type=Path, help="JSON run configuration (tolerance overrides)"
    )
    verify_parser.add_argument(
        "--suite",
        action="append",
        default=[],
        help="Identity to run, repeatable or comma separated (default: all)",
    )
    verify_parser.add_argument("--seed", type=int, help="Sampling seed")
    verify_parser.add_argument(
        "--resolution",
        type=int,
        help="Quadrature and indicatrix nodes of the n = 2 metrics (n = 3 keeps quadrature_polar)",
    )
    verify_parser.add_argument(
        "--inject-fault", choices=["e-scale"], help="Inject a known fault (mutation self-test)"
    )
    verify_parser.add_argument("--jobs", type=int, help="Worker threads")
    _add_output_arguments(verify_parser)

    # Zoo command
    zoo_parser = subparsers.add_parser("zoo", help="Named example metrics")
    zoo_subparsers = zoo_parser.add_subparsers(dest="zoo_command")
    zoo_subparsers.add_parser("list", help="List the named metrics and their parameters")

    return parser


def _run_config(args: argparse.Namespace) -> Any:
    from .config import MetricConfig, RunConfig, load_run_config
    from .errors import ParseError

    if args.config is not None and args.metric is not None:
        raise ParseError("use either --config or --metric, not both")
    if args.config is not None:
        cfg = load_run_config(args.config)
    elif args.metric is not None:
        cfg = RunConfig(metric=MetricConfig(zoo=args.metric, params=dict(args.param)))
    else:
        raise ParseError("a metric is required: pass --config PATH or --metric NAME")
    if args.seed is not None:
        cfg.samples = cfg.samples.model_copy(update={"seed": args.seed})
    return cfg


def _validate(args: argparse.Namespace) -> int:
    from .metric_core import sample_points, validate
    from .metric_zoo import metric_from_config
    from .utils import log, write_output

    cfg = _run_config(args)
    m = metric_from_config(cfg.metric)
    plan = cfg.samples
    result = validate(m, sample_points(m, plan.count, plan.seed, plan.x_box, plan.y_mode))
    if args.format == "json":
        text = result.model_dump_json(indent=2) + "\n"
    else:
        failure = result.failure
        text = "metric,ok,checked,index,error,message\n" + ",".join(
            [
                json.dumps(result.metric),
                str(result.ok).lower(),
                str(result.checked),
                "" if failure is None else str(failure.index),
                "" if failure is None else failure.error,
                "" if failure is None else json.dumps(failure.message),
            ]
        )
    write_output(text, args.out)
    log(f"Validation of {m.label}: {'ok' if result.ok else 'failed'}")
    return EXIT_OK if result.ok else EXIT_NUMERICAL


def _classify(args: argparse.Namespace) -> int:
    from .classify import classify
    from .metric_zoo import metric_from_config
    from .report import dump_classification
    from .utils import write_output
    from .volume_scurv import volume_form_from_config

    cfg = _run_config(args)
    m = metric_from_config(cfg.metric)
    vf = volume_form_from_config(cfg.volume, args.resolution)
    result = classify(m, vf, cfg.samples, cfg.tolerances)
    write_output(dump_classification(result, args.format), args.out)
    return EXIT_OK


def _report(args: argparse.Namespace) -> int:
    from .metric_zoo import metric_from_config
    from .report import read_points, report, residual_csv
    from .utils import log, pluralize, write_output
    from .volume_scurv import volume_form_from_config

    cfg = _run_config(args)
    m = metric_from_config(cfg.metric)
    vf = volume_form_from_config(cfg.volume, args.resolution)
    points = read_points(args.points, m.dimension)
    write_output(report(m, vf, points, args.format), args.out)
    log(f"Reported {pluralize(points.count, 'point')} for {m.label}")
    if args.residual_csv is not None:
        write_output(residual_csv(m, vf, points.x[0], args.resolution), args.residual_csv)
    return EXIT_OK


def _verify(args: argparse.Namespace) -> int:
    from .config import load_run_config, settings
    from .report import dump_verification, failed_identities
    from .utils import log, write_output
    from .verify import VerificationRun, all_passed, default_resolutions, run_verification

    selection = [name.strip() for item in args.suite for name in item.split(",") if name.strip()]
    tolerances = load_run_config(args.config).tolerances.identities if args.config else None
    seed = settings.seed if args.seed is None else args.seed
    reports = run_verification(
        selection=selection,
        seed=seed,
        resolutions=default_resolutions(args.resolution),
        fault=args.inject_fault,
        jobs=args.jobs,
        tolerances=tolerances,
    )
    run = VerificationRun(seed=seed, fault=args.inject_fault, reports=reports)
    write_output(dump_verification(run, args.format), args.out)
    if all_passed(reports):
        return EXIT_OK
    for name in failed_identities(reports):
        log(f"FAILED: {name}", level="WARNING")
    return EXIT_VERIFICATION_FAILED


def _zoo(args: argparse.Namespace) -> int:
    from .metric_zoo import ZOO

    if args.zoo_command != "list":
        from .errors import ParseError

        raise ParseError("usage: berwald-scalar zoo list")
    for name, entry in ZOO.items():
        params = ", ".join(f"{key}={value}" for key, value in entry.defaults.items())
        print(f"{name:<24} {entry.description} ({params})")
    return EXIT_OK


COMMANDS = {
    "validate": _validate,
    "classify": _classify,
    "report": _report,
    "verify": _verify,
    "zoo": _zoo,
}


def main(argv: list[str] | None = None) -> None:
    """
    Main CLI entry point with subcommands.

    Available commands:
    - validate: check a metric on sampled points
    - classify: label a metric and audit the implications between labels
    - report: curvature dump at the points of a CSV file
    - verify: run the identity verification suite
    - zoo list: show the named example metrics

    Exit codes: 0 ok, 1 verification failure, 2 usage or parse error,
    3 domain or numerical error.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        sys.exit(EXIT_USAGE)

    from .errors import FinslerError, ParseError
    from .utils import log

    log(f"Starting {args.command}", level="DEBUG")
    try:
        code = COMMANDS[args.command](args)
    except ParseError as e:
        log(f"ERROR: {e}", level="ERROR")
        sys.exit(EXIT_USAGE)
    except FinslerError as e:
        log(f"ERROR: {type(e).__name__}: {e}", level="ERROR")
        sys.exit(EXIT_NUMERICAL)
    except Exception as e:
        log(f"FATAL ERROR: {e}", level="ERROR")
        import traceback

        log(traceback.format_exc(), level="ERROR")
        sys.exit(EXIT_NUMERICAL)
    log(f"Finished {args.command} (exit {code})", level="DEBUG")
    sys.exit(code)


if __name__ == "__main__":
    main()
