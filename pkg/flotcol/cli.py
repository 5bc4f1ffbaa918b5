"""
Command-line interface.

Subcommands::

    flotcol simulate scenario.json   # series.csv, outlets.csv, metadata.json, SVGs
    flotcol steady point.json        # profile.csv, report.json, profile.svg
    flotcol chart chartspec.json     # chart.csv, chart.svg
    flotcol check point.json         # feasibility report on standard output
    flotcol params physical.json     # derived constitutive parameters

Validation failures exit with status 1 and numerical failures with status 2;
both write ``{"error": ..., "message": ...}`` to standard error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
from pathlib import Path
import sys
from typing import List, NoReturn, Optional

from . import io, plotting
from .chart import evaluate_chart, export_chart
from .constitutive import physical_drainage_velocity
from .errors import InvalidArguments, NumericalError, ValidationError
from .simulation import run
from .steady_state import check_conditions, desired_steady_state

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _configure_logging(level: int) -> None:
    logging.basicConfig(
        level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s"
    )
    logging.getLogger().setLevel(level)
    logging.captureWarnings(True)


def _simulate(args: argparse.Namespace) -> int:
    scenario = io.load_scenario(args.scenario)
    overrides = {
        name: value
        for name, value in (
            ("N", args.n_cells),
            ("T_end", args.t_end),
            ("output_every", args.output_every),
        )
        if value is not None
    }
    if overrides:
        scenario = dataclasses.replace(scenario, **overrides)
    series = run(scenario)
    io.write_series(series, args.out_dir)
    plotting.profiles_svg(series, args.out_dir / "profiles.svg")
    plotting.outlets_svg(series, args.out_dir / "outlets.svg")
    return 0


def _steady(args: argparse.Namespace) -> int:
    op, p, geom = io.load_point(args.point)
    profile = desired_steady_state(op, p, geom)
    io.write_steady(profile, args.out_dir)
    plotting.profile_svg(profile, args.out_dir / "profile.svg")
    return 0


def _chart(args: argparse.Namespace) -> int:
    spec = io.chart_spec_from_dict(io.read_json(args.chartspec))
    result = evaluate_chart(spec)
    export_chart(result, args.out_dir / "chart.csv")
    return 0


def _check(args: argparse.Namespace) -> int:
    op, p, geom = io.load_point(args.point)
    print(io.report_to_json(check_conditions(op, p, geom)))
    return 0


def _params(args: argparse.Namespace) -> int:
    phys, p = io.derived_params_from_dict(io.read_json(args.physical))
    logger.info(
        "force-balance drainage velocity %.6g m/s, compatible value %.6g m/s",
        physical_drainage_velocity(phys),
        p.v_drain,
    )
    print(io.dumps(io.params_to_dict(p)))
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise InvalidArguments(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="flotcol",
        description="Steady states, operating charts and simulations of a "
        "froth flotation column",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument(
        "-v", "--verbose", action="store_true", help="Log debug messages."
    )
    verbosity.add_argument(
        "-q", "--quiet", action="store_true", help="Log warnings and errors only."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Run a scenario file.")
    simulate.add_argument("scenario", type=Path)
    simulate.add_argument("--n-cells", type=int, help="Override the cell count N.")
    simulate.add_argument("--t-end", type=float, help="Override T_end [s].")
    simulate.add_argument(
        "--output-every", type=float, help="Override the snapshot spacing [s]."
    )
    simulate.set_defaults(handler=_simulate)

    steady = sub.add_parser("steady", help="Desired steady state of a point.")
    steady.add_argument("point", type=Path)
    steady.set_defaults(handler=_steady)

    chart = sub.add_parser("chart", help="Operating chart over (Q_U, Q_F).")
    chart.add_argument("chartspec", type=Path)
    chart.set_defaults(handler=_chart)

    for name, parsed in (("simulate", simulate), ("steady", steady), ("chart", chart)):
        parsed.add_argument(
            "--out-dir",
            type=Path,
            default=Path("."),
            help=f"Directory for the {name} outputs (default: current directory).",
        )

    check = sub.add_parser("check", help="Print the feasibility report of a point.")
    check.add_argument("point", type=Path)
    check.set_defaults(handler=_check)

    params = sub.add_parser("params", help="Derive constitutive parameters.")
    params.add_argument("physical", type=Path)
    params.set_defaults(handler=_params)
    return parser


def _fail(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    """Command line entry point."""
    try:
        args = build_parser().parse_args(argv)
    except InvalidArguments as exc:
        return _fail(exc, EXIT_VALIDATION)
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    else:
        level = logging.INFO
    _configure_logging(level)
    out_dir = getattr(args, "out_dir", None)
    try:
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
        return args.handler(args)
    except ValidationError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except NumericalError as exc:
        return _fail(exc, EXIT_NUMERICAL)
    except OSError as exc:
        return _fail(exc, EXIT_VALIDATION)


if __name__ == "__main__":
    sys.exit(main())
