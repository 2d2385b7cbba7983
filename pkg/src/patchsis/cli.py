"""Command-line entry points.

Exit codes: 0 on success, 1 on a usage or configuration error, 2 when a
computation fails (non-convergence, blow-up, lost branch).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .config import AxisRange, RunConfig, config_from_dict, parse_config
from .dynamics import GridAxis, basin_grid, hopf_scan, parameter_sweep
from .equilibria import enumerate_equilibria
from .errors import ComputationError, PatchSISError
from .fixtures import FIXTURES
from .integrator import IntegrationSettings, Verdict, integrate
from .model import COMPONENTS, PARAM_NAMES
from .report import (
    emit_basin_table,
    emit_hopf_table,
    emit_report,
    emit_sweep_table,
    emit_trajectory_csv,
)
from .stability import classify

EXIT_OK, EXIT_USAGE, EXIT_COMPUTATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; 2 is reserved here for
    # computational failure
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage().rstrip()}")


def _diag(level: str, message: str) -> None:
    colors = {"error": "31", "warning": "33"}
    if sys.stderr.isatty() and "NO_COLOR" not in os.environ and level in colors:
        level = f"\033[{colors[level]}m{level}\033[0m"
    print(f"{level}: {message}", file=sys.stderr)


# -- argument parsing ---------------------------------------------------------

def _reals(text: str, n: int, what: str) -> list:
    parts = text.split(",")
    if len(parts) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"{what}: not a number in {text!r}") from None


def _range(text: str, what: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"{what} must look like lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"{what}: cannot parse {text!r}") from None
    if n < 1:
        raise UsageError(f"{what}: n must be >= 1")
    return lo, hi, n


def _grid(text: str) -> tuple:
    specs = text.split(",")
    if len(specs) != 2:
        raise UsageError("--grid needs two axes, e.g. S1:0:5:21,I1:0:5:21")
    axes = []
    for spec in specs:
        name, _, rest = spec.partition(":")
        if name not in COMPONENTS:
            raise UsageError(f"--grid: unknown component {name!r}")
        axes.append(AxisRange(name, *_range(rest, "--grid")))
    return tuple(axes)


def _fixed(text: str) -> dict:
    out = {}
    for item in text.split(","):
        name, sep, value = item.partition("=")
        if not sep or name not in COMPONENTS:
            raise UsageError(f"--fixed entries look like S2=3, got {item!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"--fixed: not a number in {item!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="patchsis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def common(p, integration=False):
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--fixture", help="built-in parameter set, e.g. M1_X1")
        p.add_argument("--out", type=Path, help="write data here instead of stdout")
        if integration:
            p.add_argument("--t-max", type=float)
            p.add_argument("--rel-tol", type=float)
            p.add_argument("--abs-tol", type=float)

    def search(p):
        p.add_argument("--n-starts", type=int, default=200, help="multi-start Newton starts")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="integrate one trajectory to CSV")
    common(p, integration=True)
    p.add_argument("--initial", help="initial state S1,I1,S2,I2")

    p = sub.add_parser("equilibria", help="enumerate equilibria")
    common(p)
    search(p)

    p = sub.add_parser("stability", help="equilibria with spectra and stability checks")
    common(p)
    search(p)

    p = sub.add_parser("sweep", help="equilibria and stability along one parameter")
    common(p)
    search(p)
    p.add_argument("--axis", choices=PARAM_NAMES)
    p.add_argument("--range", dest="range_", metavar="LO:HI:N")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("hopf-scan", help="Hopf points along an equilibrium branch")
    common(p)
    p.add_argument("--axis", choices=PARAM_NAMES)
    p.add_argument("--range", dest="range_", metavar="LO:HI:N")
    p.add_argument("--branch", help="equilibrium id to follow (default X1)")

    p = sub.add_parser("basin", help="label a grid of initial states by their limit")
    common(p, integration=True)
    p.add_argument("--grid", metavar="C:LO:HI:N,C:LO:HI:N")
    p.add_argument("--fixed", metavar="C=V,C=V")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("fixtures", help="list the built-in parameter sets")
    p.add_argument("--out", type=Path, help="write data here instead of stdout")
    return parser


# -- commands -----------------------------------------------------------------

def _load_config(args) -> RunConfig:
    if args.config and args.fixture:
        raise UsageError("give either --config or --fixture, not both")
    if args.config:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        return parse_config(text)
    if args.fixture:
        return config_from_dict({"fixture": args.fixture})
    raise UsageError(f"{args.command} needs --config or --fixture")


def _settings(args, config: RunConfig) -> IntegrationSettings:
    overrides = dict(config.integration)
    for flag, field in (("t_max", "t_max"), ("rel_tol", "rel_tol"), ("abs_tol", "abs_tol")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    return IntegrationSettings(**overrides)


def _cmd_simulate(args, config):
    if args.initial:
        initial = _reals(args.initial, 4, "--initial")
    elif config.initial is not None:
        initial = list(config.initial)
    else:
        raise UsageError("simulate needs --initial or an 'initial' block in the config")
    catalog = enumerate_equilibria(config.params)
    traj = integrate(initial, config.params, _settings(args, config), catalog)
    data = emit_trajectory_csv(traj)
    if traj.verdict is Verdict.BLEW_UP:
        return data, f"BLEW_UP: {traj.message}"
    if traj.verdict is Verdict.TIMED_OUT:
        _diag("warning", f"no steady state reached ({traj.message})")
    elif traj.equilibrium_id is None:
        _diag("warning", "settled at a point that matches no catalogued equilibrium")
    return data, None


def _cmd_equilibria(args, config, with_stability):
    eqs = enumerate_equilibria(config.params, n_starts=args.n_starts, seed=args.seed)
    verdicts = [classify(e, config.params) for e in eqs] if with_stability else None
    return emit_report(config.params, eqs, verdicts), None


def _axis_from(args, block: AxisRange | None, what: str) -> AxisRange:
    if args.axis or args.range_:
        if not (args.axis and args.range_):
            raise UsageError(f"{what} needs both --axis and --range")
        return AxisRange(args.axis, *_range(args.range_, "--range"))
    if block is None:
        raise UsageError(f"{what} needs --axis and --range or a config block")
    return block


def _cmd_sweep(args, config):
    axis = _axis_from(args, config.sweep, "sweep")
    values = np.linspace(axis.lo, axis.hi, axis.n)
    rows = parameter_sweep(config.params, axis.name, values, n_starts=args.n_starts,
                           seed=args.seed, workers=args.workers)
    return emit_sweep_table(rows), None


def _cmd_hopf(args, config):
    block = config.scan
    axis = _axis_from(args, block.axis if block else None, "hopf-scan")
    branch = args.branch or (block.branch if block else "X1")
    if axis.n < 2:
        raise UsageError("hopf-scan needs n >= 2")
    points = hopf_scan(config.params, axis.name, axis.lo, axis.hi, axis.n, branch)
    return emit_hopf_table(points), None


def _cmd_basin(args, config):
    if args.grid:
        axes = _grid(args.grid)
        fixed = _fixed(args.fixed) if args.fixed else {}
    elif config.grid:
        axes, fixed = config.grid.axes, dict(config.grid.fixed)
    else:
        raise UsageError("basin needs --grid and --fixed or a 'grid' block in the config")
    grid = basin_grid(config.params, [GridAxis(a.name, a.lo, a.hi, a.n) for a in axes],
                      fixed, _settings(args, config), workers=args.workers)
    return emit_basin_table(grid), None


def _cmd_fixtures():
    doc = [
        {"name": f.name, "scenario": f.params.scenario.short, "expected": f.expected_kind,
         "params": f.params.as_dict(), "initial": list(f.initial), "note": f.note}
        for f in FIXTURES.values()
    ]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n", None


def _dispatch(args):
    if args.command == "fixtures":
        return _cmd_fixtures()
    config = _load_config(args)
    if args.command == "simulate":
        return _cmd_simulate(args, config)
    if args.command == "equilibria":
        return _cmd_equilibria(args, config, with_stability=False)
    if args.command == "stability":
        return _cmd_equilibria(args, config, with_stability=True)
    if args.command == "sweep":
        return _cmd_sweep(args, config)
    if args.command == "hopf-scan":
        return _cmd_hopf(args, config)
    return _cmd_basin(args, config)


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            args = parser.parse_args(argv)
            if not args.command:
                raise UsageError(parser.format_usage().rstrip())
            data, failure = _dispatch(args)
        except UsageError as exc:
            _diag("error", str(exc))
            return EXIT_USAGE
        except ComputationError as exc:
            _diag("error", f"{exc.code}: {exc}")
            return EXIT_COMPUTATION
        except (PatchSISError, ValueError) as exc:
            _diag("error", str(exc))
            return EXIT_USAGE
        finally:
            for message in dict.fromkeys(str(w.message) for w in caught):
                _diag("warning", message)

    if args.out:
        try:
            args.out.write_text(data, encoding="utf-8")
        except OSError as exc:
            _diag("error", f"cannot write output: {exc}")
            return EXIT_USAGE
    else:
        sys.stdout.write(data)
    if failure:
        _diag("error", failure)
        return EXIT_COMPUTATION
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
