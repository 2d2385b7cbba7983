"""JSON run configurations.

A configuration names a scenario and either all fourteen parameters or a
built-in fixture whose values the ``params`` block then overrides::

    {"scenario": "M1", "fixture": "M1_X1", "params": {"m21": 14}}

Optional blocks: ``initial`` (four reals), ``integration`` (integrator
settings), ``grid``, ``sweep`` and ``scan``.
"""

from __future__ import annotations

import dataclasses
import json
import math

from .errors import ConfigError, ParameterError
from .fixtures import FIXTURES
from .integrator import IntegrationSettings
from .model import COMPONENTS, PARAM_NAMES, Parameters, Scenario, validate_params

TOP_KEYS = ("scenario", "fixture", "params", "initial", "integration", "grid", "sweep", "scan")
INTEGRATION_KEYS = tuple(f.name for f in dataclasses.fields(IntegrationSettings))
_COUNT_KEYS = {"max_steps", "quiet_steps"}


@dataclasses.dataclass(frozen=True)
class AxisRange:
    """A named axis sampled at ``n`` evenly spaced points of ``[lo, hi]``."""

    name: str
    lo: float
    hi: float
    n: int


@dataclasses.dataclass(frozen=True)
class GridSpec:
    axes: tuple  # two AxisRange over state components
    fixed: tuple  # sorted (component, value) pairs


@dataclasses.dataclass(frozen=True)
class ScanSpec:
    axis: AxisRange
    branch: str = "X1"


@dataclasses.dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    params: Parameters
    fixture: str | None = None
    initial: tuple | None = None
    integration: tuple = ()  # sorted (field, value) overrides
    grid: GridSpec | None = None
    sweep: AxisRange | None = None
    scan: ScanSpec | None = None

    def settings(self) -> IntegrationSettings:
        return IntegrationSettings(**dict(self.integration))


# -- field readers ------------------------------------------------------------

def _object(value, path) -> dict:
    if not isinstance(value, dict):
        raise ConfigError("expected an object", path)
    return value


def _check_keys(obj: dict, allowed, path, required=()):
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", _join(path, key))
    for key in required:
        if key not in obj:
            raise ConfigError(f"missing required key {key!r}", _join(path, key))


def _join(path, key) -> str:
    return f"{path}.{key}" if path else str(key)


def _real(value, path) -> float:
    # bool is an int subclass; a JSON true is not a number here
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number", path)
    x = float(value)
    if not math.isfinite(x):
        raise ConfigError("expected a finite number", path)
    return x


def _count(value, path, minimum=1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ConfigError("expected an integer", path)
    if value < minimum:
        raise ConfigError(f"must be >= {minimum}", path)
    return int(value)


def _string(value, path) -> str:
    if not isinstance(value, str):
        raise ConfigError("expected a string", path)
    return value


def _axis(obj, path, names) -> AxisRange:
    obj = _object(obj, path)
    _check_keys(obj, ("name", "lo", "hi", "n"), path, ("name", "lo", "hi", "n"))
    name = _string(obj["name"], _join(path, "name"))
    if name not in names:
        raise ConfigError(f"unknown name {name!r}; expected one of {', '.join(names)}",
                          _join(path, "name"))
    return AxisRange(name, _real(obj["lo"], _join(path, "lo")),
                     _real(obj["hi"], _join(path, "hi")), _count(obj["n"], _join(path, "n")))


def _grid(obj, path) -> GridSpec:
    obj = _object(obj, path)
    _check_keys(obj, ("axes", "fixed"), path, ("axes", "fixed"))
    axes = obj["axes"]
    if not isinstance(axes, list) or len(axes) != 2:
        raise ConfigError("expected a list of two axes", _join(path, "axes"))
    parsed = tuple(_axis(a, f"{path}.axes[{k}]", COMPONENTS) for k, a in enumerate(axes))
    if parsed[0].name == parsed[1].name:
        raise ConfigError("grid axes must differ", _join(path, "axes"))
    fixed = _object(obj["fixed"], _join(path, "fixed"))
    rest = [c for c in COMPONENTS if c not in (parsed[0].name, parsed[1].name)]
    _check_keys(fixed, rest, _join(path, "fixed"), rest)
    values = tuple((c, _real(fixed[c], _join(path, f"fixed.{c}"))) for c in rest)
    return GridSpec(parsed, values)


# -- parse / emit -------------------------------------------------------------

def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON configuration document.

    Raises
    ------
    ConfigError
        On a syntax error (with line and column) or an invalid value (with
        the dotted key path).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(doc)


def config_from_dict(doc) -> RunConfig:
    doc = _object(doc, "")
    _check_keys(doc, TOP_KEYS, "")

    fixture = None
    values = {}
    if "fixture" in doc:
        fixture = _string(doc["fixture"], "fixture")
        if fixture not in FIXTURES:
            raise ConfigError(f"unknown fixture {fixture!r}", "fixture")
        base = FIXTURES[fixture].params
        values = base.as_dict()
        scenario = base.scenario
        if "scenario" in doc:
            try:
                requested = Scenario.parse(_string(doc["scenario"], "scenario"))
            except ParameterError as exc:
                raise ConfigError(str(exc), "scenario") from None
            if requested is not scenario:
                raise ConfigError("fixture scenario mismatch", "scenario")
    elif "scenario" in doc:
        try:
            scenario = Scenario.parse(_string(doc["scenario"], "scenario"))
        except ParameterError as exc:
            raise ConfigError(str(exc), "scenario") from None
    else:
        raise ConfigError("missing required key 'scenario'", "scenario")

    if "params" in doc:
        block = _object(doc["params"], "params")
        _check_keys(block, PARAM_NAMES, "params", () if fixture else PARAM_NAMES)
        for name in PARAM_NAMES:
            if name in block:
                values[name] = _real(block[name], f"params.{name}")
    elif not fixture:
        raise ConfigError("missing required key 'params'", "params")

    params = Parameters(**values, scenario=scenario)
    try:
        validate_params(params)
    except ParameterError as exc:
        raise ConfigError(str(exc), f"params.{exc.field}") from None

    initial = None
    if "initial" in doc:
        raw = doc["initial"]
        if not isinstance(raw, list) or len(raw) != 4:
            raise ConfigError("expected a list of four numbers", "initial")
        initial = tuple(_real(v, f"initial[{k}]") for k, v in enumerate(raw))
        if min(initial) < 0:
            raise ConfigError("initial state must be nonnegative", "initial")
    elif fixture:
        initial = tuple(FIXTURES[fixture].initial)

    integration = ()
    if "integration" in doc:
        block = _object(doc["integration"], "integration")
        _check_keys(block, INTEGRATION_KEYS, "integration")
        integration = tuple(sorted(
            (k, _count(v, f"integration.{k}") if k in _COUNT_KEYS else _real(v, f"integration.{k}"))
            for k, v in block.items()
        ))
        try:
            IntegrationSettings(**dict(integration))
        except ValueError as exc:
            raise ConfigError(str(exc), "integration") from None

    grid = _grid(doc["grid"], "grid") if "grid" in doc else None
    sweep = _axis(doc["sweep"], "sweep", PARAM_NAMES) if "sweep" in doc else None
    scan = None
    if "scan" in doc:
        block = _object(doc["scan"], "scan")
        _check_keys(block, ("axis", "branch"), "scan", ("axis",))
        branch = _string(block.get("branch", "X1"), "scan.branch")
        scan = ScanSpec(_axis(block["axis"], "scan.axis", PARAM_NAMES), branch)

    return RunConfig(scenario, params, fixture, initial, integration, grid, sweep, scan)


def _axis_dict(axis: AxisRange) -> dict:
    return {"name": axis.name, "lo": axis.lo, "hi": axis.hi, "n": axis.n}


def config_to_dict(config: RunConfig) -> dict:
    """Plain-data form of ``config``; every parameter is written out in full."""
    doc = {"scenario": config.scenario.short, "params": config.params.as_dict()}
    if config.fixture:
        doc["fixture"] = config.fixture
    if config.initial is not None:
        doc["initial"] = list(config.initial)
    if config.integration:
        doc["integration"] = dict(config.integration)
    if config.grid:
        doc["grid"] = {"axes": [_axis_dict(a) for a in config.grid.axes],
                       "fixed": dict(config.grid.fixed)}
    if config.sweep:
        doc["sweep"] = _axis_dict(config.sweep)
    if config.scan:
        doc["scan"] = {"axis": _axis_dict(config.scan.axis), "branch": config.scan.branch}
    return doc


def emit_config(config: RunConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n"
