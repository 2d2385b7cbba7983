"""Basin grids, parameter sweeps and Hopf scans built on the integrator."""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .equilibria import EquilibriumKind, enumerate_equilibria, newton_solve
from .errors import (
    BranchLostError,
    NonConvergedError,
    ParameterError,
    PreconditionError,
    SingularJacobianError,
)
from .integrator import IntegrationSettings, Verdict, integrate
from .model import COMPONENTS, PARAM_NAMES, Parameters, jacobian, validate_params
from .stability import (
    _EXPLICIT_ROW,
    classify,
    extract_cubic_factor,
    find_explicit_row,
    hopf_residual_from_jacobian,
)

TIMED_OUT = "TIMED_OUT"
HOPF_RESIDUAL_TOL = 1e-8
HOPF_REAL_TOL = 1e-6


def _run_map(fn, tasks, workers):
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [fn(t) for t in tasks]


# -- basin of attraction ------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class GridAxis:
    component: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.component not in COMPONENTS:
            raise PreconditionError(f"unknown component {self.component!r}")
        if self.n < 1:
            raise PreconditionError("grid axis needs n >= 1")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclasses.dataclass(frozen=True)
class BasinMap:
    axes: tuple
    fixed: dict
    labels: tuple  # labels[i][j]: i indexes axes[0], j indexes axes[1]
    params_digest: str
    catalog_ids: tuple

    def counts(self) -> dict:
        out = {}
        for row in self.labels:
            for lab in row:
                out[lab] = out.get(lab, 0) + 1
        return dict(sorted(out.items()))


def _basin_cell(task):
    state, params, settings, catalog = task
    traj = integrate(state, params, settings, catalog)
    if traj.verdict is Verdict.CONVERGED and traj.equilibrium_id:
        return traj.equilibrium_id
    return TIMED_OUT


def basin_grid(params: Parameters, axes: Sequence[GridAxis], fixed: dict,
               settings: IntegrationSettings | None = None, catalog=None,
               workers: int | None = None) -> BasinMap:
    """Label every node of a 2-D grid of initial states by where it ends up.

    Runs that do not settle on a catalogued equilibrium are labelled
    ``TIMED_OUT``. Output order is row-major and independent of ``workers``.
    """
    validate_params(params)
    ax0, ax1 = axes
    if ax0.component == ax1.component:
        raise PreconditionError("grid axes must be two different components")
    rest = [c for c in COMPONENTS if c not in (ax0.component, ax1.component)]
    missing = [c for c in rest if c not in fixed]
    if missing:
        raise PreconditionError(f"fixed values required for {', '.join(missing)}")
    if catalog is None:
        catalog = enumerate_equilibria(params)
    settings = settings or IntegrationSettings()

    tasks = []
    for u in ax0.values():
        for v in ax1.values():
            x = dict(fixed)
            x[ax0.component], x[ax1.component] = float(u), float(v)
            tasks.append(([x[c] for c in COMPONENTS], params, settings, tuple(catalog)))
    flat = _run_map(_basin_cell, tasks, workers)
    labels = tuple(tuple(flat[i * ax1.n:(i + 1) * ax1.n]) for i in range(ax0.n))
    return BasinMap(tuple(axes), {c: float(fixed[c]) for c in rest}, labels,
                    params.digest(), tuple(e.id for e in catalog))


# -- parameter sweep ----------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class SweepRow:
    value: float
    equilibrium: str = ""
    kind: str = ""
    state: tuple = ()
    residual_norm: float = math.nan
    stability: str = ""
    max_real: float = math.nan
    error: str = ""


def _sweep_point(task):
    params, axis, value, with_stability, n_starts, seed = task
    try:
        p = validate_params(params.replace(**{axis: value}))
    except ParameterError as exc:
        return [SweepRow(value, error=str(exc))]
    rows = []
    for eq in enumerate_equilibria(p, n_starts=n_starts, seed=seed):
        cls, max_real = "", math.nan
        if with_stability:
            verdict = classify(eq, p)
            cls, max_real = verdict.cls.value, verdict.spectrum.max_real
        rows.append(SweepRow(value, eq.id, eq.kind.value, tuple(eq.state),
                             eq.residual_norm, cls, max_real))
    return rows


def parameter_sweep(params: Parameters, axis: str, values: Sequence[float],
                    report: Sequence[str] = ("equilibria", "stability"),
                    n_starts: int = 200, seed: int = 0,
                    workers: int | None = None) -> list:
    """One row per (value, equilibrium); invalid values give a single error row."""
    if axis not in PARAM_NAMES:
        raise PreconditionError(f"unknown parameter {axis!r}")
    values = [float(v) for v in values]
    if not all(math.isfinite(v) for v in values):
        raise PreconditionError("sweep values must be finite")
    with_stability = "stability" in report
    tasks = [(params, axis, v, with_stability, n_starts, seed) for v in values]
    return [row for rows in _run_map(_sweep_point, tasks, workers) for row in rows]


# -- Hopf scanning ------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class HopfPoint:
    value: float
    residual_before: float
    residual_after: float
    complex_pair_real_part: float
    residual: float


class EquilibriumBranch:
    """An equilibrium followed in one parameter by warm-started Newton.

    Components that are zero at the starting point stay pinned at zero, so
    boundary equilibria remain on their invariant face.
    """

    def __init__(self, params: Parameters, axis: str, start_value: float, state,
                 kind: EquilibriumKind = EquilibriumKind.OTHER):
        if axis not in PARAM_NAMES:
            raise PreconditionError(f"unknown parameter {axis!r}")
        self.params = params
        self.axis = axis
        self.kind = kind
        x = np.asarray(state, dtype=float)
        self.mask = tuple(bool(v == 0.0) for v in x)
        self._solved = {float(start_value): x}
        self.last_good = float(start_value)

    def params_at(self, value: float) -> Parameters:
        return self.params.replace(**{self.axis: float(value)})

    def state_at(self, value: float) -> np.ndarray:
        value = float(value)
        if value in self._solved:
            return self._solved[value]
        nearest = min(self._solved, key=lambda v: abs(v - value))
        try:
            x, _ = newton_solve(self._solved[nearest], self.params_at(value), self.mask)
        except (NonConvergedError, SingularJacobianError) as exc:
            raise BranchLostError(
                f"continuation failed at {self.axis}={value:.10g}: {exc}", self.last_good
            ) from None
        if any(v <= 0.0 for v, pinned in zip(x, self.mask) if not pinned):
            # a positive component reached zero: the branch collided with
            # another one or left the feasible region
            raise BranchLostError(
                f"branch left the positive face at {self.axis}={value:.10g}", self.last_good)
        self._solved[value] = x
        return x

    def jacobian_at(self, value: float) -> np.ndarray:
        x = self.state_at(value)
        self.last_good = float(value)
        return jacobian(x, self.params_at(value))

    def explicit_row(self, J):
        row = _EXPLICIT_ROW.get(self.kind)
        return row if row is not None else find_explicit_row(J)


def _verify_hopf(J, explicit_row):
    """Real part of the near-axis complex pair, or ``None`` when verification fails."""
    if explicit_row is not None:
        roots = [complex(r) for r in np.roots(extract_cubic_factor(J, explicit_row).cubic)]
    else:
        roots = [complex(r) for r in np.linalg.eigvals(J)]
    complex_idx = [i for i, r in enumerate(roots) if abs(r.imag) > 1e-9]
    if len(complex_idx) < 2:
        return None
    i = min(complex_idx, key=lambda k: abs(roots[k].real))
    j = min((k for k in complex_idx if k != i),
            key=lambda k: abs(roots[k] - roots[i].conjugate()))
    others = [r for k, r in enumerate(roots) if k not in (i, j)]
    if abs(roots[i].real) < HOPF_REAL_TOL and all(r.real < 0 for r in others):
        return roots[i].real
    return None


def scan_residual(jacobian_at: Callable[[float], np.ndarray], lo: float, hi: float, n: int,
                  explicit_row: Callable | None = None) -> list:
    """Find verified Hopf points of a one-parameter family of Jacobians.

    ``jacobian_at(value)`` returns the Jacobian at the branch point for
    ``value``; ``explicit_row(J)`` picks the deflation row, defaulting to
    auto-detection with the quartic Hurwitz determinant as fallback.
    """
    if n < 2:
        raise PreconditionError("a scan needs n >= 2 samples")
    pick_row = explicit_row or find_explicit_row

    def evaluate(v):
        J = jacobian_at(v)
        row = pick_row(J)
        return hopf_residual_from_jacobian(J, row), J, row

    values = [float(v) for v in np.linspace(lo, hi, n)]
    samples = [evaluate(v)[0] for v in values]

    candidates = []  # (value, residual_before, residual_after)
    if samples[0] == 0.0:
        candidates.append((values[0], samples[0], samples[0]))
    for k in range(n - 1):
        ra, rb = samples[k], samples[k + 1]
        if rb == 0.0:
            candidates.append((values[k + 1], ra, rb))
        elif ra != 0.0 and (ra < 0) != (rb < 0):
            a, b, fa = values[k], values[k + 1], ra
            v = 0.5 * (a + b)
            for _ in range(200):
                v = 0.5 * (a + b)
                r = evaluate(v)[0]
                if abs(r) < HOPF_RESIDUAL_TOL or b - a <= 4e-16 * max(1.0, abs(v)):
                    break
                if (r < 0) == (fa < 0):
                    a, fa = v, r
                else:
                    b = v
            candidates.append((v, ra, rb))

    points = []
    for v, before, after in candidates:
        r, J, row = evaluate(v)
        re = _verify_hopf(J, row)
        if re is not None:
            points.append(HopfPoint(v, before, after, re, r))
    return points


def find_branch_start(params: Parameters, branch: str):
    """The equilibrium with id ``branch`` (e.g. ``"X1"``) for ``params``."""
    for eq in enumerate_equilibria(params):
        if eq.id == branch:
            return eq
    raise BranchLostError(f"no equilibrium {branch!r} at the scan start", None)


def hopf_scan(params: Parameters, axis: str, lo: float, hi: float, n: int,
              branch: str = "X1") -> list:
    """Track equilibrium ``branch`` over ``axis`` in ``[lo, hi]`` and report Hopf points.

    Each sign change of the Hopf residual is bisected to ``|residual| <
    1e-8`` and kept only if the Jacobian there has a complex pair with real
    part below 1e-6 in magnitude and the remaining deflated roots are
    negative.

    Raises
    ------
    BranchLostError
        When Newton continuation fails; ``last_value`` is the last solved value.
    """
    start_params = validate_params(params.replace(**{axis: float(lo)}))
    start = find_branch_start(start_params, branch)
    track = EquilibriumBranch(params, axis, lo, start.array, start.kind)
    return scan_residual(track.jacobian_at, lo, hi, n, track.explicit_row)
