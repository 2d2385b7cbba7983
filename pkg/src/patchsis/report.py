"""Serialization of trajectories, equilibrium reports and dynamics tables.

Numeric series are CSV with 17 significant digits, enough for every double
to survive a text round-trip unchanged. Reports are JSON with sorted keys.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Sequence

import numpy as np

from .equilibria import Equilibrium, enumerate_equilibria, x2_feasibility
from .model import COMPONENTS, Parameters
from .stability import StabilityVerdict, classify

TRAJECTORY_HEADER = ("t",) + COMPONENTS


def fmt(x) -> str:
    """Shortest text that reads back as the same double (17 significant digits)."""
    return format(float(x), ".17g")


# -- trajectories -------------------------------------------------------------

def emit_trajectory_csv(traj) -> str:
    lines = [",".join(TRAJECTORY_HEADER)]
    for t, row in zip(traj.times, traj.states):
        lines.append(",".join([fmt(t)] + [fmt(v) for v in row]))
    lines.append(f"# verdict={traj.verdict_label}")
    return "\n".join(lines) + "\n"


def read_trajectory_csv(text: str):
    """Inverse of :func:`emit_trajectory_csv`: ``(times, states, verdict_label)``."""
    verdict = ""
    rows = []
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != TRAJECTORY_HEADER:
        raise ValueError(f"unexpected trajectory header {header!r}")
    for row in reader:
        if row and row[0].startswith("#"):
            verdict = ",".join(row).partition("verdict=")[2]
            continue
        rows.append([float(v) for v in row])
    data = np.array(rows, dtype=float).reshape(-1, 5)
    return data[:, 0], data[:, 1:], verdict


# -- equilibrium reports ------------------------------------------------------

def _plain(value):
    """Convert numpy scalars, complex numbers and non-finite floats to JSON data."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [_plain(value.real), _plain(value.imag)]
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def equilibrium_entry(eq: Equilibrium, verdict: StabilityVerdict | None = None) -> dict:
    entry = {
        "id": eq.id,
        "kind": eq.kind.value,
        "state": dict(zip(COMPONENTS, eq.state)),
        "residual_norm": eq.residual_norm,
        "provenance": eq.provenance.value,
        "flags": list(eq.flags),
    }
    if verdict is not None:
        entry["class"] = verdict.cls.value
        entry["max_real"] = verdict.spectrum.max_real
        entry["eigenvalues"] = [[z.real, z.imag] for z in verdict.spectrum.eigenvalues]
        entry["checks"] = dict(verdict.checks)
    return entry


def emit_report(params: Parameters, equilibria: Sequence[Equilibrium],
                verdicts: Sequence[StabilityVerdict] | None = None) -> str:
    """JSON report of ``equilibria`` with optional stability verdicts, keys sorted."""
    if verdicts is None:
        verdicts = [None] * len(equilibria)
    doc = {
        "scenario": params.scenario.short,
        "params": params.as_dict(),
        "params_digest": params.digest(),
        "equilibria": [equilibrium_entry(e, v) for e, v in zip(equilibria, verdicts)],
    }
    if params.is_m1 and params.r1 > 0 and params.gamma2 > 0 and params.mu2 > 0:
        feas = x2_feasibility(params)
        doc["x2_feasibility"] = {"feasible": feas.feasible, "margins": list(feas.margins)}
    return json.dumps(_plain(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def build_report(params: Parameters, with_stability: bool = True,
                 n_starts: int = 200, seed: int = 0) -> str:
    eqs = enumerate_equilibria(params, n_starts=n_starts, seed=seed)
    verdicts = [classify(e, params) for e in eqs] if with_stability else None
    return emit_report(params, eqs, verdicts)


# -- tables -------------------------------------------------------------------

def _table(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return out.getvalue()


def emit_basin_table(basin) -> str:
    (ax0, ax1) = basin.axes
    v0, v1 = ax0.values(), ax1.values()
    rows = [
        (float(v0[i]), float(v1[j]), basin.labels[i][j])
        for i in range(ax0.n) for j in range(ax1.n)
    ]
    fixed = " ".join(f"{c}={fmt(v)}" for c, v in sorted(basin.fixed.items()))
    return (f"# params_digest={basin.params_digest} fixed: {fixed}\n"
            + _table((ax0.component, ax1.component, "label"), rows))


def emit_sweep_table(rows) -> str:
    header = ("value", "equilibrium", "kind") + COMPONENTS + (
        "residual_norm", "stability", "max_real", "error")
    out = []
    for r in rows:
        state = tuple(r.state) if r.state else ("",) * 4
        out.append((r.value, r.equilibrium, r.kind) + state
                   + (r.residual_norm if r.equilibrium else "", r.stability,
                      r.max_real if r.stability else "", r.error))
    return _table(header, out)


def emit_hopf_table(points) -> str:
    header = ("value", "residual_before", "residual_after", "complex_pair_real_part", "residual")
    return _table(header, [(p.value, p.residual_before, p.residual_after,
                            p.complex_pair_real_part, p.residual) for p in points])
