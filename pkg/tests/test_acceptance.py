"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
Run ``pytest tests/test_acceptance.py -v`` to see them.
"""

import math
import time

import numpy as np
from conftest import random_params
from scipy.differentiate import jacobian as fd_jacobian

from patchsis.dynamics import (
    GridAxis,
    basin_grid,
    hopf_scan,
    parameter_sweep,
    scan_residual,
)
from patchsis.equilibria import (
    EquilibriumKind,
    enumerate_equilibria,
    origin,
    solve_u,
    uw_reduced_polynomials,
    x1_closed_form,
    x2_closed_form,
    x2_feasibility,
)
from patchsis.fixtures import FIXTURES
from patchsis.integrator import integrate
from patchsis.model import Scenario, jacobian, rhs, rhs_tuple, total_net_growth
from patchsis.report import emit_basin_table, emit_sweep_table
from patchsis.stability import (
    StabilityClass,
    classify,
    eigenvalues_4x4,
    match_eigenvalues,
    origin_eigenvalues_m1,
    origin_eigenvalues_m2,
    routh_hurwitz_cubic,
    x1_explicit_checks,
)

M1, M2 = Scenario.M1_UNIDIRECTIONAL, Scenario.M2_NO_INFECTED_MIGRATION
STABLE_FIXTURES = {"M1_X1": "X1", "M1_COEX": "COEX_M1", "M2_U": "U", "M2_W": "W",
                   "M2_COEX": "COEX_M2"}


def test_criterion_01_fixture_regression(acceptance):
    start = time.perf_counter()
    failures = []
    for name, ident in STABLE_FIXTURES.items():
        f = FIXTURES[name]
        catalog = enumerate_equilibria(f.params)
        eq = next((e for e in catalog if e.id == ident), None)
        if eq is None:
            failures.append(f"{name}: {ident} not found")
            continue
        verdict = classify(eq, f.params)
        if verdict.cls is not StabilityClass.STABLE or not verdict.spectrum.max_real < -1e-8:
            failures.append(f"{name}: {ident} is {verdict.cls.value}")
        traj = integrate(f.initial, f.params, catalog=catalog)
        gap = float(np.max(np.abs(traj.final_state - eq.array)))
        if traj.equilibrium_id != ident or gap >= 1e-5 or traj.times[-1] > 1e4:
            failures.append(f"{name}: run ended {traj.verdict_label}, gap {gap:.1e}")
    elapsed = time.perf_counter() - start
    acceptance(1, "five stable fixtures found, STABLE and reached by integration",
               not failures and elapsed < 30, f"{elapsed:.2f} s; {'; '.join(failures) or 'all ok'}")


def test_criterion_02_m1_x2_resolution(acceptance):
    p = FIXTURES["M1_X2"].params
    eq = x2_closed_form(p)
    exact = np.array([55.0, 0.0, 8.0, 21.0])
    residual = float(np.max(np.abs(rhs(exact, p))))
    feas = x2_feasibility(p)
    verdict = classify(eq, p)
    spectrum = ", ".join(f"{z.real:.6g}{z.imag:+.6g}i" for z in verdict.spectrum.eigenvalues)
    ok = (residual < 1e-10 and np.allclose(eq.state, exact, rtol=1e-14)
          and feas.feasible and np.allclose(feas.margins, (10.5, 27.5), rtol=1e-14))
    acceptance(2, "X2 = (55,0,8,21) exact and feasible with margins (10.5, 27.5)", ok,
               f"residual {residual:.1e}, margins {feas.margins}, class "
               f"{verdict.cls.value}, spectrum [{spectrum}]")


def test_criterion_03_closed_form_eigenvalues(acceptance):
    worst = 0.0
    cases = [f.params for f in FIXTURES.values()]
    rng = np.random.default_rng(3)
    cases += [random_params(rng, M1 if k % 2 == 0 else M2) for k in range(100)]
    for p in cases:
        at_origin = eigenvalues_4x4(jacobian([0, 0, 0, 0], p)).eigenvalues
        closed = origin_eigenvalues_m1(p) if p.is_m1 else origin_eigenvalues_m2(p)
        worst = max(worst, match_eigenvalues(closed, at_origin))
        if p.is_m1:
            numeric = eigenvalues_4x4(jacobian(x1_closed_form(p).state, p)).eigenvalues
            worst = max(worst, match_eigenvalues(x1_explicit_checks(p).eigenvalues(), numeric))
    anchor = eigenvalues_4x4(jacobian([0, 0, 3, 3], FIXTURES["M1_X1"].params)).eigenvalues
    expected = (-6 / 7, -22 / 14, complex(-1, math.sqrt(2)), complex(-1, -math.sqrt(2)))
    anchor_err = match_eigenvalues(expected, anchor)
    acceptance(3, "origin and X1 closed-form eigenvalues match the numeric spectrum",
               worst < 1e-9 and anchor_err < 1e-9,
               f"worst {worst:.1e} over {len(cases)} parameter sets, M1_X1 anchor {anchor_err:.1e}")


def test_criterion_04_stab_x1_equivalence(acceptance):
    rng = np.random.default_rng(4)
    agree = checked = 0
    for _ in range(1000):
        c = x1_explicit_checks(random_params(rng, M1))
        if abs(c.stab_condition_margin) <= 1e-9:
            continue
        checked += 1
        agree += math.copysign(1, c.stab_condition_margin) == math.copysign(1, -c.lambda2)
    margin = x1_explicit_checks(FIXTURES["M1_X1"].params).stab_condition_margin
    acceptance(4, "sign of the stab_X1 margin equals sign(-lambda2)",
               agree == checked and checked > 900 and margin == 6.0,
               f"{agree}/{checked} agree, M1_X1 margin {margin!r}")


def test_criterion_05_jacobian_finite_differences(acceptance):
    rng = np.random.default_rng(5)
    worst = 0.0
    for scenario in (M1, M2):
        for _ in range(100):
            p = random_params(rng, scenario)
            x = rng.uniform(0, 20, 4)
            ref = fd_jacobian(lambda y: np.array(rhs_tuple(*y, p)), x).df
            # relative error, with unit floor for entries that vanish
            err = np.abs(jacobian(x, p) - ref) / np.maximum(np.abs(ref), 1.0)
            worst = max(worst, float(err.max()))
    acceptance(5, "analytic Jacobian matches finite differences", worst < 1e-6,
               f"max relative error {worst:.1e} over 200 states")


def test_criterion_06_migration_cancellation(acceptance):
    rng = np.random.default_rng(6)
    worst = 0.0
    for k in range(10_000):
        p = random_params(rng, M1 if k % 2 == 0 else M2)
        x = rng.uniform(0, 20, 4)
        expected = total_net_growth(x, p)
        worst = max(worst, abs(float(np.sum(rhs(x, p))) - expected) / (1 + abs(expected)))
    acceptance(6, "migration terms cancel in the summed right-hand side", worst < 1e-12,
               f"max scaled deviation {worst:.1e} over 10^4 draws")


def test_criterion_07_routh_hurwitz_oracle(acceptance):
    rng = np.random.default_rng(7)
    agree = checked = 0
    for _ in range(1000):
        a2, a1, a0 = rng.uniform(-10, 10, 3)
        top = max(r.real for r in np.roots([1, a2, a1, a0]))
        if abs(top) <= 1e-6:
            continue
        checked += 1
        agree += routh_hurwitz_cubic(a2, a1, a0).stable == (top < 0)
    anchors = [routh_hurwitz_cubic(*c).status for c in ((6, 11, 6), (1, 1, -1), (2, 1, 2))]
    acceptance(7, "Routh-Hurwitz agrees with cubic roots; anchors classified",
               agree == checked and anchors == ["STABLE", "UNSTABLE", "BOUNDARY"],
               f"{agree}/{checked} agree, anchors {anchors}")


def test_criterion_08_uw_cross_check(acceptance):
    p = FIXTURES["M2_U"].params
    g, f = uw_reduced_polynomials(p, "U")
    roots = solve_u(p)
    worst_rel, worst_res = 0.0, 0.0
    for eq in roots:
        s2 = eq.state.s2
        fv, gv = np.polyval(f, s2), np.polyval(g, s2)
        worst_rel = max(worst_rel, abs(fv - gv) / max(abs(fv), 1.0))
        worst_res = max(worst_res, eq.residual_norm)
    ok = (np.allclose(g, (10, 100, -560)) and np.allclose(f, (0.25, 4.5, 40, 160))
          and roots and worst_rel < 1e-6 and worst_res < 1e-8)
    acceptance(8, "U roots satisfy f = g and the full residual", ok,
               f"{len(roots)} roots at S2 = {[round(e.state.s2, 6) for e in roots]}, "
               f"|f-g| rel {worst_rel:.1e}, residual {worst_res:.1e}")


def test_criterion_09_hopf_scanner(acceptance):
    s0 = 0.3712

    def jac(s):
        # deflated cubic l^3 + 2 l^2 + l + (2 + s - s0): a2 a1 = a0 at s = s0
        J = np.zeros((4, 4))
        J[:3, :3] = [[-2.0, -1.0, -(2.0 + s - s0)], [1, 0, 0], [0, 1, 0]]
        J[3, 3] = -5.0
        return J

    points = scan_residual(jac, 0.0, 1.0, 11)
    found = (len(points) == 1 and abs(points[0].value - s0) < 1e-6
             and abs(points[0].complex_pair_real_part) < 1e-6)
    on_x1 = hopf_scan(FIXTURES["M1_X1"].params, "r2", 0.1, 5.0, 50, "X1")
    detail = (f"constructed crossing at {points[0].value:.9f}, Re {points[0].complex_pair_real_part:.1e}"
              if points else "constructed crossing missed")
    acceptance(9, "Hopf scanner localizes a known crossing and finds none on X1",
               found and on_x1 == [], f"{detail}; X1 branch points {len(on_x1)}")


def test_criterion_10_positivity_and_determinism(acceptance):
    lowest = min(
        float(integrate(f.initial, f.params).states.min()) for f in FIXTURES.values()
    )
    p = FIXTURES["M1_X1"].params
    axes = [GridAxis("S1", 0, 5, 21), GridAxis("I1", 0, 5, 21)]
    start = time.perf_counter()
    grid = basin_grid(p, axes, {"S2": 3, "I2": 3})
    elapsed = time.perf_counter() - start
    labels = {lab for row in grid.labels for lab in row}
    basin_same = (emit_basin_table(grid)
                  == emit_basin_table(basin_grid(p, axes, {"S2": 3, "I2": 3}))
                  == emit_basin_table(basin_grid(p, axes, {"S2": 3, "I2": 3}, workers=4)))
    values = [8.0, 14.0, 20.0]
    sweeps = [emit_sweep_table(parameter_sweep(p, "m21", values, workers=w)) for w in (None, None, 3)]
    ok = (lowest >= -1e-9 and elapsed < 60 and labels <= {"X1", "X2", "TIMED_OUT"}
          and basin_same and len(set(sweeps)) == 1)
    bistable = "X1" in labels and "X2" in labels
    acceptance(10, "positivity, deterministic grid and sweep, 21x21 basin under 60 s", ok,
               f"min component {lowest:.1e}, grid {elapsed:.1f} s, counts {grid.counts()}, "
               f"both X1 and X2 present: {bistable}")


def test_origin_is_catalogued_everywhere():
    # supporting check for criterion 1: the origin entry is always present
    for f in FIXTURES.values():
        eqs = enumerate_equilibria(f.params)
        assert eqs[0].kind is EquilibriumKind.ORIGIN
        assert classify(origin(f.params), f.params).cls is StabilityClass.UNSTABLE
