import numpy as np
import pytest
from scipy.integrate import solve_ivp

from patchsis.equilibria import enumerate_equilibria
from patchsis.errors import PreconditionError
from patchsis.fixtures import FIXTURES
from patchsis.integrator import (
    IntegrationSettings,
    Verdict,
    detect_convergence,
    integrate,
)
from patchsis.model import rhs

# M1_X2's X2 is unstable under the adopted reading; its runs end on X1
EXPECTED_LIMIT = {
    "M1_X1": "X1",
    "M1_X2": "X1",
    "M1_COEX": "COEX_M1",
    "M2_U": "U",
    "M2_W": "W",
    "M2_COEX": "COEX_M2",
}


@pytest.mark.parametrize("name", list(FIXTURES))
def test_fixture_runs_converge(name):
    f = FIXTURES[name]
    catalog = enumerate_equilibria(f.params)
    traj = integrate(f.initial, f.params, catalog=catalog)
    assert traj.verdict is Verdict.CONVERGED
    assert traj.equilibrium_id == EXPECTED_LIMIT[name]
    assert traj.final_residual < 1e-6
    assert traj.times[-1] <= 1e4
    assert np.all(np.diff(traj.times) > 0)
    assert traj.states.min() >= -1e-9
    target = next(e for e in catalog if e.id == EXPECTED_LIMIT[name])
    assert np.max(np.abs(traj.final_state - target.array)) < 1e-5


def test_agrees_with_reference_solver():
    p = FIXTURES["M1_COEX"].params
    settings = IntegrationSettings(t_max=5.0, rel_tol=1e-10, abs_tol=1e-12)
    traj = integrate([1, 1, 1, 1], p, settings)
    assert traj.verdict is Verdict.TIMED_OUT
    assert traj.times[-1] == pytest.approx(5.0)
    ref = solve_ivp(lambda t, y: rhs(y, p), (0, 5), [1, 1, 1, 1], method="DOP853",
                    rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(traj.final_state, ref.y[:, -1], rtol=1e-7, atol=1e-9)


def test_starting_at_equilibrium_settles_immediately():
    p = FIXTURES["M1_X1"].params
    traj = integrate([0, 0, 3, 3], p, catalog=enumerate_equilibria(p))
    assert traj.verdict_label == "CONVERGED(X1)"
    assert len(traj.times) == 51  # initial point plus the 50 quiet steps


def test_unbounded_growth_is_reported():
    # with I1 = 0 the susceptibles of patch 1 grow without bound here
    traj = integrate([2.5, 0, 3, 3], FIXTURES["M1_X1"].params)
    assert traj.verdict is Verdict.BLEW_UP
    assert "exceeded" in traj.message
    assert traj.verdict_label == "BLEW_UP"


def test_unmatched_steady_state_keeps_no_id():
    p = FIXTURES["M1_X1"].params
    traj = integrate([0, 0, 3, 3], p, catalog=[])
    assert traj.verdict is Verdict.CONVERGED and traj.equilibrium_id is None
    assert traj.verdict_label == "CONVERGED"


def test_invalid_inputs():
    p = FIXTURES["M1_X1"].params
    with pytest.raises(PreconditionError):
        integrate([1, 1, 1], p)
    with pytest.raises(PreconditionError):
        integrate([1, -1, 1, 1], p)
    with pytest.raises(PreconditionError):
        integrate([1, np.inf, 1, 1], p)
    for bad in (dict(rel_tol=0), dict(abs_tol=-1), dict(t_max=0), dict(initial_step=0)):
        with pytest.raises(PreconditionError):
            IntegrationSettings(**bad)


def test_max_steps_limits_the_run():
    traj = integrate([1, 1, 1, 1], FIXTURES["M1_X1"].params, IntegrationSettings(max_steps=10))
    assert traj.verdict is Verdict.TIMED_OUT
    assert len(traj.times) == 11


def test_detect_convergence():
    catalog = enumerate_equilibria(FIXTURES["M1_X1"].params)
    assert detect_convergence([0, 0, 3, 3 + 5e-6], catalog) == "X1"
    assert detect_convergence([0, 0, 3, 3 + 2e-5], catalog) is None
    assert detect_convergence([0, 0, 0, 0], catalog) == "ORIGIN"


def test_deterministic():
    p = FIXTURES["M2_W"].params
    a = integrate([1, 0, 1, 1], p)
    b = integrate([1, 0, 1, 1], p)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)
