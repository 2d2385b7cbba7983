import math
import warnings

import numpy as np
import pytest
from conftest import STATE, any_params, m2_params
from hypothesis import given, settings
from scipy.differentiate import jacobian as fd_jacobian

from patchsis.errors import ParameterError
from patchsis.fixtures import FIXTURES, get_fixture
from patchsis.model import (
    IgnoredParameterWarning,
    Parameters,
    Scenario,
    jacobian,
    rhs,
    rhs_tuple,
    swap_patches,
    swap_state,
    total_net_growth,
    validate_params,
)

M1_X1 = FIXTURES["M1_X1"].params


def fd(x, p):
    return fd_jacobian(lambda y: np.array(rhs_tuple(*y, p)), np.asarray(x, float)).df


def test_rhs_hand_value():
    # inflows at (1,1,1,1): m21*S1/(A+S2+I2) = 20/3, n21*I1/(B+S2+I2) = 1/6
    expected = [-14 / 3, -7 / 6, 26 / 3, -11 / 6]
    np.testing.assert_allclose(rhs([1, 1, 1, 1], M1_X1), expected, rtol=0, atol=1e-14)


def test_rhs_m2_hand_value():
    p = FIXTURES["M2_COEX"].params
    # to2 = 1*1/12, to1 = 3*1/12
    s1 = 1 - 1 + 2 - 1 / 12 + 3 / 12
    i1 = 1 - 4
    s2 = 1 - 1 + 0.5 + 1 / 12 - 3 / 12
    i2 = 1 - 1.5
    np.testing.assert_allclose(rhs([1, 1, 1, 1], p), [s1, i1, s2, i2], atol=1e-15)


def test_jacobian_entries_at_x1():
    J = jacobian([0, 0, 3, 3], M1_X1)
    assert J[0, 0] == pytest.approx(-6 / 7, abs=1e-15)
    assert J[2, 3] == pytest.approx(-1.0, abs=1e-15)
    assert np.all(J[1, [0, 2, 3]] == 0)


@pytest.mark.parametrize("name", list(FIXTURES))
def test_jacobian_matches_finite_differences_on_fixtures(name):
    p = FIXTURES[name].params
    x = np.array([1.3, 0.7, 2.1, 0.4])
    np.testing.assert_allclose(jacobian(x, p), fd(x, p), rtol=1e-7, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(any_params(), STATE)
def test_jacobian_matches_finite_differences(p, x):
    J, ref = jacobian(x, p), fd(x, p)
    scale = np.maximum(1.0, np.abs(ref))
    assert np.max(np.abs(J - ref) / scale) < 1e-6


@settings(max_examples=200, deadline=None)
@given(any_params(), STATE)
def test_migration_terms_cancel(p, x):
    total = float(np.sum(rhs(x, p)))
    expected = total_net_growth(x, p)
    assert abs(total - expected) < 1e-12 * (1 + abs(expected) + np.sum(np.abs(rhs(x, p))))


@settings(max_examples=100, deadline=None)
@given(m2_params(), STATE)
def test_m2_patch_swap_symmetry(p, x):
    q = swap_patches(p)
    np.testing.assert_allclose(rhs(swap_state(x), q), swap_state(rhs(x, p)), atol=1e-12)


def test_invariant_faces_are_flow_invariant():
    # with I1 = I2 = 0 the infected equations are stationary
    for f in FIXTURES.values():
        d = rhs([2.0, 0.0, 3.0, 0.0], f.params)
        assert d[1] == 0 and d[3] == 0


def test_validate_rejects_zero_saturation():
    with pytest.raises(ParameterError, match="A must be > 0") as err:
        validate_params(M1_X1.replace(A=0.0))
    assert err.value.field == "A"


@pytest.mark.parametrize("field", ["r1", "gamma2", "n21", "B"])
def test_validate_rejects_negative(field):
    with pytest.raises(ParameterError) as err:
        validate_params(M1_X1.replace(**{field: -1.0}))
    assert err.value.field == field


def test_validate_rejects_non_finite():
    with pytest.raises(ParameterError, match="finite"):
        validate_params(M1_X1.replace(mu1=math.nan))


def test_scenario_migration_constraints():
    with pytest.raises(ParameterError, match="M1 forbids m12"):
        validate_params(M1_X1.replace(m12=1.0))
    m2 = FIXTURES["M2_U"].params
    with pytest.raises(ParameterError, match="M2 forbids n12"):
        validate_params(m2.replace(n12=0.5))


def test_m2_warns_that_b_is_ignored():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        validate_params(FIXTURES["M2_U"].params)
    assert any(issubclass(w.category, IgnoredParameterWarning) for w in caught)


def test_scenario_parse_accepts_short_names():
    assert Scenario.parse("m2") is Scenario.M2_NO_INFECTED_MIGRATION
    assert Scenario.parse("M1_UNIDIRECTIONAL").short == "M1"
    with pytest.raises(ParameterError):
        Scenario.parse("M3")


def test_digest_depends_on_values_only():
    same = Parameters(**M1_X1.as_dict(), scenario="M1")
    assert same.digest() == M1_X1.digest()
    assert M1_X1.replace(m21=19.0).digest() != M1_X1.digest()


def test_fixtures_validate():
    for f in FIXTURES.values():
        validate_params(f.params)
    with pytest.raises(KeyError, match="unknown fixture"):
        get_fixture("M3_X")
