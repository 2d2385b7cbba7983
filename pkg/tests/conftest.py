import numpy as np
import pytest
from hypothesis import strategies as st

from patchsis.model import Parameters, Scenario

RATE = st.floats(0.1, 5.0)
MIGRATION = st.floats(0.0, 30.0)
SATURATION = st.floats(0.1, 10.0)
STATE = st.tuples(*[st.floats(0.0, 20.0)] * 4)


@st.composite
def m1_params(draw):
    return Parameters(
        r1=draw(RATE), r2=draw(RATE), gamma1=draw(RATE), gamma2=draw(RATE),
        delta1=draw(RATE), delta2=draw(RATE), mu1=draw(RATE), mu2=draw(RATE),
        m12=0.0, m21=draw(MIGRATION), n12=0.0, n21=draw(st.floats(0.0, 5.0)),
        A=draw(SATURATION), B=draw(SATURATION), scenario=Scenario.M1_UNIDIRECTIONAL,
    )


@st.composite
def m2_params(draw):
    return Parameters(
        r1=draw(RATE), r2=draw(RATE), gamma1=draw(RATE), gamma2=draw(RATE),
        delta1=draw(RATE), delta2=draw(RATE), mu1=draw(RATE), mu2=draw(RATE),
        m12=draw(MIGRATION), m21=draw(MIGRATION), n12=0.0, n21=0.0,
        A=draw(SATURATION), B=1.0, scenario=Scenario.M2_NO_INFECTED_MIGRATION,
    )


def any_params():
    return st.one_of(m1_params(), m2_params())


def random_params(rng: np.random.Generator, scenario: Scenario) -> Parameters:
    """Seeded draw for the fixed-count checks in the acceptance suite."""
    rate = lambda: float(rng.uniform(0.1, 5.0))
    m1 = scenario is Scenario.M1_UNIDIRECTIONAL
    return Parameters(
        r1=rate(), r2=rate(), gamma1=rate(), gamma2=rate(),
        delta1=rate(), delta2=rate(), mu1=rate(), mu2=rate(),
        m12=0.0 if m1 else float(rng.uniform(0, 30)), m21=float(rng.uniform(0, 30)),
        n12=0.0, n21=float(rng.uniform(0, 5)) if m1 else 0.0,
        A=float(rng.uniform(0.1, 10)), B=float(rng.uniform(0.1, 10)) if m1 else 1.0,
        scenario=scenario,
    )


# acceptance criteria record (number, description, passed, detail) here
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, text, ok, detail in sorted(ACCEPTANCE_RESULTS):
        mark = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {mark}: {text} ({detail})")


@pytest.fixture
def acceptance():
    def record(number, text, ok, detail=""):
        ACCEPTANCE_RESULTS.append((number, text, bool(ok), detail))
        print(f"criterion {number} {'PASS' if ok else 'FAIL'}: {text} ({detail})")
        assert ok, f"criterion {number} failed: {detail}"
    return record
