"""Built-in parameter sets for the six stable-scenario regressions.

Values are transcribed from the published parameter lists. Fields a list
does not mention are zero, except ``B`` under M2 which the model ignores
and is set to 1 so that validation passes.
"""

from __future__ import annotations

import dataclasses

from .model import Parameters, Scenario


@dataclasses.dataclass(frozen=True)
class Fixture:
    name: str
    params: Parameters
    expected_kind: str
    note: str
    initial: tuple = (1.0, 1.0, 1.0, 1.0)


def _m1(**kw) -> Parameters:
    base = dict(m12=0.0, n12=0.0, scenario=Scenario.M1_UNIDIRECTIONAL)
    base.update(kw)
    return Parameters(**base)


def _m2(**kw) -> Parameters:
    base = dict(n12=0.0, n21=0.0, B=1.0, scenario=Scenario.M2_NO_INFECTED_MIGRATION)
    base.update(kw)
    return Parameters(**base)


FIXTURES = {
    f.name: f
    for f in (
        Fixture(
            "M1_X1",
            _m1(r1=2, r2=1, gamma1=0.5, gamma2=1, delta1=0.5, delta2=2,
                mu1=1, mu2=1, m21=20, n21=0.5, A=1, B=1),
            "X1",
            "Transcribed as printed.",
        ),
        Fixture(
            "M1_X2",
            _m1(r1=1, r2=1, gamma1=1, gamma2=0.5, delta1=1, delta2=1,
                mu1=1, mu2=3, m21=30, n21=1, A=1, B=1),
            "X2",
            "Garbled token 'delta1=1delta2=mu1=1' read as delta1=1, delta2=1, mu1=1. "
            "X2 = (55, 0, 8, 21) is an exact equilibrium and satisfies both "
            "feasibility inequalities (margins 10.5, 27.5), but its explicit "
            "eigenvalue gamma1*S1 - delta1 - mu1 - n21/(B+S2+I2) = 52.9667 > 0, so "
            "X2 is unstable under this reading; trajectories from (1,1,1,1) "
            "approach X1 = (0, 0, 8, 8/3) instead.",
        ),
        Fixture(
            "M1_COEX",
            _m1(r1=1, r2=1, gamma1=0.5, gamma2=1, delta1=1, delta2=2,
                mu1=1, mu2=2, m21=1, n21=0.5, A=1, B=3),
            "COEX_M1",
            "Transcribed as printed.",
        ),
        Fixture(
            "M2_U",
            _m2(r1=1, r2=0.5, gamma1=0.5, gamma2=1, delta1=1, delta2=0.2,
                mu1=1, mu2=10, m21=10, m12=17, A=10),
            "U",
            "Transcribed as printed; B unused under M2.",
        ),
        Fixture(
            "M2_W",
            _m2(r1=0.2, r2=1, gamma1=1, gamma2=2, delta1=1.8, delta2=0.3,
                mu1=1, mu2=6, m21=8.8, m12=4, A=10),
            "W",
            "Transcribed as printed; B unused under M2. Regression start "
            "(1, 0, 1, 1) keeps I1 on its invariant zero plane.",
            initial=(1.0, 0.0, 1.0, 1.0),
        ),
        Fixture(
            "M2_COEX",
            _m2(r1=1, r2=1, gamma1=1, gamma2=1, delta1=2, delta2=0.5,
                mu1=2, mu2=1, m12=3, m21=1, A=10),
            "COEX_M2",
            "Garbled token 'mu1=2mu2=2' read as mu1=2, mu2=1 (first reading); it "
            "passes the stable-coexistence check, so the fallback mu2=2 is not "
            "needed. B unused under M2.",
        ),
    )
}


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(
            f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}"
        ) from None
