"""Two-patch SIS models with demographics and saturating migration.

Component order is fixed everywhere as ``(S1, I1, S2, I2)``.

Two scenarios are supported:

``M1_UNIDIRECTIONAL``
    Susceptibles and infected migrate only from patch 1 into patch 2.
    Inflow saturates with the arrival patch population, through ``A`` for
    susceptibles and ``B`` for infected.

``M2_NO_INFECTED_MIGRATION``
    Susceptibles migrate both ways, infected stay put. Both susceptible
    flows saturate through ``A``; ``B`` is accepted but unused.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import warnings
from typing import NamedTuple

import numpy as np

from .errors import ParameterError

PARAM_NAMES = (
    "r1", "r2", "gamma1", "gamma2", "delta1", "delta2", "mu1", "mu2",
    "m12", "m21", "n12", "n21", "A", "B",
)
COMPONENTS = ("S1", "I1", "S2", "I2")


class IgnoredParameterWarning(UserWarning):
    """A parameter was supplied that the selected scenario does not use."""


class Scenario(str, enum.Enum):
    M1_UNIDIRECTIONAL = "M1_UNIDIRECTIONAL"
    M2_NO_INFECTED_MIGRATION = "M2_NO_INFECTED_MIGRATION"

    @property
    def short(self) -> str:
        return self.value[:2]

    @classmethod
    def parse(cls, text) -> Scenario:
        if isinstance(text, Scenario):
            return text
        key = str(text).strip().upper()
        for member in cls:
            if key in (member.value, member.short):
                return member
        raise ParameterError("scenario", f"unknown scenario {text!r} (expected M1 or M2)")


class State(NamedTuple):
    s1: float
    i1: float
    s2: float
    i2: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclasses.dataclass(frozen=True)
class Parameters:
    """The fourteen model constants plus the scenario tag."""

    r1: float
    r2: float
    gamma1: float
    gamma2: float
    delta1: float
    delta2: float
    mu1: float
    mu2: float
    m12: float
    m21: float
    n12: float
    n21: float
    A: float
    B: float
    scenario: Scenario = Scenario.M1_UNIDIRECTIONAL

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario.parse(self.scenario))
        for name in PARAM_NAMES:
            object.__setattr__(self, name, float(getattr(self, name)))

    def replace(self, **changes) -> Parameters:
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def digest(self) -> str:
        """Short stable identifier of the parameter values and scenario."""
        payload = json.dumps(
            {"scenario": self.scenario.value, **self.as_dict()}, sort_keys=True
        )
        return hashlib.sha1(payload.encode()).hexdigest()[:12]

    @property
    def is_m1(self) -> bool:
        return self.scenario is Scenario.M1_UNIDIRECTIONAL


def validate_params(params: Parameters) -> Parameters:
    """Check every parameter invariant; return ``params`` unchanged.

    Raises
    ------
    ParameterError
        Naming the first offending field.
    """
    for name in PARAM_NAMES:
        value = getattr(params, name)
        if not math.isfinite(value):
            raise ParameterError(name, f"{name} must be finite")
        if value < 0:
            raise ParameterError(name, f"{name} must be >= 0")
    for name in ("A", "B"):
        if getattr(params, name) <= 0:
            raise ParameterError(name, f"{name} must be > 0")
    if params.is_m1:
        for name in ("m12", "n12"):
            if getattr(params, name) != 0:
                raise ParameterError(name, f"M1 forbids {name} ≠ 0")
    else:
        for name in ("n12", "n21"):
            if getattr(params, name) != 0:
                raise ParameterError(name, f"M2 forbids {name} ≠ 0")
        warnings.warn(
            "B is not used by the M2 scenario and will be ignored",
            IgnoredParameterWarning,
            stacklevel=2,
        )
    return params


def rhs_tuple(s1, i1, s2, i2, p: Parameters):
    """Scalar right-hand side; the hot path for integration."""
    if p.scenario is Scenario.M1_UNIDIRECTIONAL:
        sus = p.m21 * s1 / (p.A + s2 + i2)
        inf = p.n21 * i1 / (p.B + s2 + i2)
        return (
            p.r1 * s1 - p.gamma1 * s1 * i1 + p.delta1 * i1 - sus,
            p.gamma1 * s1 * i1 - (p.delta1 + p.mu1) * i1 - inf,
            p.r2 * s2 - p.gamma2 * s2 * i2 + p.delta2 * i2 + sus,
            p.gamma2 * s2 * i2 - (p.delta2 + p.mu2) * i2 + inf,
        )
    to2 = p.m21 * s1 / (p.A + s2 + i2)
    to1 = p.m12 * s2 / (p.A + s1 + i1)
    return (
        p.r1 * s1 - p.gamma1 * s1 * i1 + p.delta1 * i1 - to2 + to1,
        p.gamma1 * s1 * i1 - (p.delta1 + p.mu1) * i1,
        p.r2 * s2 - p.gamma2 * s2 * i2 + p.delta2 * i2 + to2 - to1,
        p.gamma2 * s2 * i2 - (p.delta2 + p.mu2) * i2,
    )


def rhs(state, params: Parameters) -> np.ndarray:
    """Time derivative ``(dS1, dI1, dS2, dI2)`` at ``state``."""
    s1, i1, s2, i2 = (float(v) for v in state)
    return np.array(rhs_tuple(s1, i1, s2, i2, params))


def jacobian(state, params: Parameters) -> np.ndarray:
    """Analytic 4x4 Jacobian of :func:`rhs`; ``J[i, j] = d f_i / d x_j``."""
    s1, i1, s2, i2 = (float(v) for v in state)
    p = params
    J = np.zeros((4, 4))
    if p.is_m1:
        ds = p.A + s2 + i2
        di = p.B + s2 + i2
        eta1, eta2 = p.m21 / ds, p.m21 / ds**2
        th1, th2 = p.n21 / di, p.n21 / di**2
        J[0] = [p.r1 - p.gamma1 * i1 - eta1, -p.gamma1 * s1 + p.delta1,
                eta2 * s1, eta2 * s1]
        J[1] = [p.gamma1 * i1, p.gamma1 * s1 - p.delta1 - p.mu1 - th1,
                th2 * i1, th2 * i1]
        J[2] = [eta1, 0.0, p.r2 - p.gamma2 * i2 - eta2 * s1,
                -p.gamma2 * s2 + p.delta2 - eta2 * s1]
        J[3] = [0.0, th1, p.gamma2 * i2 - th2 * i1,
                p.gamma2 * s2 - p.delta2 - p.mu2 - th2 * i1]
        return J
    d2 = p.A + s2 + i2
    d1 = p.A + s1 + i1
    al1, al2 = p.m21 / d2, p.m21 / d2**2
    be1, be2 = p.m12 / d1, p.m12 / d1**2
    J[0] = [p.r1 - p.gamma1 * i1 - al1 - be2 * s2, -p.gamma1 * s1 + p.delta1 - be2 * s2,
            al2 * s1 + be1, al2 * s1]
    J[1] = [p.gamma1 * i1, p.gamma1 * s1 - p.delta1 - p.mu1, 0.0, 0.0]
    J[2] = [al1 + be2 * s2, be2 * s2, p.r2 - p.gamma2 * i2 - al2 * s1 - be1,
            -p.gamma2 * s2 + p.delta2 - al2 * s1]
    J[3] = [0.0, 0.0, p.gamma2 * i2, p.gamma2 * s2 - p.delta2 - p.mu2]
    return J


def total_net_growth(state, params: Parameters) -> float:
    """``r1 S1 + r2 S2 - mu1 I1 - mu2 I2``; migration terms cancel in the total."""
    s1, i1, s2, i2 = (float(v) for v in state)
    p = params
    return p.r1 * s1 + p.r2 * s2 - p.mu1 * i1 - p.mu2 * i2


def swap_patches(params: Parameters) -> Parameters:
    """Relabel patch 1 as patch 2 and vice versa.

    Only meaningful for M2, which is symmetric under the swap; M1 has a
    direction and is returned unchanged.
    """
    if params.is_m1:
        return params
    p = params
    return p.replace(
        r1=p.r2, r2=p.r1, gamma1=p.gamma2, gamma2=p.gamma1,
        delta1=p.delta2, delta2=p.delta1, mu1=p.mu2, mu2=p.mu1,
        m12=p.m21, m21=p.m12, n12=p.n21, n21=p.n12,
    )


def swap_state(state) -> np.ndarray:
    s1, i1, s2, i2 = state
    return np.array([s2, i2, s1, i1], dtype=float)
