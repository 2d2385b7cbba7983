"""Equilibria, stability and dynamics of two-patch SIS models with saturating migration."""

from .equilibria import (
    Equilibrium,
    EquilibriumKind,
    enumerate_equilibria,
    newton_refine,
    solve_u,
    solve_w,
    x1_closed_form,
    x2_closed_form,
)
from .errors import (
    BranchLostError,
    ComputationError,
    ConfigError,
    NonConvergedError,
    ParameterError,
    PatchSISError,
    PreconditionError,
)
from .fixtures import FIXTURES, get_fixture
from .integrator import IntegrationSettings, Trajectory, Verdict, integrate
from .model import Parameters, Scenario, State, jacobian, rhs, validate_params
from .stability import StabilityClass, classify

__all__ = [
    "FIXTURES",
    "BranchLostError",
    "ComputationError",
    "ConfigError",
    "Equilibrium",
    "EquilibriumKind",
    "IntegrationSettings",
    "NonConvergedError",
    "ParameterError",
    "Parameters",
    "PatchSISError",
    "PreconditionError",
    "Scenario",
    "StabilityClass",
    "State",
    "Trajectory",
    "Verdict",
    "classify",
    "enumerate_equilibria",
    "get_fixture",
    "integrate",
    "jacobian",
    "newton_refine",
    "rhs",
    "solve_u",
    "solve_w",
    "validate_params",
    "x1_closed_form",
    "x2_closed_form",
]
