"""Local stability of equilibria.

Every verdict comes from the full 4x4 spectrum. Closed-form eigenvalues,
Routh-Hurwitz terms and the Hopf residual are attached alongside as named
checks so they can be cross-validated against that spectrum.

Cubic coefficients are never taken from hand-expanded formulas. At a
boundary equilibrium one row of the Jacobian has a single nonzero entry on
the diagonal; that entry is an eigenvalue, and the other three are the
roots of the characteristic polynomial of the complementary 3x3 block.
"""

from __future__ import annotations

import cmath
import dataclasses
import enum
import itertools
import math

import numpy as np

from .equilibria import (
    Equilibrium,
    EquilibriumKind,
    coexistence_filter,
    x2_feasibility,
)
from .errors import EigenNoConvergenceError, PreconditionError, StructureViolationError
from .model import Parameters, jacobian

MARGINAL_TOL = 1e-8
STRUCTURE_TOL = 1e-12

# row whose only nonzero Jacobian entry is the diagonal one, per boundary kind
_EXPLICIT_ROW = {
    EquilibriumKind.X1: 1,
    EquilibriumKind.X2: 1,
    EquilibriumKind.W: 1,
    EquilibriumKind.U: 3,
}


class StabilityClass(str, enum.Enum):
    STABLE = "STABLE"
    UNSTABLE = "UNSTABLE"
    MARGINAL = "MARGINAL"


@dataclasses.dataclass(frozen=True)
class Spectrum:
    eigenvalues: tuple
    max_real: float
    margin: float


@dataclasses.dataclass(frozen=True)
class StabilityVerdict:
    cls: StabilityClass
    spectrum: Spectrum
    checks: dict


def eigenvalues_4x4(matrix) -> Spectrum:
    """Eigenvalues sorted by descending real part, then descending imaginary part."""
    a = np.asarray(matrix, dtype=float)
    if a.shape != (4, 4) or not np.all(np.isfinite(a)):
        raise PreconditionError("expected a finite 4x4 matrix")
    try:
        ev = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise EigenNoConvergenceError(str(exc)) from None
    ev = sorted((complex(v) for v in ev), key=lambda z: (-z.real, -z.imag))
    max_real = ev[0].real
    return Spectrum(tuple(ev), max_real, abs(max_real))


def classify_spectrum(spectrum: Spectrum, tol: float = MARGINAL_TOL) -> StabilityClass:
    if spectrum.max_real < -tol:
        return StabilityClass.STABLE
    if spectrum.max_real > tol:
        return StabilityClass.UNSTABLE
    return StabilityClass.MARGINAL


def match_eigenvalues(expected, actual) -> float:
    """Smallest max-abs error over all pairings of two 4-element spectra."""
    expected = [complex(v) for v in expected]
    actual = [complex(v) for v in actual]
    best = math.inf
    for perm in itertools.permutations(actual):
        err = max(abs(e - a) / max(1.0, abs(e)) for e, a in zip(expected, perm))
        best = min(best, err)
    return best


# -- closed-form eigenvalues --------------------------------------------------

def origin_eigenvalues_m1(params: Parameters) -> tuple:
    p = params
    if not p.is_m1:
        raise PreconditionError("M1 scenario required")
    return (
        p.r2,
        -p.delta2 - p.mu2,
        (p.r1 * p.A - p.m21) / p.A,
        -(p.delta1 * p.B + p.n21 + p.mu1 * p.B) / p.B,
    )


def origin_eigenvalues_m2(params: Parameters) -> tuple:
    p = params
    if p.is_m1:
        raise PreconditionError("M2 scenario required")
    a = p.r1 * p.A - p.m21
    b = p.r2 * p.A - p.m12
    k = a + b
    # k^2 + 4A(r1 m12 + r2 m21 - r1 r2 A) rewritten as a sum of squares, which
    # avoids cancellation next to a double root
    radicand = (a - b) ** 2 + 4 * p.m12 * p.m21
    root = math.sqrt(radicand)
    big = (k + math.copysign(root, k)) / (2 * p.A)
    det = (a * b - p.m12 * p.m21) / p.A**2
    small = det / big if big != 0 else 0.0
    hi, lo = (big, small) if big >= small else (small, big)
    return (-p.delta1 - p.mu1, -p.delta2 - p.mu2, hi, lo)


@dataclasses.dataclass(frozen=True)
class X1Checks:
    lambda1: float
    lambda2: float
    lambda3: complex
    lambda4: complex
    stab_condition_margin: float

    @property
    def lambda34_re(self) -> float:
        return self.lambda3.real

    @property
    def lambda34_im(self) -> float:
        return abs(self.lambda3.imag)

    def eigenvalues(self) -> tuple:
        return (complex(self.lambda1), complex(self.lambda2), self.lambda3, self.lambda4)


def x1_explicit_checks(params: Parameters) -> X1Checks:
    """Closed-form spectrum at X1 and the margin of its stability condition.

    The margin is positive exactly when the susceptible eigenvalue at X1 is
    negative: ``margin = -lambda2 * (A g2 mu2 + (d2+mu2)(mu2+r2))``.
    """
    p = params
    if not p.is_m1:
        raise PreconditionError("M1 scenario required")
    k = p.delta2 + p.mu2
    s2 = k / p.gamma2
    i2 = p.r2 * k / (p.gamma2 * p.mu2)
    lam1 = -(p.delta1 + p.mu1) - p.n21 / (p.B + s2 + i2)
    lhs = (p.mu2 * p.r1 * p.A * p.gamma2 + p.mu2 * p.r1 * p.delta2
           + p.r1 * p.mu2**2 + p.r1 * p.r2 * k)
    margin = p.mu2 * p.m21 * p.gamma2 - lhs
    lam2 = -margin / (p.A * p.gamma2 * p.mu2 + k * (p.mu2 + p.r2))
    disc = p.r2**2 * p.delta2**2 - 4 * p.mu2**2 * p.r2 * k
    root = cmath.sqrt(disc) if disc < 0 else math.sqrt(disc)
    lam3 = complex((-p.r2 * p.delta2 + root) / (2 * p.mu2))
    lam4 = complex((-p.r2 * p.delta2 - root) / (2 * p.mu2))
    return X1Checks(lam1, lam2, lam3, lam4, margin)


# -- deflation and Routh-Hurwitz ----------------------------------------------

@dataclasses.dataclass(frozen=True)
class CubicFactor:
    lambda_explicit: float
    cubic: tuple  # (1, a2, a1, a0)


def _row_is_explicit(J, k, tol=STRUCTURE_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(J))))
    return float(np.max(np.abs(np.delete(J[k], k)))) <= tol * scale


def find_explicit_row(jac, tol: float = STRUCTURE_TOL):
    """First row whose off-diagonal entries all vanish, or ``None``."""
    J = np.asarray(jac, dtype=float)
    for k in range(4):
        if _row_is_explicit(J, k, tol):
            return k
    return None


def charpoly_3x3(M) -> tuple:
    M = np.asarray(M, dtype=float)
    a2 = -np.trace(M)
    a1 = sum(M[i, i] * M[j, j] - M[i, j] * M[j, i] for i, j in ((0, 1), (0, 2), (1, 2)))
    a0 = -np.linalg.det(M)
    return (1.0, float(a2), float(a1), float(a0))


def charpoly_4x4(J) -> tuple:
    """Monic ``(1, c3, c2, c1, c0)`` from sums of principal minors."""
    J = np.asarray(J, dtype=float)
    coeffs = [1.0]
    for order in range(1, 5):
        total = sum(np.linalg.det(J[np.ix_(idx, idx)])
                    for idx in itertools.combinations(range(4), order))
        coeffs.append(float((-1) ** order * total))
    return tuple(coeffs)


def extract_cubic_factor(jac, explicit_row: int) -> CubicFactor:
    J = np.asarray(jac, dtype=float)
    k = int(explicit_row)
    if not _row_is_explicit(J, k):
        off = np.max(np.abs(np.delete(J[k], k)))
        raise StructureViolationError(f"row {k} has off-diagonal entries up to {off:.3e}")
    keep = [i for i in range(4) if i != k]
    return CubicFactor(float(J[k, k]), charpoly_3x3(J[np.ix_(keep, keep)]))


@dataclasses.dataclass(frozen=True)
class RouthHurwitz:
    stable: bool
    terms: tuple  # (a0, a2, a2*a1 - a0)

    @property
    def status(self) -> str:
        """``STABLE``, ``BOUNDARY`` (a term is exactly zero, none negative) or ``UNSTABLE``."""
        if self.stable:
            return "STABLE"
        if all(t >= 0 for t in self.terms):
            return "BOUNDARY"
        return "UNSTABLE"


def routh_hurwitz_cubic(a2: float, a1: float, a0: float) -> RouthHurwitz:
    """All roots of ``l^3 + a2 l^2 + a1 l + a0`` in the open left half-plane?"""
    terms = (a0, a2, a2 * a1 - a0)
    return RouthHurwitz(all(t > 0 for t in terms), terms)


def hurwitz_quartic(c3: float, c2: float, c1: float, c0: float) -> RouthHurwitz:
    """Routh-Hurwitz for ``l^4 + c3 l^3 + c2 l^2 + c1 l + c0``.

    Terms are ``(c3, c1, c0, c3 c2 - c1, c3 c2 c1 - c1^2 - c3^2 c0)``; the
    last one is the determinant that vanishes at a Hopf point.
    """
    terms = (c3, c1, c0, c3 * c2 - c1, c3 * c2 * c1 - c1**2 - c3**2 * c0)
    return RouthHurwitz(all(t > 0 for t in terms), terms)


def hopf_residual_from_jacobian(J, explicit_row=None) -> float:
    """``a2 a1 - a0`` of the deflated cubic, or the quartic Hurwitz determinant."""
    if explicit_row is None:
        explicit_row = find_explicit_row(J)
    if explicit_row is not None:
        _, a2, a1, a0 = extract_cubic_factor(J, explicit_row).cubic
        return a2 * a1 - a0
    _, c3, c2, c1, c0 = charpoly_4x4(J)
    return c3 * c2 * c1 - c1**2 - c3**2 * c0


def explicit_row_for(eq: Equilibrium, J) -> int | None:
    row = _EXPLICIT_ROW.get(eq.kind)
    if row is not None and _row_is_explicit(J, row):
        return row
    return find_explicit_row(J)


def hopf_residual(eq: Equilibrium, params: Parameters) -> float:
    J = jacobian(eq.state, params)
    return hopf_residual_from_jacobian(J, explicit_row_for(eq, J))


# -- classification -----------------------------------------------------------

def classify(eq: Equilibrium, params: Parameters) -> StabilityVerdict:
    J = jacobian(eq.state, params)
    spectrum = eigenvalues_4x4(J)
    checks = {}
    kind = eq.kind

    if kind is EquilibriumKind.ORIGIN:
        closed = origin_eigenvalues_m1(params) if params.is_m1 else origin_eigenvalues_m2(params)
        checks["origin_eigenvalues"] = list(closed)
        checks["closed_form_agrees"] = match_eigenvalues(closed, spectrum.eigenvalues) < 1e-9
    if kind is EquilibriumKind.X1:
        x1 = x1_explicit_checks(params)
        checks["stab_X1_margin"] = x1.stab_condition_margin
        checks["lambda2_negative"] = x1.lambda2 < 0
        checks["closed_form_agrees"] = match_eigenvalues(x1.eigenvalues(), spectrum.eigenvalues) < 1e-9
    if kind is EquilibriumKind.X2:
        feas = x2_feasibility(params)
        checks["x2_feasibility_margins"] = list(feas.margins)
        checks["x2_feasible"] = feas.feasible

    row = explicit_row_for(eq, J)
    if row is not None and kind is not EquilibriumKind.ORIGIN:
        factor = extract_cubic_factor(J, row)
        _, a2, a1, a0 = factor.cubic
        rh = routh_hurwitz_cubic(a2, a1, a0)
        checks["explicit_eigenvalue"] = factor.lambda_explicit
        checks["explicit_eigenvalue_negative"] = factor.lambda_explicit < 0
        checks["cubic"] = [a2, a1, a0]
        checks["routh_hurwitz_terms"] = list(rh.terms)
        checks["routh_hurwitz_stable"] = rh.stable
        checks["hopf_residual"] = a2 * a1 - a0
    elif row is None:
        _, c3, c2, c1, c0 = charpoly_4x4(J)
        rh = hurwitz_quartic(c3, c2, c1, c0)
        checks["quartic"] = [c3, c2, c1, c0]
        checks["routh_hurwitz_terms"] = list(rh.terms)
        checks["routh_hurwitz_stable"] = rh.stable
        checks["hopf_residual"] = rh.terms[-1]
        if kind is EquilibriumKind.COEX_M1:
            coex = coexistence_filter(eq.state, params)
            checks["coexistence_branch"] = coex.branch.value
            checks["coexistence_z_window_ok"] = coex.z_window_ok

    return StabilityVerdict(classify_spectrum(spectrum), spectrum, checks)
