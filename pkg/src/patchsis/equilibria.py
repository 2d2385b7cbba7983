"""Equilibrium finding for both scenarios.

Boundary equilibria come from closed forms (X1, X2) or from a bracketed
1-D root-find along the curve on which three of the four equations hold
identically (U, W). Interior points have no closed form and are found by
multi-start damped Newton. Whatever the route, every returned point is
re-checked against the full four-dimensional right-hand side.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.stats import qmc

from .errors import NonConvergedError, PreconditionError, SingularJacobianError
from .model import Parameters, State, jacobian, rhs, rhs_tuple, swap_patches, swap_state

VALID_RESIDUAL = 1e-8
NEWTON_TOL = 1e-10
FEASIBLE_FLOOR = -1e-10
DEDUP_TOL = 1e-6
# Newton converges only linearly next to a double root, so multi-start hits
# there scatter by far more than DEDUP_TOL around the same equilibrium
CLUSTER_TOL = 1e-4
CROSS_CHECK_RTOL = 1e-6
N_PANELS = 1024


class EquilibriumKind(str, enum.Enum):
    ORIGIN = "ORIGIN"
    X1 = "X1"
    X2 = "X2"
    COEX_M1 = "COEX_M1"
    U = "U"
    W = "W"
    COEX_M2 = "COEX_M2"
    OTHER = "OTHER"


class Provenance(str, enum.Enum):
    CLOSED_FORM = "CLOSED_FORM"
    REDUCED_ROOT = "REDUCED_ROOT"
    NEWTON = "NEWTON"


@dataclasses.dataclass(frozen=True)
class Equilibrium:
    kind: EquilibriumKind
    state: State
    residual_norm: float
    provenance: Provenance
    params_digest: str
    id: str = ""
    flags: tuple = ()

    def __post_init__(self):
        if not self.id:
            object.__setattr__(self, "id", self.kind.value)

    @property
    def array(self) -> np.ndarray:
        return self.state.as_array()

    @property
    def feasible(self) -> bool:
        return min(self.state) >= FEASIBLE_FLOOR

    @property
    def valid(self) -> bool:
        return self.feasible and self.residual_norm < VALID_RESIDUAL


def residual_norm(state, params: Parameters) -> float:
    return float(np.max(np.abs(rhs(state, params))))


def classify_pattern(state, params: Parameters) -> EquilibriumKind:
    """Name an equilibrium from its zero/positive component pattern."""
    x = np.asarray(state, dtype=float)
    zero_tol = 1e-9 * max(1.0, float(np.max(np.abs(x))))
    pos = x > zero_tol
    zero = np.abs(x) <= zero_tol
    if zero.all():
        return EquilibriumKind.ORIGIN
    if pos.all():
        return EquilibriumKind.COEX_M1 if params.is_m1 else EquilibriumKind.COEX_M2
    if params.is_m1:
        if zero[0] and zero[1] and pos[2] and pos[3]:
            return EquilibriumKind.X1
        if pos[0] and zero[1] and pos[2] and pos[3]:
            return EquilibriumKind.X2
    else:
        if pos[0] and pos[1] and pos[2] and zero[3]:
            return EquilibriumKind.U
        if pos[0] and zero[1] and pos[2] and pos[3]:
            return EquilibriumKind.W
    return EquilibriumKind.OTHER


def _make(x, params, provenance, kind=None, flags=()) -> Equilibrium:
    x = np.asarray(x, dtype=float)
    return Equilibrium(
        kind=kind or classify_pattern(x, params),
        state=State(*(float(v) for v in x)),
        residual_norm=residual_norm(x, params),
        provenance=provenance,
        params_digest=params.digest(),
        flags=tuple(flags),
    )


def _snap_zeros(x, params) -> np.ndarray:
    """Round round-off sized components to exact zero when that keeps the residual."""
    scale = max(1.0, float(np.max(np.abs(x))))
    snapped = np.where(np.abs(x) < 1e-10 * scale, 0.0, x)
    if np.array_equal(snapped, x):
        return x
    if residual_norm(snapped, params) <= max(residual_norm(x, params), NEWTON_TOL):
        return snapped
    return x


def origin(params: Parameters | None = None) -> Equilibrium:
    return Equilibrium(
        kind=EquilibriumKind.ORIGIN,
        state=State(0.0, 0.0, 0.0, 0.0),
        residual_norm=0.0,
        provenance=Provenance.CLOSED_FORM,
        params_digest=params.digest() if params is not None else "",
    )


# -- damped Newton -----------------------------------------------------------

def newton_solve(guess, params: Parameters, constraint_mask=None, tol=NEWTON_TOL,
                 max_iter=200, max_halvings=40):
    """Damped Newton on ``rhs = 0``; returns ``(x, iterations)``.

    ``constraint_mask`` is a length-4 boolean sequence; ``True`` pins that
    component at its guessed value and drops its equation from the solve.
    """
    x = np.array(guess, dtype=float)
    if x.shape != (4,) or not np.all(np.isfinite(x)):
        raise PreconditionError("Newton guess must be four finite numbers")
    pinned = np.zeros(4, bool) if constraint_mask is None else np.asarray(constraint_mask, bool)
    free = np.flatnonzero(~pinned)

    f = rhs(x, params)
    for it in range(max_iter + 1):
        if np.max(np.abs(f[free]), initial=0.0) < tol:
            full = float(np.max(np.abs(f)))
            if full >= tol:
                raise NonConvergedError(
                    f"pinned components are not stationary (residual {full:.3e})")
            return x, it
        if it == max_iter:
            break
        try:
            J = jacobian(x, params)[np.ix_(free, free)]
        except ArithmeticError as exc:
            raise NonConvergedError(f"Jacobian evaluation failed at {x}: {exc}") from None
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e14:
            raise SingularJacobianError(f"Jacobian condition estimate exceeds 1e14 at {x}")
        step = np.linalg.solve(J, -f[free])
        norm0 = np.linalg.norm(f[free])
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = x.copy()
            trial[free] += t * step
            try:
                f_trial = rhs(trial, params)
            except ArithmeticError:
                t *= 0.5
                continue
            if np.all(np.isfinite(f_trial)) and np.linalg.norm(f_trial[free]) < norm0:
                break
            t *= 0.5
        else:
            raise NonConvergedError(
                f"line search stalled after {max_halvings} halvings (residual {norm0:.3e})")
        x, f = trial, f_trial
    raise NonConvergedError(
        f"no convergence in {max_iter} iterations (residual {np.max(np.abs(f)):.3e})")


def newton_refine(guess, params: Parameters, constraint_mask=None) -> Equilibrium:
    """Polish ``guess`` to an equilibrium with max-norm residual below 1e-10."""
    x, _ = newton_solve(guess, params, constraint_mask)
    return _make(_snap_zeros(x, params), params, Provenance.NEWTON)


# -- scenario M1 closed forms -----------------------------------------------

def x1_closed_form(params: Parameters) -> Equilibrium:
    """Only the arrival patch populated: ``(0, 0, S2, I2)``."""
    p = params
    if not p.is_m1:
        raise PreconditionError("X1 exists only under M1")
    if p.gamma2 <= 0 or p.mu2 <= 0:
        raise PreconditionError("X1 needs gamma2 > 0 and mu2 > 0")
    s2 = (p.delta2 + p.mu2) / p.gamma2
    i2 = p.r2 * s2 / p.mu2
    return _make([0.0, 0.0, s2, i2], p, Provenance.CLOSED_FORM, EquilibriumKind.X1)


def _x2_raw(p: Parameters):
    k = p.delta2 + p.mu2
    excess = p.gamma2 * p.m21 - p.r1 * p.gamma2 * p.A - k * p.r1
    s2 = k / p.gamma2
    i2 = excess / (p.r1 * p.gamma2)
    # dS2 = 0 at I1 = 0 reduces to r1*S1 = mu2*I2 - r2*S2, hence r1**2 in the denominator
    s1 = (p.mu2 * excess - p.r1 * p.r2 * k) / (p.r1**2 * p.gamma2)
    return np.array([s1, 0.0, s2, i2])


def x2_closed_form(params: Parameters) -> Equilibrium:
    """Patch 1 disease free: ``(S1, 0, S2, I2)``, Newton-polished.

    Infeasible points (a negative component) are returned, not rejected;
    check :attr:`Equilibrium.feasible`.
    """
    p = params
    if not p.is_m1:
        raise PreconditionError("X2 exists only under M1")
    if p.r1 <= 0 or p.gamma2 <= 0 or p.mu2 <= 0:
        raise PreconditionError("X2 needs r1 > 0, gamma2 > 0 and mu2 > 0")
    x = _x2_raw(p)
    try:
        x, _ = newton_solve(x, p, constraint_mask=(False, True, False, False))
    except (NonConvergedError, SingularJacobianError):
        pass
    eq = _make(x, p, Provenance.CLOSED_FORM, EquilibriumKind.X2)
    if eq.residual_norm >= VALID_RESIDUAL:
        return dataclasses.replace(eq, flags=("RESIDUAL_CHECK_FAILED",))
    return eq


@dataclasses.dataclass(frozen=True)
class Feasibility:
    feasible: bool
    margins: tuple


def x2_feasibility(params: Parameters) -> Feasibility:
    """Both X2 feasibility inequalities as LHS - RHS margins."""
    p = params
    k = p.delta2 + p.mu2
    excess = p.gamma2 * p.m21 - p.r1 * p.gamma2 * p.A - k * p.r1
    margins = (excess, p.mu2 * excess - k * p.r1 * p.r2)
    return Feasibility(margins[0] >= 0 and margins[1] >= 0, margins)


class CoexBranch(str, enum.Enum):
    COEX_1 = "COEX_1"
    COEX_1BIS = "COEX_1BIS"
    NONE = "NONE"


@dataclasses.dataclass(frozen=True)
class CoexistenceCheck:
    branch: CoexBranch
    z_value: float
    z_window_ok: bool
    status: str = "OK"


def coexistence_filter(candidate, params: Parameters) -> CoexistenceCheck:
    """Necessary-condition screen for an interior M1 equilibrium.

    Eliminating S1 with the total balance and S2 with the infected balance
    gives ``S2 * D = N`` with ``D = r1 g2 I2 - r2 g1 I1``. A positive point
    therefore needs ``S1 > 0`` and ``N`` of the same sign as ``D``:

    * ``COEX_1``: ``I1 > r1 g2 I2 / (r2 g1)`` (``D < 0``) and ``N < 0``;
    * ``COEX_1BIS``: ``I1 < r1 g2 I2 / (r2 g1)`` (``D > 0``) and ``N > 0``.

    ``N`` is ``Zden * (I2 - Z)`` with ``Zden = r1 (delta2+mu2) - g1 mu2 I1``.
    ``z_window_ok`` reports whether I1 lies strictly between
    ``r1 (delta1+mu1)/(g1 mu1)`` and ``r1 (delta2+mu2)/(g1 mu2)``, which is
    where ``Z > 0``. Passing the screen does not certify an equilibrium.
    """
    p = params
    if not p.is_m1:
        raise PreconditionError("coexistence filter applies to M1 only")
    s1, i1, s2, i2 = (float(v) for v in candidate)
    if min(s1, i1, s2, i2) <= 0:
        raise PreconditionError("coexistence filter needs a strictly positive candidate")

    z_num = p.gamma1 * p.mu1 * i1**2 - p.r1 * (p.delta1 + p.mu1) * i1
    z_den = p.r1 * (p.delta2 + p.mu2) - p.gamma1 * p.mu2 * i1
    status = "OK"
    if abs(z_den) < 1e-12:
        z, status = math.nan, "UNDEFINED_Z"
    else:
        z = z_num / z_den
    numer = z_den * i2 - z_num
    denom = p.r1 * p.gamma2 * i2 - p.r2 * p.gamma1 * i1
    s1_positive = p.mu1 * i1 + p.mu2 * i2 - p.r2 * s2 > 0

    branch = CoexBranch.NONE
    if s1_positive and denom < 0 and numer < 0:
        branch = CoexBranch.COEX_1
    elif s1_positive and denom > 0 and numer > 0:
        branch = CoexBranch.COEX_1BIS

    window_ok = False
    if p.gamma1 > 0 and p.mu1 > 0 and p.mu2 > 0:
        lo = p.r1 * (p.delta1 + p.mu1) / (p.gamma1 * p.mu1)
        hi = p.r1 * (p.delta2 + p.mu2) / (p.gamma1 * p.mu2)
        window_ok = lo < i1 < hi or hi < i1 < lo
    return CoexistenceCheck(branch, z, window_ok, status)


# -- scenario M2: U and W -----------------------------------------------------

def uw_reduced_polynomials(params: Parameters, which: str = "U"):
    """Coefficients ``(a2, a1, a0)`` of g and ``(b3, b2, b1, b0)`` of f.

    On the U curve the remaining susceptible balance is ``g(S2) = f(S2)``.
    For W the same formulas apply to the patch-swapped parameters, with S1
    as the variable.
    """
    which = which.upper()
    if which not in ("U", "W"):
        raise ValueError("which must be 'U' or 'W'")
    p = swap_patches(params) if which == "W" else params
    if p.gamma1 <= 0 or p.mu1 <= 0:
        raise PreconditionError(f"{which} needs the endemic patch gamma > 0 and mu > 0")
    s = (p.delta1 + p.mu1) / p.gamma1
    a2 = p.m12 - p.r2 * p.A - p.r2 * s
    g = (a2, p.A * a2, -p.m21 * p.A * s - p.m21 * s**2)
    f = (
        p.r2**2 / p.mu1,
        p.r1 * p.r2 * s / p.mu1 + p.r2**2 * p.A / p.mu1,
        p.r1 * p.r2 * p.A * s / p.mu1 + p.r2 * p.m21 * s / p.mu1,
        p.r1 * p.m21 * s**2 / p.mu1,
    )
    return g, f


def _u_curve(p: Parameters):
    """State on the U curve and the residual of dS1/dt, as functions of S2."""
    s = (p.delta1 + p.mu1) / p.gamma1

    def point(s2):
        return np.array([s, (p.r1 * s + p.r2 * s2) / p.mu1, s2, 0.0])

    def h(s2):
        return rhs_tuple(s, (p.r1 * s + p.r2 * s2) / p.mu1, s2, 0.0, p)[0]

    def dh(s2):
        J = jacobian(point(s2), p)
        return J[0, 2] + J[0, 1] * p.r2 / p.mu1

    return point, h, dh, s


def _safeguarded_newton(h, dh, a, b, fa, max_iter=200):
    x = 0.5 * (a + b)
    for _ in range(max_iter):
        fx = h(x)
        if fx == 0.0:
            return x
        if (fx < 0) == (fa < 0):
            a, fa = x, fx
        else:
            b = x
        d = dh(x)
        cand = x - fx / d if d != 0 else math.nan
        if not (a < cand < b):
            cand = 0.5 * (a + b)
        if abs(cand - x) <= 4e-16 * max(1.0, abs(x)) or b - a <= 4e-16 * max(1.0, abs(b)):
            return cand
        x = cand
    return x


def _solve_u_like(p: Parameters, which: str) -> list:
    if p.is_m1:
        raise PreconditionError(f"{which} exists only under M2")
    if p.gamma1 <= 0 or p.mu1 <= 0:
        raise PreconditionError(f"{which} needs gamma > 0 and mu > 0 in its endemic patch")
    point, h, dh, s = _u_curve(p)
    upper = 10.0 * max(p.A, p.m12 + p.m21, s)
    grid = np.linspace(0.0, upper, N_PANELS + 1)
    values = [h(v) for v in grid]
    (ga2, ga1, ga0), fcoef = uw_reduced_polynomials(p, "U")

    roots = []
    for k in range(N_PANELS):
        a, b, fa, fb = grid[k], grid[k + 1], values[k], values[k + 1]
        if fb == 0.0 and b > 0:
            roots.append(b)
        elif fa * fb < 0:
            roots.append(_safeguarded_newton(h, dh, a, b, fa))

    found = []
    for s2 in roots:
        x = point(s2)
        if residual_norm(x, p) >= VALID_RESIDUAL:
            try:
                x, _ = newton_solve(x, p, constraint_mask=(False, False, False, True))
            except (NonConvergedError, SingularJacobianError):
                continue
            if residual_norm(x, p) >= VALID_RESIDUAL:
                continue
        flags = []
        g_val = np.polyval((ga2, ga1, ga0), x[2])
        f_val = np.polyval(fcoef, x[2])
        if abs(f_val - g_val) >= CROSS_CHECK_RTOL * (1.0 + abs(f_val)):
            flags.append("CROSS_CHECK_MISMATCH")
        found.append((x, flags))
    return found


def solve_u(params: Parameters) -> list:
    """U: patch 2 disease free, ``(S1, I1, S2, 0)`` with ``S2 > 0``."""
    return [
        _make(x, params, Provenance.REDUCED_ROOT, EquilibriumKind.U, flags)
        for x, flags in _solve_u_like(params, "U")
    ]


def solve_w(params: Parameters) -> list:
    """W: patch 1 disease free, ``(S1, 0, S2, I2)`` with ``S1 > 0``."""
    swapped = swap_patches(params)
    return [
        _make(swap_state(x), params, Provenance.REDUCED_ROOT, EquilibriumKind.W, flags)
        for x, flags in _solve_u_like(swapped, "W")
    ]


# -- enumeration --------------------------------------------------------------

def _closed_form_candidates(params: Parameters) -> list:
    p = params
    out = [origin(p)]
    if p.is_m1:
        if p.gamma2 > 0 and p.mu2 > 0:
            out.append(x1_closed_form(p))
            if p.r1 > 0:
                x2 = x2_closed_form(p)
                if x2.valid:
                    out.append(x2)
    else:
        if p.gamma1 > 0 and p.mu1 > 0:
            out.extend(solve_u(p))
        if p.gamma2 > 0 and p.mu2 > 0:
            out.extend(solve_w(p))
    return [e for e in out if e.valid]


def default_search_box(params: Parameters, known=()) -> list:
    top = 10.0
    for eq in known:
        top = max(top, 1.5 * max(eq.state))
    return [(0.0, top)] * 4


def _newton_from(args):
    guess, params = args
    try:
        x, _ = newton_solve(guess, params)
    except (NonConvergedError, SingularJacobianError):
        return None
    x = _snap_zeros(x, params)
    if x.min() < FEASIBLE_FLOOR or residual_norm(x, params) >= VALID_RESIDUAL:
        return None
    return x


_ANALYTIC_KINDS = {
    True: {EquilibriumKind.ORIGIN, EquilibriumKind.X1, EquilibriumKind.X2},
    False: {EquilibriumKind.ORIGIN, EquilibriumKind.U, EquilibriumKind.W},
}


def _dedup_append(catalog: list, eq: Equilibrium, tol: float = DEDUP_TOL) -> None:
    x = eq.array
    for other in catalog:
        if np.max(np.abs(other.array - x)) < tol * (1.0 + np.max(np.abs(x))):
            return
    catalog.append(eq)


def _assign_ids(eqs: list) -> list:
    counts = {}
    out = []
    for eq in eqs:
        n = counts.get(eq.kind, 0) + 1
        counts[eq.kind] = n
        ident = eq.kind.value if n == 1 else f"{eq.kind.value}_{n}"
        out.append(dataclasses.replace(eq, id=ident))
    return out


def enumerate_equilibria(params: Parameters, search_box: Sequence | None = None,
                         n_starts: int = 200, seed: int = 0,
                         workers: int | None = None) -> list:
    """All feasible equilibria found by closed forms plus multi-start Newton.

    Starts are a scrambled Sobol sequence over ``search_box`` (a list of
    four ``(lo, hi)`` ranges). Multi-start is a heuristic: it does not
    certify that every equilibrium was found. The result is sorted
    lexicographically by state, so it does not depend on ``workers``.
    """
    catalog = []
    for eq in _closed_form_candidates(params):
        _dedup_append(catalog, eq)

    box = np.array(search_box if search_box is not None
                   else default_search_box(params, catalog), dtype=float)
    if n_starts > 0:
        sampler = qmc.Sobol(d=4, scramble=True, seed=seed)
        m = max(0, math.ceil(math.log2(n_starts)))
        starts = qmc.scale(sampler.random_base2(m)[:n_starts], box[:, 0], box[:, 1])
        tasks = [(s, params) for s in starts]
        if workers and workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_newton_from, tasks, chunksize=16))
        else:
            results = [_newton_from(t) for t in tasks]
        analytic = _ANALYTIC_KINDS[params.is_m1]
        for x in results:
            if x is None:
                continue
            eq = _make(x, params, Provenance.NEWTON)
            # boundary faces with a closed form or a complete 1-D root-find are
            # already covered; Newton only adds interior points
            if eq.kind not in analytic:
                _dedup_append(catalog, eq, CLUSTER_TOL)

    catalog.sort(key=lambda e: tuple(e.state))
    return _assign_ids(catalog)
