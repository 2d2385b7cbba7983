"""Adaptive Dormand-Prince 5(4) integration with steady-state detection.

Scalar Python arithmetic on four floats is faster than numpy for vectors
this small, which matters for basin grids with hundreds of trajectories.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from collections.abc import Sequence

import numpy as np

from .errors import PreconditionError
from .model import Parameters, jacobian, rhs_tuple

# Dormand-Prince tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# fifth-order weights minus the embedded fourth-order ones
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

CLAMP_FLOOR = -1e-12
NEGATIVE_LIMIT = -1e-9
MIN_STEP = 1e-14
MATCH_TOL = 1e-5
# near a steady state the step is capped at STABILITY_CAP / spectral radius of the
# Jacobian; the stability region reaches |z| >= 2 even for nearly undamped modes
STABILITY_CAP = 1.5
NEAR_STEADY = 1e-3
CAP_REFRESH = 10


@dataclasses.dataclass(frozen=True)
class IntegrationSettings:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    t_max: float = 1e4
    max_steps: int = 2_000_000
    initial_step: float = 1e-3
    quiet_steps: int = 50
    divergence_limit: float = 1e8

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise PreconditionError("tolerances must be > 0")
        if not self.t_max > 0:
            raise PreconditionError("t_max must be > 0")
        if not self.initial_step > 0:
            raise PreconditionError("initial_step must be > 0")
        if not self.divergence_limit > 0:
            raise PreconditionError("divergence_limit must be > 0")


class Verdict(str, enum.Enum):
    CONVERGED = "CONVERGED"
    TIMED_OUT = "TIMED_OUT"
    BLEW_UP = "BLEW_UP"


@dataclasses.dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    verdict: Verdict
    final_residual: float
    equilibrium_id: str | None = None
    message: str = ""

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def verdict_label(self) -> str:
        if self.verdict is Verdict.CONVERGED and self.equilibrium_id:
            return f"CONVERGED({self.equilibrium_id})"
        return self.verdict.value


def detect_convergence(final_state, catalog: Sequence, tol: float = MATCH_TOL):
    """Id of the nearest catalogued equilibrium within ``tol`` (max-norm), else None.

    Ties go to the earlier catalog entry.
    """
    x = np.asarray(getattr(final_state, "final_state", final_state), dtype=float)
    best, best_d = None, math.inf
    for eq in catalog:
        d = float(np.max(np.abs(np.asarray(eq.state, dtype=float) - x)))
        if d <= tol and d < best_d:
            best, best_d = eq.id, d
    return best


def _max_abs(v):
    return max(abs(v[0]), abs(v[1]), abs(v[2]), abs(v[3]))


def integrate(initial, params: Parameters, settings: IntegrationSettings | None = None,
              catalog: Sequence | None = None) -> Trajectory:
    """Integrate from ``initial`` until a steady state, ``t_max`` or failure.

    A steady state is declared after ``settings.quiet_steps`` consecutive
    accepted steps on which both the state change rate and the rhs max-norm
    are below ``abs_tol``. With a ``catalog`` the final state is matched to
    an equilibrium id; a settled run with no match keeps ``equilibrium_id``
    as ``None``.
    """
    cfg = settings or IntegrationSettings()
    y = [float(v) for v in initial]
    if len(y) != 4 or not all(math.isfinite(v) for v in y):
        raise PreconditionError("initial state must be four finite numbers")
    if _max_abs(y) > cfg.divergence_limit:
        raise PreconditionError("initial state exceeds the divergence limit")
    if min(y) < 0:
        raise PreconditionError("initial state must be nonnegative")

    p = params
    f = rhs_tuple(*y, p)
    t = 0.0
    h = min(cfg.initial_step, cfg.t_max)
    times = [t]
    states = [tuple(y)]
    quiet = 0
    n_accepted = 0
    h_cap = None
    verdict = Verdict.TIMED_OUT
    message = ""
    rtol, atol = cfg.rel_tol, cfg.abs_tol

    for _ in range(cfg.max_steps):
        if t >= cfg.t_max:
            message = "reached t_max"
            break
        h = min(h, cfg.t_max - t)
        while True:
            if h < MIN_STEP:
                verdict, message = Verdict.BLEW_UP, f"step size underflow at t={t:.6g}"
                break
            ks = [f]
            try:
                for s in range(1, 7):
                    row = _A[s]
                    yi = [y[j] + h * sum(row[m] * ks[m][j] for m in range(s)) for j in range(4)]
                    ks.append(rhs_tuple(*yi, p))
            except (ArithmeticError, ValueError):
                h *= 0.25
                continue
            y_new = yi  # last stage point is the fifth-order solution (FSAL)
            f_new = ks[6]
            err = 0.0
            finite = True
            for j in range(4):
                e = h * sum(_E[m] * ks[m][j] for m in range(7))
                if not (math.isfinite(y_new[j]) and math.isfinite(e)):
                    finite = False
                    break
                sc = atol + rtol * max(abs(y[j]), abs(y_new[j]))
                err = max(err, abs(e) / sc)
            if not finite:
                h *= 0.25
                continue
            if err <= 1.0:
                break
            h *= max(0.2, 0.9 * err ** -0.2)
        if verdict is Verdict.BLEW_UP:
            break

        clamped = False
        for j in range(4):
            if CLAMP_FLOOR < y_new[j] < 0.0:
                y_new[j] = 0.0
                clamped = True
        if clamped:
            f_new = rhs_tuple(*y_new, p)
        t_new = t + h
        rate = max(abs(y_new[j] - y[j]) for j in range(4)) / h
        times.append(t_new)
        states.append(tuple(y_new))
        if min(y_new) < NEGATIVE_LIMIT:
            verdict = Verdict.BLEW_UP
            j = min(range(4), key=lambda k: y_new[k])
            message = f"component {j} went negative ({y_new[j]:.3e}) at t={t_new:.6g}"
            break
        if _max_abs(y_new) > cfg.divergence_limit:
            # unbounded growth turns stiff long before it overflows
            verdict = Verdict.BLEW_UP
            message = f"state exceeded {cfg.divergence_limit:.3g} at t={t_new:.6g}"
            break

        t, y, f = t_new, y_new, f_new
        n_accepted += 1
        if rate < atol and _max_abs(f) < atol:
            quiet += 1
            if quiet >= cfg.quiet_steps:
                verdict, message = Verdict.CONVERGED, f"settled at t={t:.6g}"
                break
        else:
            quiet = 0
        factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= factor
        # error control alone lets the step ride the stability boundary near an
        # equilibrium, which leaves a tolerance-sized noise floor in the state
        if _max_abs(f) < NEAR_STEADY * (1.0 + _max_abs(y)):
            if h_cap is None or n_accepted % CAP_REFRESH == 0:
                rho = float(np.max(np.abs(np.linalg.eigvals(jacobian(y, p)))))
                h_cap = STABILITY_CAP / rho if rho > 0 else math.inf
            h = min(h, h_cap)
        else:
            h_cap = None
    else:
        message = f"hit max_steps={cfg.max_steps}"

    states_arr = np.array(states, dtype=float)
    final = states_arr[-1]
    if np.all(np.isfinite(final)):
        final_residual = _max_abs(rhs_tuple(*final, p))
    else:
        final_residual = math.inf
    eq_id = None
    if verdict is Verdict.CONVERGED and catalog is not None:
        eq_id = detect_convergence(final, catalog)
    return Trajectory(np.array(times), states_arr, verdict, final_residual, eq_id, message)
