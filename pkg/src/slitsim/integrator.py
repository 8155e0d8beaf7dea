"""Time stepping for a particle in the screen field.

The workhorse is a classical RK4 that bootstraps a 4th-order
Adams-Bashforth-Moulton predictor-corrector (one PECE pass).  Step size is
controlled by two rules: it shrinks proportionally to the distance from the
screen plane once the particle gets close, and it is halved while the
predicted per-step displacement exceeds a cap.  Any step-size change drops
back to RK4 until four uniform steps rebuild the multistep history.

Plane crossings (the slitted screen at x = 0 and the detector at x = L) are
located by bisection in time over the step that straddled the plane,
re-integrating from the step start with short RK4 substeps.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

from .forcefield import GUARD_EPS

__all__ = [
    "ParticleState",
    "StepController",
    "IntegratorState",
    "StepUnderflowError",
    "PlaneCrossingError",
    "fresh_integrator",
    "rk4_step",
    "abm4_step",
    "advance",
    "guarded_field",
    "locate_plane_crossing",
]

BOOTSTRAP = "bootstrap"
ADAMS = "adams"

Field = Callable[[float, float], tuple[float, float]]


class ParticleState(NamedTuple):
    """Phase-space point of one particle."""

    t: float
    x: float
    y: float
    vx: float
    vy: float


class StepController(NamedTuple):
    """Step-size policy.

    h0 is the base step, h_min the hard floor.  Within shrink_near of the
    screen plane the step scales as h0 * |x| / shrink_near (clamped).  The
    step is halved while the predicted displacement exceeds
    safety * delta_max.
    """

    h0: float
    h_min: float
    shrink_near: float
    delta_max: float
    safety: float = 0.9

    def validate(self):
        if not (0.0 < self.h_min <= self.h0):
            raise ValueError("need 0 < h_min <= h0")
        if self.shrink_near <= 0 or self.delta_max <= 0 or not (0 < self.safety <= 1):
            raise ValueError("shrink_near, delta_max must be > 0 and 0 < safety <= 1")
        return self


class IntegratorState(NamedTuple):
    """Multistep bookkeeping: up to 4 (state, acceleration) pairs at spacing h."""

    history: tuple
    mode: str
    h: float


class StepUnderflowError(RuntimeError):
    """Step hit h_min while the displacement cap was still exceeded."""


class PlaneCrossingError(RuntimeError):
    """Bisection for a plane crossing failed to converge."""


def fresh_integrator(h: float) -> IntegratorState:
    return IntegratorState(history=(), mode=BOOTSTRAP, h=h)


def rk4_step(state: ParticleState, h: float, field: Field,
             accel0: tuple[float, float] | None = None) -> ParticleState:
    """One classical Runge-Kutta 4 step of the second-order dynamics.

    accel0 optionally supplies the already-known acceleration at `state`
    (saves one field call when rolling history forward).
    """
    t, x, y, vx, vy = state
    ax1, ay1 = field(x, y) if accel0 is None else accel0
    h2 = 0.5 * h

    vx2 = vx + h2 * ax1
    vy2 = vy + h2 * ay1
    ax2, ay2 = field(x + h2 * vx, y + h2 * vy)

    vx3 = vx + h2 * ax2
    vy3 = vy + h2 * ay2
    ax3, ay3 = field(x + h2 * vx2, y + h2 * vy2)

    vx4 = vx + h * ax3
    vy4 = vy + h * ay3
    ax4, ay4 = field(x + h * vx3, y + h * vy3)

    sixth = h / 6.0
    return ParticleState(
        t + h,
        x + sixth * (vx + 2.0 * (vx2 + vx3) + vx4),
        y + sixth * (vy + 2.0 * (vy2 + vy3) + vy4),
        vx + sixth * (ax1 + 2.0 * (ax2 + ax3) + ax4),
        vy + sixth * (ay1 + 2.0 * (ay2 + ay3) + ay4),
    )


def abm4_step(integ: IntegratorState, field: Field) -> tuple[IntegratorState, ParticleState]:
    """Adams-Bashforth 4 predictor + Adams-Moulton 4 corrector (one PECE pass).

    Requires a full history of 4 uniformly spaced (state, acceleration)
    pairs; the corrected state's acceleration is evaluated and rolled into
    the history (the trailing E of PECE).
    """
    if integ.mode != ADAMS or len(integ.history) != 4:
        raise ValueError("abm4_step requires Adams mode with 4 history entries")
    (s1, a1), (s2, a2), (s3, a3), (s4, a4) = integ.history
    ax1, ay1 = a1
    ax2, ay2 = a2
    ax3, ay3 = a3
    ax4, ay4 = a4
    h = integ.h
    c = h / 24.0

    # Predictor: 55 f_n - 59 f_{n-1} + 37 f_{n-2} - 9 f_{n-3}
    xp = s4.x + c * (55.0 * s4.vx - 59.0 * s3.vx + 37.0 * s2.vx - 9.0 * s1.vx)
    yp = s4.y + c * (55.0 * s4.vy - 59.0 * s3.vy + 37.0 * s2.vy - 9.0 * s1.vy)
    vxp = s4.vx + c * (55.0 * ax4 - 59.0 * ax3 + 37.0 * ax2 - 9.0 * ax1)
    vyp = s4.vy + c * (55.0 * ay4 - 59.0 * ay3 + 37.0 * ay2 - 9.0 * ay1)
    axp, ayp = field(xp, yp)

    # Corrector: 9 f_{n+1}^P + 19 f_n - 5 f_{n-1} + f_{n-2}
    xn = s4.x + c * (9.0 * vxp + 19.0 * s4.vx - 5.0 * s3.vx + s2.vx)
    yn = s4.y + c * (9.0 * vyp + 19.0 * s4.vy - 5.0 * s3.vy + s2.vy)
    vxn = s4.vx + c * (9.0 * axp + 19.0 * ax4 - 5.0 * ax3 + ax2)
    vyn = s4.vy + c * (9.0 * ayp + 19.0 * ay4 - 5.0 * ay3 + ay2)

    new = ParticleState(s4.t + h, xn, yn, vxn, vyn)
    a_new = field(xn, yn)
    return (
        IntegratorState(history=((s2, a2), (s3, a3), (s4, a4), (new, a_new)), mode=ADAMS, h=h),
        new,
    )


def propose_step(state: ParticleState, accel: tuple[float, float],
                 ctrl: StepController) -> float:
    """Step size for the next step from `state` (shrink near plane, cap displacement)."""
    h = ctrl.h0
    ax_dist = abs(state.x)
    if ax_dist < ctrl.shrink_near:
        h = ctrl.h0 * (ax_dist / ctrl.shrink_near)
        if h < ctrl.h_min:
            h = ctrl.h_min
    speed = math.sqrt(state.vx * state.vx + state.vy * state.vy)
    amag = math.sqrt(accel[0] * accel[0] + accel[1] * accel[1])
    cap = ctrl.safety * ctrl.delta_max
    while speed * h + 0.5 * amag * h * h > cap:
        if h <= ctrl.h_min:
            raise StepUnderflowError(
                f"h_min={ctrl.h_min} underflow at t={state.t}: predicted displacement "
                f"{speed * h + 0.5 * amag * h * h:.3e} still exceeds cap {cap:.3e}"
            )
        h = max(0.5 * h, ctrl.h_min)
    return h


def advance(state: ParticleState, integ: IntegratorState, ctrl: StepController,
            field: Field) -> tuple[ParticleState, IntegratorState]:
    """Take one accepted step; returns the new state and integrator bookkeeping."""
    # Current acceleration: reuse the stored history entry when it is ours.
    if integ.history and integ.history[-1][0] is state:
        accel = integ.history[-1][1]
    else:
        accel = field(state.x, state.y)
    h = propose_step(state, accel, ctrl)

    if h != integ.h:
        integ = fresh_integrator(h)

    if integ.mode == ADAMS:
        integ, new = abm4_step(integ, field)
        return new, integ

    new = rk4_step(state, h, field, accel0=accel)
    a_new = field(new.x, new.y)
    history = (integ.history + ((new, a_new),))[-4:]
    mode = ADAMS if len(history) == 4 else BOOTSTRAP
    return new, IntegratorState(history=history, mode=mode, h=h)


def guarded_field(field: Field) -> Field:
    """Field evaluated with |x| floored to just outside the guard band.

    Stage and predictor points of steps that approach or straddle the
    screen plane can land within GUARD_EPS of x = 0, where the closed form
    is undefined.  The field there is bounded (jump discontinuity only), so
    snapping the evaluation point to the band edge perturbs the trajectory
    by an impulse of order GUARD_EPS -- far below every tolerance in use.
    The sign is preserved, so evaluations stay on the side they came from.
    """
    eps = GUARD_EPS
    floor = math.nextafter(eps, math.inf)  # force errors at |x| <= eps inclusive

    def f(x: float, y: float) -> tuple[float, float]:
        if -floor < x < floor:
            x = floor if x >= 0.0 else -floor
        return field(x, y)

    return f


def locate_plane_crossing(prev: ParticleState, cur: ParticleState, plane_x: float,
                          tol: float, field: Field, substeps: int = 2,
                          max_iter: int = 200) -> ParticleState:
    """State at which the trajectory from prev to cur crosses x = plane_x.

    Bisects the elapsed time of the step, re-integrating from prev with
    `substeps` RK4 substeps per probe, until |x - plane_x| <= tol.  All
    components (t, y, vx, vy) come from the same substep integration, so
    they are mutually consistent.
    """
    g0 = prev.x - plane_x
    g1 = cur.x - plane_x
    if g0 == 0.0:
        return prev
    if g1 == 0.0:
        return cur
    if (g0 > 0.0) == (g1 > 0.0):
        raise ValueError("prev and cur must straddle the plane")
    h_full = cur.t - prev.t
    if h_full <= 0.0:
        raise ValueError("cur must be later than prev")
    f = guarded_field(field)

    def probe(dt: float) -> ParticleState:
        s = prev
        hs = dt / substeps
        for _ in range(substeps):
            s = rk4_step(s, hs, f)
        return s

    lo, hi = 0.0, h_full
    best = cur if abs(g1) < abs(g0) else prev
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        s = probe(mid)
        g = s.x - plane_x
        if abs(g) <= tol:
            return s
        if abs(g) < abs(best.x - plane_x):
            best = s
        if (g > 0.0) == (g0 > 0.0):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-18 * h_full:
            break
    if abs(best.x - plane_x) <= tol:
        return best
    raise PlaneCrossingError(
        f"no convergence to |x - {plane_x}| <= {tol} within {max_iter} bisections"
    )
