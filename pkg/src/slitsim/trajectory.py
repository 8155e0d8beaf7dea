"""Single-particle simulation from emitter to terminal event.

A particle leaves the emitter at (-D, 0) with speed v0 at angle alpha and
moves in the field of the slitted screen (the field acts on both sides of
the screen; the detector plane at x = L is uncharged and purely absorbing).
Each integration step is checked for plane crossings:

* crossing x = 0 with y in the material closure  -> blocked (absorbed);
* crossing x = 0 through an open slit            -> keep integrating;
* crossing x = L                                 -> detector hit at that y;
* x < -x_escape while still receding            -> escaped;
* t > t_max                                      -> timed out.

Slit-edge ties count as blocked (the material is closed), which keeps the
measure-zero case deterministic.  A particle may cross the screen plane any
number of times; the same classification applies at every crossing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .forcefield import PhysicsParams, SlitLayout, make_force
from .integrator import (
    ParticleState,
    StepController,
    advance,
    fresh_integrator,
    locate_plane_crossing,
)

__all__ = [
    "OutcomeKind",
    "EmissionSpec",
    "TrajectoryLimits",
    "TrajectoryOutcome",
    "default_limits",
    "simulate",
]

EVENT_TOL = 1e-10  # |x - plane| tolerance for located crossings


class OutcomeKind(Enum):
    HIT_S2 = "hit_s2"
    BLOCKED_S1 = "blocked_s1"
    ESCAPED = "escaped"
    MAX_TIME_EXCEEDED = "max_time_exceeded"


class TrajectoryLimits(NamedTuple):
    x_escape: float
    t_max: float


@dataclass(frozen=True)
class EmissionSpec:
    """One emitted particle: angle, physics, and screen geometry."""

    alpha: float
    params: PhysicsParams
    layout: SlitLayout

    def __post_init__(self):
        if not (0.0 <= self.alpha < 2.0 * math.pi):
            raise ValueError(f"alpha must lie in [0, 2*pi), got {self.alpha}")


@dataclass(frozen=True)
class TrajectoryOutcome:
    """Terminal classification of one particle."""

    kind: OutcomeKind
    y_final: float | None
    t_final: float
    steps: int
    path: tuple[ParticleState, ...] | None = None


def default_limits(params: PhysicsParams) -> TrajectoryLimits:
    return TrajectoryLimits(
        x_escape=3.0 * params.D,
        t_max=100.0 * (params.D + params.L) / params.v0,
    )


def simulate(
    spec: EmissionSpec,
    ctrl: StepController,
    limits: TrajectoryLimits | None = None,
    trace: bool = False,
) -> TrajectoryOutcome:
    """Integrate one particle to its terminal event."""
    params = spec.params
    layout = spec.layout
    if limits is None:
        limits = default_limits(params)
    if limits.x_escape <= params.D:
        raise ValueError("x_escape must exceed the emitter distance D")
    if limits.t_max <= 0.0:
        raise ValueError("t_max must be positive")

    # Near-plane stage points may fall inside the guard band; the snap
    # variant evaluates at the band edge instead of failing the step.
    field = make_force(layout, params.kappa, guard="snap")
    state = ParticleState(
        t=0.0,
        x=-params.D,
        y=0.0,
        vx=params.v0 * math.cos(spec.alpha),
        vy=params.v0 * math.sin(spec.alpha),
    )
    integ = fresh_integrator(ctrl.h0)
    plane_l = params.L
    x_escape = limits.x_escape
    t_max = limits.t_max
    path = [state] if trace else None
    steps = 0

    while True:
        prev = state
        state, integ = advance(state, integ, ctrl, field)
        steps += 1

        # Screen plane (x = 0): classify at the crossing point.  A blocked
        # trajectory ends at the located crossing; a slit passage keeps the
        # crossing state in the trace (it precedes the step end in time).
        if (prev.x < 0.0) != (state.x < 0.0) or state.x == 0.0:
            hit = locate_plane_crossing(prev, state, 0.0, EVENT_TOL, field)
            if layout.in_material(hit.y):
                if trace:
                    path.append(hit)
                return TrajectoryOutcome(
                    OutcomeKind.BLOCKED_S1, hit.y, hit.t, steps, _freeze(path)
                )
            if trace:
                path.append(hit)

        # Detector plane (x = L).
        if (prev.x < plane_l) != (state.x < plane_l) or state.x == plane_l:
            hit = locate_plane_crossing(prev, state, plane_l, EVENT_TOL, field)
            if trace:
                path.append(hit)
            return TrajectoryOutcome(
                OutcomeKind.HIT_S2, hit.y, hit.t, steps, _freeze(path)
            )

        if trace:
            path.append(state)

        if state.x < -x_escape and state.vx < 0.0:
            return TrajectoryOutcome(
                OutcomeKind.ESCAPED, None, state.t, steps, _freeze(path)
            )
        if state.t > t_max:
            return TrajectoryOutcome(
                OutcomeKind.MAX_TIME_EXCEEDED, None, state.t, steps, _freeze(path)
            )


def _freeze(path):
    return tuple(path) if path is not None else None
