"""Calibration pass: find the emission angles that reach the detector.

A coarse uniform grid of angles over [0, 2*pi) is simulated; maximal runs
of detector hits become candidate windows, whose boundaries are then
sharpened by bisection between the neighbouring hit / non-hit grid angles.
Windows are padded outward by the refinement tolerance: sampling a padded
window is safe because misses are simply discarded.

The hit set is treated as circular, so a window straddling alpha = 0 is
found correctly and reported split into its [0, x) and [y, 2*pi) parts.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .forcefield import Experiment, PhysicsParams, material_intervals
from .integrator import StepController
from .trajectory import EmissionSpec, OutcomeKind, TrajectoryLimits, simulate

__all__ = ["AngleWindows", "CalibrationError", "calibrate"]

TWO_PI = 2.0 * math.pi


class CalibrationError(RuntimeError):
    """No emission angle was found to reach the detector."""


@dataclass(frozen=True)
class AngleWindows:
    """Disjoint sorted angle intervals within [0, 2*pi) that lead to hits."""

    experiment: Experiment
    windows: tuple[tuple[float, float], ...]
    total_measure: float

    def __post_init__(self):
        prev_hi = 0.0
        for lo, hi in self.windows:
            if not (0.0 <= lo < hi <= TWO_PI):
                raise ValueError(f"window ({lo}, {hi}) outside [0, 2*pi)")
            if lo < prev_hi:
                raise ValueError("windows must be sorted and disjoint")
            prev_hi = hi
        if self.total_measure <= 0.0:
            raise ValueError("total_measure must be positive")

    @staticmethod
    def from_windows(experiment, windows: Sequence[tuple[float, float]]) -> "AngleWindows":
        ws = tuple(sorted((float(lo), float(hi)) for lo, hi in windows))
        return AngleWindows(
            experiment=Experiment(experiment),
            windows=ws,
            total_measure=sum(hi - lo for lo, hi in ws),
        )


def _grid_chunk(args) -> list[bool]:
    start, stop, dalpha, params, ctrl, limits, layout = args
    out = []
    for j in range(start, stop):
        res = simulate(EmissionSpec(j * dalpha, params, layout), ctrl, limits)
        out.append(res.kind is OutcomeKind.HIT_S2)
    return out


def calibrate(
    experiment: Experiment | int,
    params: PhysicsParams,
    ctrl: StepController,
    coarse_n: int = 7200,
    refine_tol: float = 1e-6,
    l: float | None = None,
    R: float | None = None,
    limits: TrajectoryLimits | None = None,
    layout=None,
    hit_fn: Callable[[float], bool] | None = None,
    workers: int = 1,
) -> AngleWindows:
    """Find the angle windows whose trajectories hit the detector.

    Either pass a prebuilt `layout` or the slit geometry (l, R).  `hit_fn`
    can override the hit predicate (used by tests to calibrate against a
    synthetic classifier); the grid is evaluated in parallel only for the
    default predicate (grid results do not depend on the partitioning).
    """
    if coarse_n < 360:
        raise ValueError("coarse_n must be at least 360")
    if refine_tol <= 0.0:
        raise ValueError("refine_tol must be positive")
    if layout is None:
        layout = material_intervals(experiment, l, R)

    dalpha = TWO_PI / coarse_n
    if hit_fn is None:

        def hit_fn(alpha: float) -> bool:
            out = simulate(EmissionSpec(alpha % TWO_PI, params, layout), ctrl, limits)
            return out.kind is OutcomeKind.HIT_S2

        if workers > 1:
            n_chunks = workers * 4
            bounds = [coarse_n * b // n_chunks for b in range(n_chunks + 1)]
            jobs = [
                (bounds[b], bounds[b + 1], dalpha, params, ctrl, limits, layout)
                for b in range(n_chunks)
                if bounds[b] < bounds[b + 1]
            ]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(_grid_chunk, jobs))
            grid_hit = [hit for chunk in chunks for hit in chunk]
        else:
            grid_hit = [hit_fn(j * dalpha) for j in range(coarse_n)]
    else:
        grid_hit = [hit_fn(j * dalpha) for j in range(coarse_n)]
    n_hits = sum(grid_hit)
    if n_hits == 0:
        raise CalibrationError(
            f"no detector hits on a {coarse_n}-point angle grid for experiment "
            f"{int(Experiment(experiment))}; geometry or coupling likely inconsistent"
        )
    if n_hits == coarse_n:
        raise CalibrationError("every grid angle hits; cannot delimit windows")

    # Rotate so the scan starts at a non-hit angle, making runs linear.
    start = grid_hit.index(False)
    runs = []  # (first_hit_index, last_hit_index) in original indexing
    run_start = None
    for k in range(coarse_n + 1):
        j = (start + k) % coarse_n
        if k < coarse_n and grid_hit[j]:
            if run_start is None:
                run_start = j
            run_end = j
        else:
            if run_start is not None:
                runs.append((run_start, run_end))
                run_start = None

    def refine(lo_a: float, hi_a: float, lo_is_hit: bool) -> float:
        """Bisect the hit/non-hit transition inside (lo_a, hi_a)."""
        while hi_a - lo_a > refine_tol:
            mid = 0.5 * (lo_a + hi_a)
            if hit_fn(mid) == lo_is_hit:
                lo_a = mid
            else:
                hi_a = mid
        return 0.5 * (lo_a + hi_a)

    intervals = []
    for first, last in runs:
        a_first = first * dalpha
        a_last = last * dalpha
        if last < first:  # run wraps through 2*pi; unwrap the end
            a_last += TWO_PI
        lo = refine(a_first - dalpha, a_first, lo_is_hit=False)
        hi = refine(a_last, a_last + dalpha, lo_is_hit=True)
        intervals.append((lo - refine_tol, hi + refine_tol))

    # Normalize into [0, 2*pi): split wrap-around pieces, merge overlaps.
    pieces = []
    for lo, hi in intervals:
        if lo < 0.0:
            lo += TWO_PI
            hi += TWO_PI
        if hi > TWO_PI:
            pieces.append((lo, TWO_PI))
            pieces.append((0.0, hi - TWO_PI))
        else:
            pieces.append((lo, hi))
    pieces.sort()
    merged = []
    for lo, hi in pieces:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))

    return AngleWindows.from_windows(experiment, merged)
