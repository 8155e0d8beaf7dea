"""Monte Carlo farming of trajectories into detector histograms.

Angle draws are counter-based: draw i of a run is a pure function of
(seed, i) through a SplitMix64 mix, so the sample stream is identical no
matter how the indices are partitioned across workers.  Worker results are
merged by integer addition, which is exact and order-independent, making
histograms bit-reproducible for a given (seed, config) at any worker count.

Detector hits are binned into cells of one particle diameter.  Hits outside
the binned span are kept in under/overflow tallies rather than dropped.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from bisect import bisect_right
from dataclasses import dataclass, replace

from .calibration import AngleWindows
from .forcefield import Experiment, PhysicsParams, SlitLayout, material_intervals
from .integrator import StepController, StepUnderflowError
from .trajectory import EmissionSpec, OutcomeKind, TrajectoryLimits, simulate

__all__ = [
    "ScreenHistogram",
    "ProbabilityDistribution",
    "AbortBudgetError",
    "unit_uniform",
    "sample_angle",
    "run_experiment",
    "mirror_histogram",
    "normalize",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53

# Fraction of samples allowed to abort (integrator step underflow) before
# the whole run is declared failed.
ABORT_BUDGET = 1e-3


class AbortBudgetError(RuntimeError):
    """Too many trajectories aborted with integrator failures."""


def unit_uniform(seed: int, index: int) -> float:
    """Deterministic uniform draw in [0, 1) keyed by (seed, index).

    SplitMix64: the counter advances by the 64-bit golden ratio and the
    state is scrambled by two xor-multiply rounds.  The top 53 bits form
    the mantissa.  This generator is frozen; changing it changes every
    published histogram.
    """
    z = (seed + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    z = z ^ (z >> 31)
    return (z >> 11) * _INV53


def sample_angle(seed: int, index: int, windows: AngleWindows) -> float:
    """Map draw (seed, index) into the calibrated windows.

    Inverse of the piecewise-linear CDF over window measure: u scales onto
    the cumulative arc length, then lands inside the owning window.
    """
    if windows.total_measure <= 0.0:
        raise ValueError("windows have no measure to sample")
    u = unit_uniform(seed, index)
    return _angle_from_u(u, windows)


def _angle_from_u(u: float, windows: AngleWindows) -> float:
    cum = _cumulative(windows)
    s = u * windows.total_measure
    i = bisect_right(cum, s) - 1
    if i >= len(windows.windows):  # u rounding at the very top
        i = len(windows.windows) - 1
    lo, _ = windows.windows[i]
    return lo + (s - cum[i])


def _cumulative(windows: AngleWindows) -> list[float]:
    cum = [0.0]
    for lo, hi in windows.windows:
        cum.append(cum[-1] + (hi - lo))
    return cum


@dataclass(frozen=True)
class ScreenHistogram:
    """Cell counts on the detector plus trajectory outcome tallies.

    counts covers [y_min, y_max) in cells of size `cell`; n_hit counts all
    detector hits including the n_underflow/n_overflow outside the span,
    so sum(counts) + n_underflow + n_overflow == n_hit.
    """

    experiment: Experiment
    seed: int
    y_min: float
    y_max: float
    cell: float
    counts: tuple[int, ...]
    n_samples: int
    n_hit: int
    n_blocked: int
    n_escaped: int
    n_timeout: int
    n_aborted: int
    n_underflow: int
    n_overflow: int
    window_measure: float

    def __post_init__(self):
        if sum(self.counts) + self.n_underflow + self.n_overflow != self.n_hit:
            raise ValueError("cell counts and overflow tallies must sum to n_hit")
        tally = (self.n_hit + self.n_blocked + self.n_escaped
                 + self.n_timeout + self.n_aborted)
        if tally != self.n_samples:
            raise ValueError("outcome tallies must sum to n_samples")

    @property
    def n_cells(self) -> int:
        return len(self.counts)

    def y_edges(self, k: int) -> tuple[float, float]:
        return self.y_min + k * self.cell, self.y_min + (k + 1) * self.cell

    def y_mid(self, k: int) -> float:
        return self.y_min + (k + 0.5) * self.cell


@dataclass(frozen=True)
class ProbabilityDistribution:
    """Normalized cell probabilities on the detector grid."""

    y_mid: tuple[float, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        if len(self.y_mid) != len(self.p):
            raise ValueError("y_mid and p must be aligned")
        if any(v < 0.0 for v in self.p):
            raise ValueError("probabilities must be non-negative")


def n_cells_for(y_min: float, y_max: float, cell: float) -> int:
    return int(math.ceil((y_max - y_min) / cell))


def _simulate_batch(args):
    """Worker body: simulate indices [start, stop) and bin locally."""
    (start, stop, seed, windows, params, ctrl, limits, layout,
     y_min, y_max, cell, n_cells) = args
    counts = [0] * n_cells
    n_hit = n_blocked = n_escaped = n_timeout = n_aborted = 0
    n_under = n_over = 0
    inv_cell = 1.0 / cell
    for index in range(start, stop):
        alpha = sample_angle(seed, index, windows)
        try:
            out = simulate(EmissionSpec(alpha, params, layout), ctrl, limits)
        except StepUnderflowError:
            n_aborted += 1
            continue
        kind = out.kind
        if kind is OutcomeKind.HIT_S2:
            n_hit += 1
            k = math.floor((out.y_final - y_min) * inv_cell)
            if k < 0:
                n_under += 1
            elif k >= n_cells:
                n_over += 1
            else:
                counts[k] += 1
        elif kind is OutcomeKind.BLOCKED_S1:
            n_blocked += 1
        elif kind is OutcomeKind.ESCAPED:
            n_escaped += 1
        else:
            n_timeout += 1
    return counts, n_hit, n_blocked, n_escaped, n_timeout, n_aborted, n_under, n_over


def run_experiment(
    experiment: Experiment | int,
    params: PhysicsParams,
    ctrl: StepController,
    windows: AngleWindows,
    n_samples: int,
    seed: int,
    binning: tuple[float, float],
    l: float | None = None,
    R: float | None = None,
    layout: SlitLayout | None = None,
    limits: TrajectoryLimits | None = None,
    workers: int = 1,
) -> ScreenHistogram:
    """Farm n_samples trajectories and histogram the detector hits.

    The result is bit-identical for any `workers` value: draw i depends
    only on (seed, i) and batch merging is exact integer addition.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    y_min, y_max = binning
    if not y_min < y_max:
        raise ValueError("binning requires y_min < y_max")
    if layout is None:
        layout = material_intervals(experiment, l, R)
    n_cells = n_cells_for(y_min, y_max, params.d)

    n_batches = max(1, min(workers * 4, n_samples))
    bounds = [n_samples * b // n_batches for b in range(n_batches + 1)]
    jobs = [
        (bounds[b], bounds[b + 1], seed, windows, params, ctrl, limits, layout,
         y_min, y_max, params.d, n_cells)
        for b in range(n_batches)
        if bounds[b] < bounds[b + 1]
    ]

    if workers <= 1:
        results = [_simulate_batch(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_batch, jobs))

    counts = [0] * n_cells
    n_hit = n_blocked = n_escaped = n_timeout = n_aborted = 0
    n_under = n_over = 0
    for c, h, b, e, t, a, u, o in results:
        for k in range(n_cells):
            counts[k] += c[k]
        n_hit += h
        n_blocked += b
        n_escaped += e
        n_timeout += t
        n_aborted += a
        n_under += u
        n_over += o

    if n_aborted > ABORT_BUDGET * n_samples:
        raise AbortBudgetError(
            f"{n_aborted} of {n_samples} trajectories aborted "
            f"(budget {ABORT_BUDGET:.1%})"
        )

    return ScreenHistogram(
        experiment=Experiment(experiment),
        seed=seed,
        y_min=y_min,
        y_max=y_max,
        cell=params.d,
        counts=tuple(counts),
        n_samples=n_samples,
        n_hit=n_hit,
        n_blocked=n_blocked,
        n_escaped=n_escaped,
        n_timeout=n_timeout,
        n_aborted=n_aborted,
        n_underflow=n_under,
        n_overflow=n_over,
        window_measure=windows.total_measure,
    )


def mirror_histogram(hist: ScreenHistogram) -> ScreenHistogram:
    """Experiment-2 histogram as the exact y-reflection of an experiment-1 run.

    Requires a mirror-symmetric grid (y_min == -y_max).  Cell k maps to
    cell n-1-k and the under/overflow tallies swap; every trajectory of the
    source run is reused, so the result is bit-exact by construction.
    """
    if hist.experiment is not Experiment.UPPER_ONLY:
        raise ValueError("mirroring is defined for experiment-1 histograms")
    if hist.y_min != -hist.y_max:
        raise ValueError("mirroring requires a symmetric binning span")
    return replace(
        hist,
        experiment=Experiment.LOWER_ONLY,
        counts=tuple(reversed(hist.counts)),
        n_underflow=hist.n_overflow,
        n_overflow=hist.n_underflow,
    )


def normalize(hist: ScreenHistogram) -> ProbabilityDistribution:
    """Turn counts into probabilities: p_k = counts_k / n_hit."""
    if hist.n_hit <= 0:
        raise ValueError("cannot normalize a histogram with no detector hits")
    return ProbabilityDistribution(
        y_mid=tuple(hist.y_mid(k) for k in range(hist.n_cells)),
        p=tuple(c / hist.n_hit for c in hist.counts),
    )
