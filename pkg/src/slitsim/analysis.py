"""Interference extraction: compare the both-slits run with the classical mix.

The classical rule predicts P12 = (P1 + P2) / 2.  The reported interference
term is

    cos(theta) = (2 P12 - (P1 + P2)) / sqrt(P1 P2)

wherever P1 P2 > 0; elsewhere it is undefined and reported as such (never
clamped: the classical model does not guarantee |cos theta| <= 1, and cells
beyond that bound are counted in the summary instead).  With this scaling
the exact reconstruction is P12 = mixture + sqrt(P1 P2) * cos(theta) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .montecarlo import ProbabilityDistribution

__all__ = [
    "GridMismatchError",
    "InterferenceProfile",
    "DeviationSummary",
    "classical_mixture",
    "interference_cos_theta",
    "deviation_stats",
]


class GridMismatchError(ValueError):
    """Inputs binned on different detector grids."""

    def __init__(self, message: str, diff: list[str] | None = None):
        super().__init__(message)
        self.diff = diff or []


def _check_grids(*dists: ProbabilityDistribution):
    ref = dists[0].y_mid
    for d in dists[1:]:
        if len(d.y_mid) != len(ref):
            raise GridMismatchError(
                f"cell count mismatch: {len(ref)} vs {len(d.y_mid)}",
                [f"cells: {len(ref)} != {len(d.y_mid)}"],
            )
        diff = [
            f"cell {k}: y_mid {a!r} != {b!r}"
            for k, (a, b) in enumerate(zip(ref, d.y_mid))
            if a != b
        ]
        if diff:
            raise GridMismatchError("cell centers differ", diff[:20])


@dataclass(frozen=True)
class InterferenceProfile:
    """Per-cell interference term with its defined/undefined mask."""

    y_mid: tuple[float, ...]
    p1: tuple[float, ...]
    p2: tuple[float, ...]
    p12: tuple[float, ...]
    mixture: tuple[float, ...]
    cos_theta: tuple[float, ...]  # nan where undefined
    defined: tuple[bool, ...]


@dataclass(frozen=True)
class DeviationSummary:
    """How far the both-slits run sits from the classical mixture."""

    max_abs_deviation: float
    max_deviation_cell: int
    total_variation: float
    n_cells_beyond_5se: int
    n_defined: int
    n_cos_out_of_unit: int   # defined cells with |cos theta| > 1
    n_slit_exclusive: int    # p1*p2 == 0 but p12 > 0: no cos theta can represent them


def classical_mixture(
    p1: ProbabilityDistribution, p2: ProbabilityDistribution
) -> ProbabilityDistribution:
    """Cell-wise classical combination (p1 + p2) / 2."""
    _check_grids(p1, p2)
    return ProbabilityDistribution(
        y_mid=p1.y_mid,
        p=tuple((a + b) / 2.0 for a, b in zip(p1.p, p2.p)),
    )


def interference_cos_theta(
    p1: ProbabilityDistribution,
    p2: ProbabilityDistribution,
    p12: ProbabilityDistribution,
) -> InterferenceProfile:
    """Extract cos(theta) per cell; undefined cells carry nan and defined=False."""
    _check_grids(p1, p2, p12)
    mixture = classical_mixture(p1, p2)
    cos_theta = []
    defined = []
    for a, b, c in zip(p1.p, p2.p, p12.p):
        if a > 0.0 and b > 0.0:
            # sqrt(a)*sqrt(b) cannot underflow to zero, unlike sqrt(a*b).
            cos_theta.append((2.0 * c - (a + b)) / (math.sqrt(a) * math.sqrt(b)))
            defined.append(True)
        else:
            cos_theta.append(math.nan)
            defined.append(False)
    return InterferenceProfile(
        y_mid=p1.y_mid,
        p1=p1.p,
        p2=p2.p,
        p12=p12.p,
        mixture=mixture.p,
        cos_theta=tuple(cos_theta),
        defined=tuple(defined),
    )


def deviation_stats(
    p12: ProbabilityDistribution,
    mixture: ProbabilityDistribution,
    n12: int,
    n1: int,
    n2: int,
    profile: InterferenceProfile,
) -> DeviationSummary:
    """Significance of the departure from the classical mixture.

    The per-cell standard error combines the binomial errors of the three
    estimates: var = p12(1-p12)/n12 + (p1(1-p1)/n1 + p2(1-p2)/n2) / 4.
    The profile supplies the per-slit probabilities for the error terms and
    the defined mask for the bookkeeping counters.
    """
    _check_grids(p12, mixture)
    if min(n12, n1, n2) <= 0:
        raise ValueError("sample counts must be positive")

    max_dev = 0.0
    max_cell = 0
    tv = 0.0
    beyond = 0
    out_of_unit = 0
    exclusive = 0
    n_defined = 0
    for k, (c, m) in enumerate(zip(p12.p, mixture.p)):
        dev = abs(c - m)
        tv += dev
        if dev > max_dev:
            max_dev = dev
            max_cell = k
        a = profile.p1[k]
        b = profile.p2[k]
        var = c * (1.0 - c) / n12 + (a * (1.0 - a) / n1 + b * (1.0 - b) / n2) / 4.0
        if dev > 5.0 * math.sqrt(var):
            beyond += 1
        if profile.defined[k]:
            n_defined += 1
            if abs(profile.cos_theta[k]) > 1.0:
                out_of_unit += 1
        elif c > 0.0:
            exclusive += 1
    return DeviationSummary(
        max_abs_deviation=max_dev,
        max_deviation_cell=max_cell,
        total_variation=0.5 * tv,
        n_cells_beyond_5se=beyond,
        n_defined=n_defined,
        n_cos_out_of_unit=out_of_unit,
        n_slit_exclusive=exclusive,
    )
