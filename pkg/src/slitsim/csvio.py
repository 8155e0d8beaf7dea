"""Readers and writers for the run artifacts.

All files start with one comment line `# config_hash=<h> seed=<s>` followed
by a CSV header row.  Floats are serialized with repr(), which round-trips
exactly, so re-reading a file reproduces the in-memory values bit for bit
and re-running with the same (config, seed) reproduces identical bytes.

Schemas:
  windows:      experiment,alpha_lo,alpha_hi
  histogram:    cell_index,y_lo,y_hi,count,probability
  interference: cell_index,y_mid,p1,p2,p12,mixture,cos_theta,defined
                (cos_theta empty and defined=0 on undefined cells)
  trace:        t,x,y,vx,vy
  manifest:     flat key=value lines (not a CSV)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analysis import InterferenceProfile
from .calibration import AngleWindows
from .forcefield import Experiment
from .montecarlo import ProbabilityDistribution, ScreenHistogram

__all__ = [
    "SchemaError",
    "HistogramData",
    "write_windows",
    "read_windows",
    "write_histogram",
    "read_histogram",
    "write_interference",
    "read_interference",
    "write_trace",
    "write_manifest",
]

WINDOWS_HEADER = "experiment,alpha_lo,alpha_hi"
HIST_HEADER = "cell_index,y_lo,y_hi,count,probability"
INTERF_HEADER = "cell_index,y_mid,p1,p2,p12,mixture,cos_theta,defined"
TRACE_HEADER = "t,x,y,vx,vy"


class SchemaError(ValueError):
    """File does not match the declared schema."""

    def __init__(self, path: str, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def _comment_line(config_hash: str, seed: int) -> str:
    return f"# config_hash={config_hash} seed={seed}\n"


def _fmt(x: float) -> str:
    return repr(float(x))


def _data_lines(path: str):
    """Yield (lineno, line) for non-comment lines."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if line.startswith("#"):
                continue
            yield lineno, line


def _parse_float(path, lineno, field, value) -> float:
    try:
        return float(value)
    except ValueError:
        raise SchemaError(path, lineno, f"bad {field}: {value!r}") from None


# -- windows ---------------------------------------------------------------

def write_windows(path: str, windows: AngleWindows, config_hash: str, seed: int):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment_line(config_hash, seed))
        fh.write(WINDOWS_HEADER + "\n")
        for lo, hi in windows.windows:
            fh.write(f"{int(windows.experiment)},{_fmt(lo)},{_fmt(hi)}\n")


def read_windows(path: str) -> AngleWindows:
    rows = []
    experiment = None
    header_seen = False
    for lineno, line in _data_lines(path):
        if not header_seen:
            if line != WINDOWS_HEADER:
                raise SchemaError(path, lineno, f"expected header {WINDOWS_HEADER!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise SchemaError(path, lineno, "expected 3 fields")
        exp = int(_parse_float(path, lineno, "experiment", parts[0]))
        if experiment is None:
            experiment = exp
        elif exp != experiment:
            raise SchemaError(path, lineno, "mixed experiments in one windows file")
        rows.append((_parse_float(path, lineno, "alpha_lo", parts[1]),
                     _parse_float(path, lineno, "alpha_hi", parts[2])))
    if not rows:
        raise SchemaError(path, 0, "no windows")
    return AngleWindows.from_windows(Experiment(experiment), rows)


# -- histograms ------------------------------------------------------------

@dataclass(frozen=True)
class HistogramData:
    """Histogram CSV contents: the grid, counts, and derived probabilities."""

    y_lo: tuple[float, ...]
    y_hi: tuple[float, ...]
    counts: tuple[int, ...]
    p: tuple[float, ...]

    @property
    def n_hit(self) -> int:
        return sum(self.counts)

    def distribution(self) -> ProbabilityDistribution:
        return ProbabilityDistribution(
            y_mid=tuple((lo + hi) / 2.0 for lo, hi in zip(self.y_lo, self.y_hi)),
            p=self.p,
        )


def write_histogram(path: str, hist: ScreenHistogram, config_hash: str, seed: int):
    n_hit = hist.n_hit
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment_line(config_hash, seed))
        fh.write(HIST_HEADER + "\n")
        for k, count in enumerate(hist.counts):
            lo, hi = hist.y_edges(k)
            p = count / n_hit if n_hit > 0 else 0.0
            fh.write(f"{k},{_fmt(lo)},{_fmt(hi)},{count},{_fmt(p)}\n")


def read_histogram(path: str) -> HistogramData:
    y_lo, y_hi, counts, p = [], [], [], []
    header_seen = False
    next_index = 0
    for lineno, line in _data_lines(path):
        if not header_seen:
            if line != HIST_HEADER:
                raise SchemaError(path, lineno, f"expected header {HIST_HEADER!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise SchemaError(path, lineno, "expected 5 fields")
        if parts[0] != str(next_index):
            raise SchemaError(path, lineno, f"expected cell_index {next_index}")
        next_index += 1
        y_lo.append(_parse_float(path, lineno, "y_lo", parts[1]))
        y_hi.append(_parse_float(path, lineno, "y_hi", parts[2]))
        try:
            counts.append(int(parts[3]))
        except ValueError:
            raise SchemaError(path, lineno, f"bad count: {parts[3]!r}") from None
        p.append(_parse_float(path, lineno, "probability", parts[4]))
    if not header_seen:
        raise SchemaError(path, 0, "empty file")
    if not counts:
        raise SchemaError(path, 0, "no data rows")
    return HistogramData(tuple(y_lo), tuple(y_hi), tuple(counts), tuple(p))


# -- interference ----------------------------------------------------------

def write_interference(path: str, profile: InterferenceProfile, config_hash: str, seed: int):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment_line(config_hash, seed))
        fh.write(INTERF_HEADER + "\n")
        for k in range(len(profile.y_mid)):
            ct = "" if not profile.defined[k] else _fmt(profile.cos_theta[k])
            fh.write(
                f"{k},{_fmt(profile.y_mid[k])},{_fmt(profile.p1[k])},"
                f"{_fmt(profile.p2[k])},{_fmt(profile.p12[k])},"
                f"{_fmt(profile.mixture[k])},{ct},{int(profile.defined[k])}\n"
            )


def read_interference(path: str) -> InterferenceProfile:
    y_mid, p1, p2, p12, mixture, cos_theta, defined = [], [], [], [], [], [], []
    header_seen = False
    next_index = 0
    for lineno, line in _data_lines(path):
        if not header_seen:
            if line != INTERF_HEADER:
                raise SchemaError(path, lineno, f"expected header {INTERF_HEADER!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise SchemaError(path, lineno, "expected 8 fields")
        if parts[0] != str(next_index):
            raise SchemaError(path, lineno, f"expected cell_index {next_index}")
        next_index += 1
        y_mid.append(_parse_float(path, lineno, "y_mid", parts[1]))
        p1.append(_parse_float(path, lineno, "p1", parts[2]))
        p2.append(_parse_float(path, lineno, "p2", parts[3]))
        p12.append(_parse_float(path, lineno, "p12", parts[4]))
        mixture.append(_parse_float(path, lineno, "mixture", parts[5]))
        if parts[7] == "1":
            defined.append(True)
            cos_theta.append(_parse_float(path, lineno, "cos_theta", parts[6]))
        elif parts[7] == "0":
            defined.append(False)
            if parts[6] != "":
                raise SchemaError(path, lineno, "undefined cell must have empty cos_theta")
            cos_theta.append(math.nan)
        else:
            raise SchemaError(path, lineno, f"bad defined flag: {parts[7]!r}")
    if not y_mid:
        raise SchemaError(path, 0, "no data rows")
    return InterferenceProfile(
        y_mid=tuple(y_mid), p1=tuple(p1), p2=tuple(p2), p12=tuple(p12),
        mixture=tuple(mixture), cos_theta=tuple(cos_theta), defined=tuple(defined),
    )


# -- trace and manifest ------------------------------------------------------

def write_trace(path: str, states, config_hash: str, seed: int):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment_line(config_hash, seed))
        fh.write(TRACE_HEADER + "\n")
        for s in states:
            fh.write(f"{_fmt(s.t)},{_fmt(s.x)},{_fmt(s.y)},{_fmt(s.vx)},{_fmt(s.vy)}\n")


def write_manifest(path: str, entries: dict):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key in sorted(entries):
            v = entries[key]
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            fh.write(f"{key}={v}\n")
