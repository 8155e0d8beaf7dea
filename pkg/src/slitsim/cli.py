"""Command-line driver: calibrate -> run -> analyze, plus trajectory traces.

Exit codes:
  0  success
  1  configuration or usage error
  2  calibration failure (no hitting angles)
  3  analysis grid mismatch
  4  abort budget exceeded (too many integrator failures)

All randomness flows from the single config seed; experiment e samples its
angles with effective seed (seed + e), and experiment 2 is by default the
exact mirror of experiment 1's trajectories (no extra sampling).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

from . import __version__
from .analysis import (
    GridMismatchError,
    classical_mixture,
    deviation_stats,
    interference_cos_theta,
)
from .calibration import CalibrationError, calibrate
from .config import ConfigError, RunConfig, load_config
from .csvio import (
    SchemaError,
    read_histogram,
    read_windows,
    write_histogram,
    write_interference,
    write_manifest,
    write_trace,
    write_windows,
)
from .forcefield import material_intervals
from .montecarlo import AbortBudgetError, mirror_histogram, run_experiment
from .trajectory import EmissionSpec, simulate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CALIBRATION = 2
EXIT_GRID = 3
EXIT_ABORTS = 4


def _windows_name(experiment: int) -> str:
    return f"windows_{experiment}.csv"


def _hist_name(experiment: int) -> str:
    return f"hist_{experiment}.csv"


def _load_cfg(args) -> RunConfig:
    overrides = {}
    if getattr(args, "samples", None) is not None:
        overrides["n_samples"] = args.samples
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return load_config(args.config, overrides)


def cmd_calibrate(args) -> int:
    try:
        cfg = _load_cfg(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        windows = calibrate(
            args.experiment,
            cfg.physics(),
            cfg.controller(),
            coarse_n=cfg.coarse_n,
            refine_tol=cfg.refine_tol,
            l=cfg.l,
            R=cfg.R,
            limits=cfg.limits(),
            workers=args.workers,
        )
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    write_windows(args.out, windows, cfg.config_hash, cfg.seed)
    print(f"experiment {args.experiment}: {len(windows.windows)} window(s), "
          f"total_measure={windows.total_measure!r} rad -> {args.out}")
    return EXIT_OK


def _windows_for(cfg: RunConfig, experiment: int, args, out_dir: str):
    """Load windows from --windows, or calibrate inline with --calibrate."""
    if args.windows:
        path = args.windows
        if os.path.isdir(path):
            path = os.path.join(path, _windows_name(experiment))
        return read_windows(path)
    if not args.calibrate:
        raise ConfigError(
            "no windows available: pass --windows PATH or --calibrate"
        )
    windows = calibrate(
        experiment,
        cfg.physics(),
        cfg.controller(),
        coarse_n=cfg.coarse_n,
        refine_tol=cfg.refine_tol,
        l=cfg.l,
        R=cfg.R,
        limits=cfg.limits(),
        workers=args.workers,
    )
    write_windows(os.path.join(out_dir, _windows_name(experiment)),
                  windows, cfg.config_hash, cfg.seed)
    return windows


def cmd_run(args) -> int:
    try:
        cfg = _load_cfg(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    experiments = [1, 2, 3] if args.experiment == "all" else [int(args.experiment)]
    os.makedirs(args.out, exist_ok=True)
    manifest: dict = {"config_hash": cfg.config_hash, "version": __version__,
                      "workers": args.workers}
    for key, val in sorted(
        (f.name, getattr(cfg, f.name)) for f in cfg.__dataclass_fields__.values()
    ):
        manifest[f"config.{key}"] = val

    t_start = time.perf_counter()
    hists = {}
    try:
        for experiment in experiments:
            t0 = time.perf_counter()
            if experiment == 2 and cfg.mirror and 1 in hists:
                hist = mirror_histogram(hists[1])
                manifest["exp2.mirrored_from"] = 1
            else:
                windows = _windows_for(cfg, experiment, args, args.out)
                hist = run_experiment(
                    experiment,
                    cfg.physics(),
                    cfg.controller(),
                    windows,
                    cfg.n_samples,
                    cfg.seed + experiment,
                    cfg.binning(),
                    l=cfg.l,
                    R=cfg.R,
                    limits=cfg.limits(),
                    workers=args.workers,
                )
                manifest[f"exp{experiment}.window_measure"] = windows.total_measure
                manifest[f"exp{experiment}.window_count"] = len(windows.windows)
            hists[experiment] = hist
            write_histogram(os.path.join(args.out, _hist_name(experiment)),
                            hist, cfg.config_hash, cfg.seed)
            for name in ("n_samples", "n_hit", "n_blocked", "n_escaped",
                         "n_timeout", "n_aborted", "n_underflow", "n_overflow"):
                manifest[f"exp{experiment}.{name}"] = getattr(hist, name)
            manifest[f"exp{experiment}.seed"] = hist.seed
            manifest[f"exp{experiment}.wall_s"] = round(time.perf_counter() - t0, 3)
            print(f"experiment {experiment}: {hist.n_hit}/{hist.n_samples} hits "
                  f"-> {_hist_name(experiment)}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemaError as exc:
        print(f"windows file error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except AbortBudgetError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_ABORTS

    manifest["wall_s"] = round(time.perf_counter() - t_start, 3)
    write_manifest(os.path.join(args.out, "manifest.txt"), manifest)
    print(f"manifest -> {os.path.join(args.out, 'manifest.txt')}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        d1 = read_histogram(args.p1)
        d2 = read_histogram(args.p2)
        d12 = read_histogram(args.p12)
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    p1, p2, p12 = d1.distribution(), d2.distribution(), d12.distribution()
    try:
        mixture = classical_mixture(p1, p2)
        profile = interference_cos_theta(p1, p2, p12)
        summary = deviation_stats(p12, mixture, d12.n_hit, d1.n_hit, d2.n_hit, profile)
    except GridMismatchError as exc:
        print(f"grid mismatch: {exc}", file=sys.stderr)
        for line in exc.diff:
            print(f"  {line}", file=sys.stderr)
        return EXIT_GRID

    config_hash, seed = _carry_over_header(args.p12)
    write_interference(args.out, profile, config_hash, seed)

    summary_path = os.path.splitext(args.out)[0] + ".summary.txt"
    lines = [
        f"n_cells={len(profile.y_mid)}",
        f"n_defined={summary.n_defined}",
        f"max_abs_deviation={summary.max_abs_deviation!r}",
        f"max_deviation_cell={summary.max_deviation_cell}",
        f"total_variation={summary.total_variation!r}",
        f"cells_beyond_5se={summary.n_cells_beyond_5se}",
        f"cos_theta_out_of_unit_cells={summary.n_cos_out_of_unit}",
        f"slit_exclusive_cells={summary.n_slit_exclusive}",
    ]
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"interference -> {args.out}\nsummary -> {summary_path}")
    return EXIT_OK


def _carry_over_header(path: str) -> tuple[str, int]:
    """Propagate config_hash and seed from an input histogram header."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            first = fh.readline().strip()
        if first.startswith("#"):
            fields = dict(
                part.split("=", 1) for part in first[1:].split() if "=" in part
            )
            return fields.get("config_hash", "unknown"), int(fields.get("seed", 0))
    except (OSError, ValueError):
        pass
    return "unknown", 0


def cmd_trace(args) -> int:
    try:
        cfg = _load_cfg(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    layout = material_intervals(args.experiment, cfg.l, cfg.R)
    alpha = args.alpha % (2.0 * math.pi)
    outcome = simulate(
        EmissionSpec(alpha, cfg.physics(), layout),
        cfg.controller(),
        cfg.limits(),
        trace=True,
    )
    write_trace(args.out, outcome.path, cfg.config_hash, cfg.seed)
    print(f"alpha={alpha!r}: {outcome.kind.value} after {outcome.steps} steps "
          f"(t={outcome.t_final!r}, y_final={outcome.y_final!r}) -> {args.out}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 1 for those."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="slitsim",
        description="Monte Carlo two-slit scattering of charged particles "
                    "on a charged screen",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seedable=True):
        p.add_argument("--config", help="path to key = value config file")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="worker processes (default: all cores)")
        if seedable:
            p.add_argument("--seed", type=int, help="override config seed")

    p = sub.add_parser("calibrate", help="find hitting angle windows")
    add_common(p)
    p.add_argument("--experiment", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--out", required=True, help="windows CSV path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", help="run the Monte Carlo experiment(s)")
    add_common(p)
    p.add_argument("--experiment", choices=("1", "2", "3", "all"), required=True)
    p.add_argument("--windows", help="windows CSV (or directory of windows_<e>.csv)")
    p.add_argument("--calibrate", action="store_true",
                   help="calibrate inline instead of reading windows files")
    p.add_argument("--samples", type=int, help="override config n_samples")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="extract the interference term")
    p.add_argument("--p1", required=True, help="experiment-1 histogram CSV")
    p.add_argument("--p2", required=True, help="experiment-2 histogram CSV")
    p.add_argument("--p12", required=True, help="experiment-3 histogram CSV")
    p.add_argument("--out", required=True, help="interference CSV path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("trace", help="dump one trajectory's path")
    add_common(p)
    p.add_argument("--experiment", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--alpha", type=float, required=True,
                   help="emission angle in radians")
    p.add_argument("--out", required=True, help="trace CSV path")
    p.set_defaults(func=cmd_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
