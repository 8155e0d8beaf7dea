"""Flat key = value run configuration with derived defaults.

Precedence: built-in defaults < config file < SLITSIM_* environment
variables < explicit overrides (CLI flags).  Unknown keys are rejected.
Every key has a default except `seed`, which any reproducible run must
state.  Step-control and domain defaults are derived from the physics
values (D, v0, R, l, L) unless given explicitly.

The config hash is a SHA-256 digest of the canonicalized, fully resolved
key = value text; it is embedded in every output file so data can be traced
back to the exact configuration that produced it.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields

from .forcefield import PhysicsParams
from .integrator import StepController
from .trajectory import TrajectoryLimits

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config_text"]

ENV_PREFIX = "SLITSIM_"

_INT_KEYS = {"n_samples", "seed", "coarse_n"}
_BOOL_KEYS = {"mirror"}

# Literal defaults; None means derived from other values.
_DEFAULTS: dict[str, float | int | bool | None] = {
    "kappa": 0.0085,
    "v0": 1.0,
    "D": 10.0,
    "L": 20.0,
    "l": 0.1,
    "R": 0.5,
    "d": 0.1,
    "h0": None,           # 2e-3 * D / v0
    "h_min": None,        # 1e-8 * D / v0
    "shrink_near": None,  # 0.1 * R
    "delta_max": None,    # 0.05 * R
    "safety": 0.9,
    "x_escape": None,     # 3 * D
    "t_max": None,        # 100 * (D + L) / v0
    "y_min": None,        # -(l + 10 R)
    "y_max": None,        # +(l + 10 R)
    "n_samples": 10000,
    "seed": None,         # required, never derived
    "coarse_n": 7200,
    "refine_tol": 1e-6,
    "mirror": True,
}


class ConfigError(ValueError):
    """Malformed, unknown, or missing configuration."""


@dataclass(frozen=True)
class RunConfig:
    kappa: float
    v0: float
    D: float
    L: float
    l: float
    R: float
    d: float
    h0: float
    h_min: float
    shrink_near: float
    delta_max: float
    safety: float
    x_escape: float
    t_max: float
    y_min: float
    y_max: float
    n_samples: int
    seed: int
    coarse_n: int
    refine_tol: float
    mirror: bool

    def physics(self) -> PhysicsParams:
        return PhysicsParams(kappa=self.kappa, v0=self.v0, D=self.D, L=self.L, d=self.d)

    def controller(self) -> StepController:
        return StepController(
            h0=self.h0,
            h_min=self.h_min,
            shrink_near=self.shrink_near,
            delta_max=self.delta_max,
            safety=self.safety,
        ).validate()

    def limits(self) -> TrajectoryLimits:
        return TrajectoryLimits(x_escape=self.x_escape, t_max=self.t_max)

    def binning(self) -> tuple[float, float]:
        return (self.y_min, self.y_max)

    def canonical_text(self) -> str:
        lines = []
        for f in sorted(fld.name for fld in fields(self)):
            v = getattr(self, f)
            if isinstance(v, bool):
                s = "true" if v else "false"
            else:
                s = repr(v)
            lines.append(f"{f} = {s}")
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def _convert(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _BOOL_KEYS:
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse `key = value` lines; '#' starts a comment, blank lines ignored."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    return values


def _env_overrides() -> dict:
    values = {}
    for key in _DEFAULTS:
        raw = os.environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            values[key] = _convert(key, raw)
    return values


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Resolve a full configuration from file, environment, and overrides."""
    values: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values.update(parse_config_text(text, source=path))
    values.update(_env_overrides())
    if overrides:
        for key, v in overrides.items():
            if key not in _DEFAULTS:
                raise ConfigError(f"unknown override key {key!r}")
            values[key] = v

    for key, default in _DEFAULTS.items():
        if key not in values and default is not None:
            values[key] = default

    if "seed" not in values or values["seed"] is None:
        raise ConfigError("seed is required (config file, SLITSIM_SEED, or --seed)")

    # Derived defaults from the resolved physics.
    D, v0, R, l, L = (values[k] for k in ("D", "v0", "R", "l", "L"))
    for name, v in (("D", D), ("v0", v0), ("R", R), ("l", l), ("L", L)):
        if v <= 0:
            raise ConfigError(f"{name} must be positive, got {v}")
    derived = {
        "h0": 2e-3 * D / v0,
        "h_min": 1e-8 * D / v0,
        "shrink_near": 0.1 * R,
        "delta_max": 0.05 * R,
        "x_escape": 3.0 * D,
        "t_max": 100.0 * (D + L) / v0,
        "y_min": -(l + 10.0 * R),
        "y_max": l + 10.0 * R,
    }
    for key, val in derived.items():
        values.setdefault(key, val)

    cfg = RunConfig(**values)
    _sanity_check(cfg)
    return cfg


def _sanity_check(cfg: RunConfig):
    try:
        cfg.physics()
        cfg.controller()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.l <= 0 or cfg.R <= 0:
        raise ConfigError("l and R must be positive")
    if not cfg.y_min < cfg.y_max:
        raise ConfigError("y_min must be below y_max")
    if cfg.x_escape <= cfg.D:
        raise ConfigError("x_escape must exceed D")
    if cfg.t_max <= 0:
        raise ConfigError("t_max must be positive")
    if cfg.n_samples <= 0:
        raise ConfigError("n_samples must be positive")
    if cfg.coarse_n < 360:
        raise ConfigError("coarse_n must be at least 360")
    if cfg.refine_tol <= 0:
        raise ConfigError("refine_tol must be positive")
