"""Cascaded power-amplifier simulation and gain/power optimization."""

import json

from ._core import (
    ConfigError,
    OutputError,
    UndefinedSaturation,
    aclr,
    cascade_forward,
    draw_noise,
    equivalent_pa,
    estimate_psd,
    make_excitation,
    nmse,
    scenario2_gain,
    x_max,
)
from . import _core

__all__ = [
    "ConfigError",
    "OutputError",
    "UndefinedSaturation",
    "aclr",
    "cascade_forward",
    "default_config",
    "draw_noise",
    "equivalent_pa",
    "estimate_psd",
    "make_excitation",
    "nmse",
    "optimize",
    "scenario2_gain",
    "simulate",
    "sweep",
    "x_max",
]

MODES = ("power", "equal-gains", "unequal-gains", "joint-equal", "joint-unequal")


def default_config():
    """Experiment defaults as a dict; alpha is a Python complex."""
    cfg = json.loads(_core.default_config())
    cfg["alpha"] = complex(cfg["alpha"]["re"], cfg["alpha"]["im"])
    return cfg


def _encode(config, **overrides):
    cfg = dict(config or {})
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if isinstance(cfg.get("alpha"), complex):
        cfg["alpha"] = {"re": cfg["alpha"].real, "im": cfg["alpha"].imag}
    return json.dumps(cfg)


def simulate(scenario, K, config=None, out_dir=None, signals=False):
    """Run one initial scenario (1 or 2) through a K-stage cascade."""
    if scenario not in (1, 2):
        raise ValueError("scenario must be 1 or 2")
    return _core._simulate(_encode(config, K_range=[K]), scenario, out_dir, signals)


def optimize(mode, K, config=None, out_dir=None, signals=False):
    """Optimize p0 and/or gains; `mode` uses the CLI names in MODES."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    return _core._optimize(_encode(config, K_range=[K], modes=[mode]), out_dir, signals)


def sweep(config=None, out_dir=None, signals=False):
    """Scenarios plus every requested mode over K_range."""
    return _core._sweep(_encode(config), out_dir, signals)
