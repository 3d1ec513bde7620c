"""Randomized dual upper bounds for discrete-time optimal stopping."""

import json
import os

from . import _core
from ._core import ConfigError, NumericalError, bermudan_value

__all__ = [
    "ConfigError",
    "NumericalError",
    "bermudan_value",
    "minimize",
    "preset",
    "profile",
    "run_command",
    "simulate",
    "value",
    "verify",
]


def _encode(config, base_dir):
    if isinstance(config, str) and not config.lstrip().startswith("{"):
        config = {"preset": config}
    if isinstance(config, (str, bytes)):
        text = config
    else:
        text = json.dumps(config)
    return text, os.fspath(base_dir)


def preset(name):
    """Full parameter set of a named preset (stylized, pa1 or pa2)."""
    return json.loads(_core.preset(name))


def value(config, base_dir="."):
    """Y*_0 of the configured model: a dict with y0, error and method."""
    return _core.value(*_encode(config, base_dir))


def minimize(config, base_dir="."):
    """One LP minimization per randomizer; returns a list of table rows."""
    return _core.minimize(*_encode(config, base_dir))


def profile(config, base_dir="."):
    """Objective mean and deviation over the configured alpha grid, per randomizer."""
    return _core.profile(*_encode(config, base_dir))


def verify(config=None, base_dir="."):
    """Optimality characterization sweep; returns the parsed report."""
    text, base = _encode(config if config is not None else {}, base_dir)
    return json.loads(_core.verify(text, base))


def simulate(config, n_paths, seed, base_dir="."):
    """Rewards Z_0..Z_J as an (n_paths, J+1) array, plus path weights for trees (else None)."""
    text, base = _encode(config, base_dir)
    return _core.simulate(text, n_paths, seed, base)


def run_command(command, config, base_dir="."):
    """Run a CLI command in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_command(command, *_encode(config, base_dir))
