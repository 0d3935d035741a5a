"""Python front end to the coupled Abreu and Rochet-Chone solvers.

Configs are plain dicts with the keys of the command-line front end; any
subset may be given and the rest take their defaults. Fields come back as
(ny, nx) arrays indexed [j, i] with NaN outside the domain.
"""

from ._core import ConfigError, commands, default_config, read_field, resolve_config
from . import _core

__all__ = [
    "ConfigError",
    "commands",
    "default_config",
    "read_field",
    "resolve_config",
    "run",
    "solve_abreu",
    "solve_rc",
]


def solve_abreu(config=None, **overrides):
    """Solves the second boundary value problem; returns u, w, x, y, h, report."""
    return _core.solve_abreu(resolve_config("solve-abreu", {**(config or {}), **overrides}))


def solve_rc(config=None, **overrides):
    """Solves the penalised Rochet-Chone approximation at one eps."""
    return _core.solve_rc(resolve_config("solve-rc", {**(config or {}), **overrides}))


def run(command, config=None, **overrides):
    """Runs a command as the CLI would, writing into config["out"]; returns the exit code."""
    return _core.run_command(command, resolve_config(command, {**(config or {}), **overrides}))
