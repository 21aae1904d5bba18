"""Multilevel and continuous-level Monte Carlo for elliptic PDEs with jump coefficients."""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    DomainError,
    NumericalError,
    Mesh,
    UniformSource,
    bisect_refine,
    clmc_weights,
    continuous_levels,
    doerfler_mark,
    exp_cdf,
    inv_exp_cdf,
    make_box,
    make_cross,
    optimal_samples,
    radical_inverse,
    solve_pde,
    structured_unit_square,
    variance_estimate,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "NumericalError",
    "Mesh",
    "UniformSource",
    "bisect_refine",
    "clmc_weights",
    "continuous_levels",
    "doerfler_mark",
    "exp_cdf",
    "inv_exp_cdf",
    "make_box",
    "make_cross",
    "optimal_samples",
    "radical_inverse",
    "solve_pde",
    "structured_unit_square",
    "variance_estimate",
    "effective_config",
    "config_hash",
    "run",
]


def effective_config(text: str, full_scale: bool = False) -> dict:
    """Parses a config document and returns it with every default filled in."""
    return _json.loads(_core.effective_config(text, full_scale))


def config_hash(text: str, full_scale: bool = False) -> str:
    return _core.config_hash(text, full_scale)


def run(command: str, config_text: str, out: str, full_scale: bool = False) -> dict:
    """Runs one CLI subcommand in-process and returns its summary."""
    return _json.loads(_core.run(command, config_text, str(out), full_scale))
