"""Declarative scene configs for the command-line workflows.

Configs are YAML mappings; every command has a fixed schema, unknown keys
are rejected by name, and embedded expressions are parsed up front so a
typo fails validation instead of a compute loop.  Numbers destined for
exact arithmetic (the cocycle command) are read decimally, so `0.5` in a
config means exactly one half.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import yaml

from . import expr

COMMANDS = (
    "flow",
    "poisson-check",
    "prequantize",
    "holonomy",
    "polarized-check",
    "integrate-density",
    "cocycle",
)

KAPPA_CHOICES = ("2pi", "1")
ATLAS_CHOICES = ("circle", "scaled-circle", "annulus", "single-chart")
COMPLEX_CHOICES = ("circle", "torus", "tetra-sphere")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class SceneConfig:
    command: str
    seed: int
    data: dict
    raw: dict


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    return raw


def validate_scene(command: str, raw: dict) -> SceneConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    work = dict(raw)
    seed = _int(work, "seed", default=0, low=0, high=2**31 - 1)
    data = _VALIDATORS[command](work)
    _no_leftovers(work, command)
    return SceneConfig(command, seed, data, raw)


# --- field readers ---------------------------------------------------------------------


def _no_leftovers(work: dict, where: str):
    if work:
        names = ", ".join(sorted(map(repr, work)))
        raise ConfigError(f"unknown key(s) for {where}: {names}")


def _string(work, key, default=None, required=False):
    if key not in work:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    value = work.pop(key)
    if not isinstance(value, str) or not value.strip():
        raise ConfigError(f"{key!r} must be a non-empty string")
    return value


def _number(work, key, default=None, required=False, positive=False):
    if key not in work:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    value = work.pop(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key!r} must be a number")
    value = float(value)
    if positive and value <= 0:
        raise ConfigError(f"{key!r} must be positive")
    return value


def _int(work, key, default=None, required=False, low=None, high=None):
    if key not in work:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    value = work.pop(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key!r} must be an integer")
    if low is not None and value < low:
        raise ConfigError(f"{key!r} must be at least {low}")
    if high is not None and value > high:
        raise ConfigError(f"{key!r} must be at most {high}")
    return value


def _choice(work, key, choices, default=None, required=False):
    value = _string(work, key, default=default, required=required)
    if value is not None and value not in choices:
        raise ConfigError(f"{key!r} must be one of {choices}, got {value!r}")
    return value


def _number_list(work, key, required=False, default=None):
    if key not in work:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    value = work.pop(key)
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key!r} must be a non-empty list")
    out = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{key!r} entries must be numbers")
        out.append(float(item))
    return out


def _string_list(work, key, required=False, minimum=1):
    if key not in work:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return None
    value = work.pop(key)
    if not isinstance(value, list) or len(value) < minimum:
        raise ConfigError(f"{key!r} must be a list of at least {minimum} entries")
    for item in value:
        if not isinstance(item, str) or not item.strip():
            raise ConfigError(f"{key!r} entries must be non-empty strings")
    return list(value)


def _mapping(work, key, required=False):
    if key not in work:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return None
    value = work.pop(key)
    if not isinstance(value, dict):
        raise ConfigError(f"{key!r} must be a mapping")
    return dict(value)


def _fraction(value, where):
    try:
        if isinstance(value, float):
            return Fraction(str(value))
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"{where} must be a rational number, got {value!r}") from exc


def _parse_expressions(texts, coords, where):
    parsed = []
    for text in texts:
        try:
            parsed.append(expr.parse(text, coords))
        except expr.ExprError as exc:
            raise ConfigError(f"{where}: cannot parse {text!r}: {exc}") from exc
    return parsed


def _phase_coords(dimension: int):
    if dimension == 1:
        return ("q", "p")
    qs = tuple(f"q{i + 1}" for i in range(dimension))
    ps = tuple(f"p{i + 1}" for i in range(dimension))
    return qs + ps


# --- per-command schemas ---------------------------------------------------------------


def _validate_flow(work):
    dimension = _int(work, "dimension", default=1, low=1, high=4)
    extent = _number(work, "extent", default=5.0, positive=True)
    hamiltonian = _string(work, "hamiltonian", required=True)
    coords = _phase_coords(dimension)
    _parse_expressions([hamiltonian], coords, "hamiltonian")
    initial = _number_list(work, "initial", required=True)
    if len(initial) != 2 * dimension:
        raise ConfigError(
            f"'initial' needs {2 * dimension} components for dimension {dimension}"
        )
    duration = _number(work, "duration", required=True, positive=True)
    time_step = _number(work, "time_step", required=True, positive=True)
    if time_step > duration:
        raise ConfigError("'time_step' exceeds 'duration'")
    method = _choice(work, "method", ("auto", "leapfrog", "rk4"), default="auto")
    return {
        "dimension": dimension,
        "extent": extent,
        "hamiltonian": hamiltonian,
        "initial": initial,
        "duration": duration,
        "time_step": time_step,
        "method": method,
    }


def _validate_poisson(work):
    dimension = _int(work, "dimension", default=1, low=1, high=4)
    extent = _number(work, "extent", default=5.0, positive=True)
    functions = _string_list(work, "functions", required=True, minimum=3)
    _parse_expressions(functions, _phase_coords(dimension), "functions")
    triples = _int(work, "triples", default=20, low=1, high=500)
    samples = _int(work, "samples", default=100, low=1, high=10000)
    tolerance = _number(work, "tolerance", default=1e-8, positive=True)
    return {
        "dimension": dimension,
        "extent": extent,
        "functions": functions,
        "triples": triples,
        "samples": samples,
        "tolerance": tolerance,
    }


def _validate_prequantize(work):
    kappa = _choice(work, "kappa", KAPPA_CHOICES, default="2pi")
    observables = _string_list(work, "observables", required=True, minimum=2)
    if len(observables) != 2:
        raise ConfigError("'observables' must name exactly two functions")
    _parse_expressions(observables, ("q", "p"), "observables")
    section = _mapping(work, "section") or {}
    support_extent = _number(section, "extent", default=2.0, positive=True)
    power = _int(section, "power", default=3, low=1, high=12)
    re_polynomial = _string(section, "re", default="1")
    im_polynomial = _string(section, "im", default="0")
    _parse_expressions([re_polynomial, im_polynomial], ("q", "p"), "section")
    _no_leftovers(section, "section")
    grid = _mapping(work, "grid")
    grid_cfg = None
    if grid is not None:
        grid_extent = _number(grid, "extent", default=support_extent, positive=True)
        nodes = _int(grid, "nodes", default=201, low=3, high=2001)
        if nodes % 2 == 0:
            raise ConfigError("'grid.nodes' must be odd for the Simpson rule")
        if grid_extent < support_extent:
            raise ConfigError("'grid.extent' must cover the section support")
        _no_leftovers(grid, "grid")
        grid_cfg = {"extent": grid_extent, "nodes": nodes}
    samples = _int(work, "samples", default=60, low=1, high=2000)
    tolerance = _number(work, "tolerance", default=1e-7, positive=True)
    return {
        "kappa": kappa,
        "observables": observables,
        "section": {
            "extent": support_extent,
            "power": power,
            "re": re_polynomial,
            "im": im_polynomial,
        },
        "grid": grid_cfg,
        "samples": samples,
        "tolerance": tolerance,
    }


def _validate_holonomy(work):
    radius_squared = _number(work, "radius_squared", required=True, positive=True)
    steps = _int(work, "steps", default=4096, low=16, high=10**7)
    tolerance = _number(work, "tolerance", default=1e-8, positive=True)
    return {
        "radius_squared": radius_squared,
        "steps": steps,
        "tolerance": tolerance,
    }


def _validate_polarized(work):
    dimension = _int(work, "dimension", default=1, low=1, high=4)
    functions = _string_list(work, "functions", required=True, minimum=1)
    _parse_expressions(functions, _phase_coords(dimension), "functions")
    samples = _int(work, "samples", default=60, low=1, high=2000)
    tolerance = _number(work, "tolerance", default=1e-7, positive=True)
    return {
        "dimension": dimension,
        "functions": functions,
        "samples": samples,
        "tolerance": tolerance,
    }


def _validate_integrate_density(work):
    atlas = _choice(work, "atlas", ATLAS_CHOICES, required=True)
    scale = _number(work, "scale", default=2.0, positive=True)
    r_inner = _number(work, "r_inner", default=1.0, positive=True)
    r_outer = _number(work, "r_outer", default=2.0, positive=True)
    if r_inner >= r_outer:
        raise ConfigError("'r_inner' must be smaller than 'r_outer'")
    coords = _string_list(work, "coords") or ["x"]
    box = work.pop("box", None)
    if box is None:
        box = [[-3.0, 3.0]] * len(coords)
    if not isinstance(box, list) or len(box) != len(coords):
        raise ConfigError("'box' must list one [low, high] pair per coordinate")
    normalized_box = []
    for pair in box:
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in pair)
            or not pair[0] < pair[1]
        ):
            raise ConfigError("'box' entries must be increasing [low, high] pairs")
        normalized_box.append([float(pair[0]), float(pair[1])])
    coefficients = _mapping(work, "coefficients", required=True)
    for name, text in coefficients.items():
        if not isinstance(name, str) or not isinstance(text, str):
            raise ConfigError("'coefficients' must map chart names to expressions")
    tolerance = _number(work, "tolerance", default=1e-8, positive=True)
    return {
        "atlas": atlas,
        "scale": scale,
        "r_inner": r_inner,
        "r_outer": r_outer,
        "coords": coords,
        "box": normalized_box,
        "coefficients": coefficients,
        "tolerance": tolerance,
    }


def _validate_cocycle(work):
    block = _mapping(work, "complex", required=True)
    kind = _choice(block, "kind", COMPLEX_CHOICES, required=True)
    vertices = _int(block, "vertices", default=6, low=3, high=64)
    rows = _int(block, "rows", default=4, low=3, high=12)
    columns = _int(block, "columns", default=4, low=3, high=12)
    _no_leftovers(block, "complex")
    if "omega" in work and "uniform_total" in work:
        raise ConfigError("give either 'omega' or 'uniform_total', not both")
    omega = None
    if "omega" in work:
        value = work.pop("omega")
        if not isinstance(value, list):
            raise ConfigError("'omega' must be a list (empty on triangle-less complexes)")
        omega = [_fraction(item, "'omega' entry") for item in value]
    uniform_total = None
    if "uniform_total" in work:
        uniform_total = _fraction(work.pop("uniform_total"), "'uniform_total'")
    if omega is None and uniform_total is None:
        raise ConfigError("cocycle needs 'omega' values or a 'uniform_total'")
    tolerance = _fraction(work.pop("tolerance", Fraction(1, 10**9)), "'tolerance'")
    if tolerance <= 0:
        raise ConfigError("'tolerance' must be positive")
    return {
        "kind": kind,
        "vertices": vertices,
        "rows": rows,
        "columns": columns,
        "omega": omega,
        "uniform_total": uniform_total,
        "tolerance": tolerance,
    }


_VALIDATORS = {
    "flow": _validate_flow,
    "poisson-check": _validate_poisson,
    "prequantize": _validate_prequantize,
    "holonomy": _validate_holonomy,
    "polarized-check": _validate_polarized,
    "integrate-density": _validate_integrate_density,
    "cocycle": _validate_cocycle,
}
