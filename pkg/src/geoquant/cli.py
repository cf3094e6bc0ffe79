"""Command-line entry point: seven workflows, one report format.

Each command reads a YAML config, validates it fully, runs the
computation, and writes a canonical JSON report to stdout or --out.
Exit codes: 0 success (an infeasible integrality lift is still a
successful computation), 2 config or precondition violation, 3 numeric
failure such as a singular frame, an exhausted quadrature budget, or a
diverging trajectory.  Wall time goes to stderr so reports stay
byte-identical across runs.

With --out PATH, auxiliary artifacts land next to the report: flow
writes the trajectory as CSV, and --plot adds an SVG figure for any
command.
"""

from __future__ import annotations

import argparse
import cmath
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import densities, diffcoh, expr, geometry, hamilton, polarization, prequantum, report, simplicial
from .config import ConfigError, SceneConfig
from .densities import DensityError, QuadratureError, SingularFrameError
from .diffcoh import CocycleError
from .geometry import GeometryError, VectorField
from .hamilton import TrajectoryExitsDomain
from .simplicial import SimplicialError


class NumericFailure(Exception):
    pass


NUMERIC_ERRORS = (NumericFailure, QuadratureError, SingularFrameError, TrajectoryExitsDomain)
VALIDATION_ERRORS = (ConfigError, GeometryError, DensityError, SimplicialError, CocycleError, expr.ExprError)


@dataclass
class Outcome:
    payload: dict
    residuals: dict
    tables: dict = field(default_factory=dict)
    figure: object = None


def _require_finite(label: str, *values):
    for value in values:
        array = np.asarray(value, dtype=float)
        if not np.all(np.isfinite(array)):
            raise NumericFailure(f"{label} produced non-finite values")


# --- command handlers ------------------------------------------------------------------


def _run_flow(scene: SceneConfig, seed: int, scale: float) -> Outcome:
    data = scene.data
    symplectic = geometry.canonical_symplectic(data["dimension"], data["extent"])
    chart = symplectic.chart
    hamiltonian = expr.parse(data["hamiltonian"], chart.coords)
    system = hamilton.HamiltonianSystem(symplectic, hamiltonian)
    trajectory = hamilton.integrate_flow(
        system, data["initial"], data["duration"], data["time_step"], data["method"]
    )
    _require_finite("flow", trajectory.states)
    start = trajectory.states[0]
    end = trajectory.states[-1]
    payload = {
        "integrator": trajectory.integrator,
        "duration": data["duration"],
        "time_step": data["time_step"],
        "steps": int(len(trajectory.times) - 1),
        "initial_state": [float(x) for x in start],
        "final_state": [float(x) for x in end],
        "energy_initial": float(trajectory.energy[0]),
        "energy_final": float(trajectory.energy[-1]),
        "return_distance": float(np.linalg.norm(end - start)),
    }
    residuals = {
        "energy_drift": float(trajectory.energy_drift),
        "energy_max_excursion": float(trajectory.energy_max_excursion),
    }
    rows = [
        (float(t),) + tuple(float(x) for x in state)
        for t, state in zip(trajectory.times, trajectory.states)
    ]
    tables = {"csv": report.render_csv(("t",) + chart.coords, rows)}
    figure = lambda: report.trajectory_figure(
        trajectory.times, trajectory.states, chart.coords
    )
    return Outcome(payload, residuals, tables, figure)


def _run_poisson(scene: SceneConfig, seed: int, scale: float) -> Outcome:
    data = scene.data
    symplectic = geometry.canonical_symplectic(data["dimension"], data["extent"])
    chart = symplectic.chart
    functions = [expr.parse(text, chart.coords) for text in data["functions"]]
    rng = np.random.default_rng(seed)
    points = chart.sample(rng, data["samples"], shrink=0.1)
    worst = {"antisymmetry": 0.0, "leibniz": 0.0, "jacobi": 0.0, "field_bracket": 0.0}
    for _ in range(data["triples"]):
        f, g, h = (functions[rng.integers(len(functions))] for _ in range(3))
        anti = hamilton.poisson_bracket(f, g, symplectic) + hamilton.poisson_bracket(
            g, f, symplectic
        )
        leibniz = (
            hamilton.poisson_bracket(f, g * h, symplectic)
            - hamilton.poisson_bracket(f, g, symplectic) * h
            - g * hamilton.poisson_bracket(f, h, symplectic)
        )
        jacobi = (
            hamilton.poisson_bracket(f, hamilton.poisson_bracket(g, h, symplectic), symplectic)
            + hamilton.poisson_bracket(g, hamilton.poisson_bracket(h, f, symplectic), symplectic)
            + hamilton.poisson_bracket(h, hamilton.poisson_bracket(f, g, symplectic), symplectic)
        )
        xi_f = hamilton.hamiltonian_vector_field(
            hamilton.HamiltonianSystem(symplectic, f)
        )
        xi_g = hamilton.hamiltonian_vector_field(
            hamilton.HamiltonianSystem(symplectic, g)
        )
        xi_bracket = hamilton.hamiltonian_vector_field(
            hamilton.HamiltonianSystem(
                symplectic, hamilton.poisson_bracket(f, g, symplectic)
            )
        )
        commutator = hamilton.lie_bracket(xi_f, xi_g)
        for point in points:
            worst["antisymmetry"] = max(worst["antisymmetry"], abs(anti.evaluate(point)))
            worst["leibniz"] = max(worst["leibniz"], abs(leibniz.evaluate(point)))
            worst["jacobi"] = max(worst["jacobi"], abs(jacobi.evaluate(point)))
            defect = np.asarray(xi_bracket.evaluate(point)) - np.asarray(
                commutator.evaluate(point)
            )
            worst["field_bracket"] = max(
                worst["field_bracket"], float(np.max(np.abs(defect)))
            )
    tolerance = data["tolerance"] * scale
    payload = {
        "functions": data["functions"],
        "triples": data["triples"],
        "samples": data["samples"],
        "tolerance": tolerance,
        "pass": all(value <= tolerance for value in worst.values()),
    }
    figure = lambda: report.residual_bar_figure(
        sorted(worst), [worst[k] for k in sorted(worst)], "Poisson algebra residuals"
    )
    return Outcome(payload, dict(worst), figure=figure)


def _run_prequantize(scene: SceneConfig, seed: int, scale: float) -> Outcome:
    data = scene.data
    kappa = 2 * math.pi if data["kappa"] == "2pi" else 1.0
    bundle = prequantum.canonical_prequantum_bundle(1, kappa=kappa)
    chart = bundle.chart
    f = expr.parse(data["observables"][0], chart.coords)
    g = expr.parse(data["observables"][1], chart.coords)
    section_cfg = data["section"]
    section = prequantum.bump_section(
        bundle,
        extent=section_cfg["extent"],
        power=section_cfg["power"],
        re_polynomial=section_cfg["re"],
        im_polynomial=section_cfg["im"],
    )
    rng = np.random.default_rng(seed)
    half = 0.9 * section_cfg["extent"]
    points = rng.uniform(-half, half, size=(data["samples"], 2))
    frames = (
        VectorField(chart, ("1", "0")),
        VectorField(chart, ("0", "1")),
        VectorField(chart, ("1 + q", "p")),
    )
    curvature = 0.0
    for i in range(len(frames)):
        for j in range(i + 1, len(frames)):
            curvature = max(
                curvature,
                prequantum.curvature_residual(
                    bundle, frames[i], frames[j], section, points
                ),
            )
    commutator = prequantum.commutator_residual(bundle, f, g, section, points)
    residuals = {"curvature": curvature, "commutator": commutator}
    payload = {
        "kappa": kappa,
        "observables": data["observables"],
        "samples": data["samples"],
        "tolerance": data["tolerance"] * scale,
    }
    figure = None
    if data["grid"] is not None:
        extent = data["grid"]["extent"]
        nodes = data["grid"]["nodes"]
        grid = prequantum.QuadratureGrid(
            ((-extent, extent), (-extent, extent)), (nodes, nodes)
        )
        residuals["skew_hermiticity"] = prequantum.skew_hermiticity_residual(
            bundle, f, section, section, grid
        )
        norm = prequantum.l2_inner_product(bundle, section, section, grid)
        payload["section_norm_squared"] = float(norm.real)
        magnitude = np.abs(prequantum.section_on_grid(section, grid))
        meshes = grid.meshes()
        figure = lambda: report.section_figure(meshes, magnitude, chart.coords)
    payload["pass"] = all(v <= payload["tolerance"] for v in residuals.values())
    if figure is None:
        figure = lambda: report.residual_bar_figure(
            sorted(residuals),
            [residuals[k] for k in sorted(residuals)],
            "prequantization residuals",
        )
    return Outcome(payload, residuals, figure=figure)


def _run_holonomy(scene: SceneConfig, seed: int, scale: float) -> Outcome:
    data = scene.data
    bundle = polarization.circle_bundle()
    radius_squared = data["radius_squared"]
    radius = math.sqrt(radius_squared)
    steps = data["steps"]
    tolerance = data["tolerance"] * scale
    holonomy = polarization.leaf_holonomy(bundle, radius, steps)
    closed_form = cmath.exp(-2j * math.pi * radius_squared)
    _require_finite("holonomy", abs(holonomy))
    exists = polarization.polarized_section_exists(bundle, radius, tolerance)
    strip = polarization.strip_polarized_section(bundle)
    seam = polarization.seam_mismatch(bundle, strip, radius)
    payload = {
        "radius_squared": radius_squared,
        "steps": steps,
        "holonomy": holonomy,
        "closed_form": closed_form,
        "polarized_exists": exists,
        "seam_mismatch": seam,
        "tolerance": tolerance,
    }
    residuals = {
        "holonomy_defect": abs(holonomy - closed_form),
        "unit_modulus_defect": abs(abs(holonomy) - 1.0),
    }

    def make_figure():
        angular = bundle.potential.coefficients[1]
        count = 256
        h = 2 * math.pi / count
        phases = [1.0 + 0.0j]
        t = 0.0
        for _ in range(count):
            phi = phases[-1]
            k1 = -1j * angular.evaluate((radius, t)) * phi
            k2 = -1j * angular.evaluate((radius, t + h / 2)) * (phi + h / 2 * k1)
            k3 = -1j * angular.evaluate((radius, t + h / 2)) * (phi + h / 2 * k2)
            k4 = -1j * angular.evaluate((radius, t + h)) * (phi + h * k3)
            phases.append(phi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
            t += h
        angles = [h * i for i in range(count + 1)]
        return report.holonomy_figure(angles, phases)

    return Outcome(payload, residuals, figure=make_figure)


def _run_polarized_check(scene: SceneConfig, seed: int, scale: float) -> Outcome:
    data = scene.data
    dimension = data["dimension"]
    vertical = polarization.vertical_polarization(dimension)
    bundle = prequantum.canonical_prequantum_bundle(dimension)
    chart = vertical.chart
    position_profile = " + ".join(
        f"cos({name})" for name in chart.coords[:dimension]
    )
    section = prequantum.Section(bundle, position_profile, "0")
    rng = np.random.default_rng(seed)
    points = chart.sample(rng, data["samples"], shrink=0.1)
    table = []
    worst_membership = 0.0
    worst_operator = 0.0
    for text in data["functions"]:
        f = expr.parse(text, chart.coords)
        membership = polarization.preserves_polarization_residual(vertical, f, points)
        operator = polarization.operator_polarized_residual(
            bundle, vertical, f, section, points
        )
        table.append(
            {"function": text, "membership": membership, "operator": operator}
        )
        worst_membership = max(worst_membership, membership)
        worst_operator = max(worst_operator, operator)
    worst_closure = 0.0
    for i, left in enumerate(data["functions"]):
        for right in data["functions"][i + 1 :]:
            worst_closure = max(
                worst_closure,
                polarization.poisson_closure_residual(
                    vertical,
                    expr.parse(left, chart.coords),
                    expr.parse(right, chart.coords),
                    points,
                ),
            )
    tolerance = data["tolerance"] * scale
    payload = {
        "functions": table,
        "tolerance": tolerance,
        "pass": max(worst_membership, worst_operator, worst_closure) <= tolerance,
    }
    residuals = {
        "max_membership": worst_membership,
        "max_operator": worst_operator,
        "max_closure": worst_closure,
    }
    figure = lambda: report.residual_bar_figure(
        [row["function"] for row in table],
        [row["membership"] for row in table],
        "polarization membership residuals",
    )
    return Outcome(payload, residuals, figure=figure)


def _build_atlas(data):
    kind = data["atlas"]
    if kind == "circle":
        return densities.circle_atlas()
    if kind == "scaled-circle":
        return densities.scaled_circle_atlas(data["scale"])
    if kind == "annulus":
        return densities.annulus_atlas(data["r_inner"], data["r_outer"])
    coords = tuple(data["coords"])
    box = tuple((float(lo), float(hi)) for lo, hi in data["box"])
    return densities.single_chart_atlas("chart", coords, box)


def _run_integrate_density(scene: SceneConfig, seed: int, scale: float) -> Outcome:
    data = scene.data
    atlas = _build_atlas(data)
    density = densities.ManifoldDensity(atlas, 1.0, data["coefficients"])
    integral = densities.integrate_one_density(density, data["tolerance"])
    _require_finite("integration", abs(integral))
    partition = atlas.partition_residual(seed=seed + 1)
    compatibility = densities.compatibility_residual(density, seed=seed + 2)
    payload = {
        "atlas": atlas.name,
        "integral": integral,
        "tolerance": data["tolerance"],
    }
    residuals = {
        "partition_of_unity": partition,
        "chart_compatibility": compatibility,
    }

    def make_figure():
        curves = {}
        for chart in atlas.charts:
            low, high = chart.box[0]
            xs = [low + (high - low) * i / 240 for i in range(241)]
            if len(chart.box) == 1:
                points = [(x,) for x in xs]
            else:
                mids = [0.5 * (lo + hi) for lo, hi in chart.box[1:]]
                points = [(x, *mids) for x in xs]
            ws = [chart.weight(point) for point in points]
            curves[chart.name] = (xs, ws)
        return report.window_figure(curves)

    return Outcome(payload, residuals, figure=make_figure)


def _build_complex(data):
    if data["kind"] == "circle":
        return simplicial.circle_complex(data["vertices"])
    if data["kind"] == "torus":
        return simplicial.torus_complex(data["rows"], data["columns"])
    return simplicial.tetra_sphere()


def _period_entry(record: diffcoh.PeriodRecord) -> dict:
    return {
        "cycle": [int(c) for c in record.cycle],
        "period": record.period,
        "nearest": record.nearest,
        "defect": record.defect,
    }


def _run_cocycle(scene: SceneConfig, seed: int, scale: float) -> Outcome:
    data = scene.data
    complex = _build_complex(data)
    count = complex.simplex_count(2)
    if data["omega"] is not None:
        if len(data["omega"]) != count:
            raise ConfigError(
                f"'omega' needs {count} entries for {complex.name}, got {len(data['omega'])}"
            )
        values = tuple(data["omega"])
    elif count == 0:
        raise ConfigError(
            f"{complex.name} has no triangles; give 'omega' explicitly (an empty list)"
        )
    else:
        values = tuple(Fraction(data["uniform_total"]) / count for _ in range(count))
    omega = simplicial.Cochain(complex, 2, values)
    result = diffcoh.integral_lift(omega, data["tolerance"])

    rng = np.random.default_rng(seed)
    probe = diffcoh.integer_triple(
        [int(x) for x in rng.integers(-3, 4, size=complex.vertex_count)], complex
    )
    square = diffcoh.d_tilde(diffcoh.d_tilde(probe))
    closed = None
    lift_defect = Fraction(0)
    cocycle_payload = None
    if result.feasible:
        triple = result.cocycle.cochain
        if complex.top_dimension >= 2:
            closed = diffcoh.d_tilde(triple).is_zero()
        defect = triple.omega - triple.c - simplicial.coboundary(triple.h)
        lift_defect = max((abs(v) for v in defect.values), default=Fraction(0))
        cocycle_payload = {
            "c": list(triple.c.values),
            "h": list(triple.h.values),
            "omega": list(triple.omega.values),
        }
    payload = {
        "complex": complex.name,
        "triangles": count,
        "feasible": result.feasible,
        "infeasible": not result.feasible,
        "differential_square_zero": square.is_zero(),
        "cocycle_closed": closed,
        "periods": [_period_entry(record) for record in result.periods],
        "cocycle": cocycle_payload,
        "certificate": _period_entry(result.certificate) if result.certificate else None,
        "tolerance": data["tolerance"],
    }
    residuals = {"lift_defect": float(lift_defect)}

    def make_figure():
        if result.feasible and count:
            return report.cochain_figure(
                result.cocycle.c.values, f"integral component on {complex.name}"
            )
        defects = [record.defect for record in result.periods] or [0]
        return report.cochain_figure(defects, "period defects")

    return Outcome(payload, residuals, figure=make_figure)


_HANDLERS = {
    "flow": _run_flow,
    "poisson-check": _run_poisson,
    "prequantize": _run_prequantize,
    "holonomy": _run_holonomy,
    "polarized-check": _run_polarized_check,
    "integrate-density": _run_integrate_density,
    "cocycle": _run_cocycle,
}


# --- plumbing ---------------------------------------------------------------------------


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="geoquant",
        description="Symplectic flows, prequantum operators, polarizations, "
        "density integration, and discrete cocycle lifts from one config file.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in config_mod.COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", required=True, help="YAML scene description")
        sub.add_argument("--out", help="write the JSON report here instead of stdout")
        sub.add_argument(
            "--plot",
            action="store_true",
            help="also write an SVG figure next to --out",
        )
        sub.add_argument("--seed", type=int, help="override the config seed")
        sub.add_argument(
            "--tolerance-scale",
            type=float,
            default=1.0,
            help="multiply every pass/fail tolerance by this factor",
        )
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = _parse_args(argv)
    started = time.perf_counter()
    try:
        raw = config_mod.load_config(args.config)
        scene = config_mod.validate_scene(args.command, raw)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if args.tolerance_scale <= 0:
            raise ConfigError("--tolerance-scale must be positive")
        if args.plot and not args.out:
            raise ConfigError("--plot needs --out to know where the SVG goes")
    except ConfigError as exc:
        print(f"geoquant: config error: {exc}", file=sys.stderr)
        return 2

    seed = args.seed if args.seed is not None else scene.seed
    try:
        outcome = _HANDLERS[scene.command](scene, seed, args.tolerance_scale)
    except NUMERIC_ERRORS as exc:
        print(f"geoquant: numeric failure: {exc}", file=sys.stderr)
        return 3
    except VALIDATION_ERRORS as exc:
        print(f"geoquant: invalid scene: {exc}", file=sys.stderr)
        return 2

    body = report.build_report(
        scene.command, seed, scene.raw, outcome.payload, outcome.residuals
    )
    text = report.render_report(body)
    if args.out:
        out_path = Path(args.out)
        report.write_text(out_path, text)
        for suffix, table in outcome.tables.items():
            report.write_text(out_path.with_suffix(f".{suffix}"), table)
        if args.plot and outcome.figure is not None:
            report.save_figure(outcome.figure(), out_path.with_suffix(".svg"))
    else:
        sys.stdout.write(text)
    elapsed = time.perf_counter() - started
    print(f"geoquant: {scene.command} finished in {elapsed:.3f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
