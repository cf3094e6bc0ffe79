"""Machine-readable reports and deterministic artifacts.

Reports are JSON with sorted keys, two-space indent, and a trailing
newline; rationals render as "p/q" strings and complex numbers as
two-element [re, im] lists, so a fixed (config, seed) pair produces
byte-identical output.  Timing never enters the report body; the CLI
prints it to stderr instead.

SVG figures pin the matplotlib hash salt and drop the date metadata so
repeated runs emit identical bytes.
"""

from __future__ import annotations

import json
import pathlib
from fractions import Fraction

SCHEMA_VERSION = 1
SVG_HASH_SALT = "geoquant"


def jsonable(value):
    """Recursively convert report values into canonical JSON-ready data."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, complex):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return float(value)
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            if not isinstance(key, str):
                raise TypeError(f"report keys must be strings, got {key!r}")
            out[key] = jsonable(item)
        return out
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if hasattr(value, "item"):
        return jsonable(value.item())
    raise TypeError(f"cannot render {type(value).__name__} in a report")


def build_report(command: str, seed: int, config_echo: dict, payload: dict, residuals: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "config": jsonable(config_echo),
        "payload": jsonable(payload),
        "residuals": jsonable(residuals),
    }


def render_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_csv(header, rows) -> str:
    """Delimited table with repr-rendered floats; '\n' line endings."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(repr(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_text(path, text: str):
    pathlib.Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = SVG_HASH_SALT
    import matplotlib.pyplot as plt

    return plt


def save_figure(figure, path):
    pathlib.Path(path).parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, format="svg", metadata={"Date": None})
    import matplotlib.pyplot as plt

    plt.close(figure)


def trajectory_figure(times, states, coord_names):
    """Phase portrait for one degree of freedom, coordinate traces otherwise."""
    plt = _pyplot()
    figure, axis = plt.subplots(figsize=(5.0, 4.0))
    if states.shape[1] == 2:
        axis.plot(states[:, 0], states[:, 1], linewidth=1.0)
        axis.set_xlabel(coord_names[0])
        axis.set_ylabel(coord_names[1])
        axis.set_aspect("equal", adjustable="datalim")
    else:
        for index, name in enumerate(coord_names):
            axis.plot(times, states[:, index], linewidth=1.0, label=name)
        axis.legend(loc="upper right", fontsize=8)
        axis.set_xlabel("t")
    axis.set_title("trajectory")
    figure.tight_layout()
    return figure


def residual_bar_figure(labels, values, title):
    plt = _pyplot()
    figure, axis = plt.subplots(figsize=(5.0, 4.0))
    positions = range(len(labels))
    floor = 1e-17
    axis.bar(positions, [max(abs(v), floor) for v in values], color="#33658a")
    axis.set_yscale("log")
    axis.set_xticks(list(positions))
    axis.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    axis.set_ylabel("residual")
    axis.set_title(title)
    figure.tight_layout()
    return figure


def holonomy_figure(angles, phases):
    plt = _pyplot()
    figure, axis = plt.subplots(figsize=(4.5, 4.5))
    axis.plot([p.real for p in phases], [p.imag for p in phases], linewidth=1.0)
    axis.scatter([phases[0].real], [phases[0].imag], marker="o", s=25, zorder=3)
    axis.scatter([phases[-1].real], [phases[-1].imag], marker="x", s=40, zorder=3)
    circle = plt.Circle((0.0, 0.0), 1.0, fill=False, linestyle=":", linewidth=0.8)
    axis.add_patch(circle)
    axis.set_xlim(-1.3, 1.3)
    axis.set_ylim(-1.3, 1.3)
    axis.set_aspect("equal")
    axis.set_title("parallel transport around the leaf")
    figure.tight_layout()
    return figure


def section_figure(meshes, magnitude, coord_names):
    plt = _pyplot()
    figure, axis = plt.subplots(figsize=(5.0, 4.0))
    mesh = axis.pcolormesh(meshes[0], meshes[1], magnitude, shading="auto")
    figure.colorbar(mesh, ax=axis, label="|s|")
    axis.set_xlabel(coord_names[0])
    axis.set_ylabel(coord_names[1])
    axis.set_title("section magnitude")
    figure.tight_layout()
    return figure


def window_figure(samples_by_chart):
    plt = _pyplot()
    figure, axis = plt.subplots(figsize=(5.5, 3.5))
    for name, (xs, ws) in sorted(samples_by_chart.items()):
        axis.plot(xs, ws, linewidth=1.2, label=name)
    axis.set_ylim(-0.05, 1.1)
    axis.set_xlabel("global parameter")
    axis.set_ylabel("window weight")
    axis.legend(loc="lower center", fontsize=8)
    axis.set_title("partition of unity")
    figure.tight_layout()
    return figure


def cochain_figure(values, title):
    plt = _pyplot()
    figure, axis = plt.subplots(figsize=(5.5, 3.5))
    floats = [float(v) for v in values]
    axis.bar(range(len(floats)), floats, color="#86bbd8")
    axis.set_xlabel("triangle index")
    axis.set_ylabel("coefficient")
    axis.set_title(title)
    figure.tight_layout()
    return figure
