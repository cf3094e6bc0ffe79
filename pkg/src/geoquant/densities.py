"""Densities of complex order and their integration over charted 1- and
2-manifolds.

A density of order alpha on an n-dimensional vector space assigns a number
to every basis and rescales by |det A|^alpha under change of basis.  Orders
add under pointwise products, conjugation conjugates the order, and linear
pullback multiplies by |det T|^alpha, so order-one densities are the
objects with a basis-independent integral.

Global densities are described relative to an atlas: per-chart coefficient
functions tied together by |Jacobian|^alpha factors on overlaps.  Each
chart carries a window (a quintic smootherstep bump per axis); the windows
form a partition of unity, and the integral of an order-one density is the
sum of windowed chart integrals.  Quadrature is composite Simpson applied
piecewise between window breakpoints, with panel doubling until the value
is stable, so the non-smooth points of the windows never sit inside a
panel.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .expr import Expression

FRAME_TOLERANCE = 1e-12
STABILITY_TOLERANCE = 1e-8
NODE_BUDGET = 2**14


class DensityError(Exception):
    pass


class SingularFrameError(DensityError):
    pass


class QuadratureError(DensityError):
    pass


# --- pointwise densities -------------------------------------------------------------


@dataclass(frozen=True)
class VectorDensity:
    """Order-alpha density on R^n, stored as its value on the standard basis."""

    dim: int
    order: complex
    value: complex

    def evaluate(self, frame) -> complex:
        """Value on the basis whose vectors are the columns of `frame`."""
        matrix = np.asarray(frame, dtype=float)
        if matrix.shape != (self.dim, self.dim):
            raise DensityError(f"frame must be {self.dim}x{self.dim}")
        det = float(np.linalg.det(matrix))
        if abs(det) <= FRAME_TOLERANCE:
            raise SingularFrameError("frame is not a basis")
        return self.value * abs(det) ** self.order


def density_product(a: VectorDensity, b: VectorDensity) -> VectorDensity:
    if a.dim != b.dim:
        raise DensityError("densities on different dimensions")
    return VectorDensity(a.dim, a.order + b.order, a.value * b.value)


def density_conjugate(a: VectorDensity) -> VectorDensity:
    return VectorDensity(a.dim, complex(a.order).conjugate(), complex(a.value).conjugate())


def density_pullback(a: VectorDensity, transform) -> VectorDensity:
    """(T* tau)(v) = tau(T v); invertible T only."""
    matrix = np.asarray(transform, dtype=float)
    det = float(np.linalg.det(matrix))
    if abs(det) <= FRAME_TOLERANCE:
        raise SingularFrameError("pullback along a singular map")
    return VectorDensity(a.dim, a.order, a.value * abs(det) ** a.order)


# --- windows -------------------------------------------------------------------------


def _smootherstep(t: float) -> float:
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


@dataclass(frozen=True)
class Window:
    """Plateau bump: 0, quintic rise on [a, b], 1 on [b, c], quintic fall
    on [c, d], 0.  `breaks=None` is the constant-one window."""

    breaks: tuple | None

    def __post_init__(self):
        if self.breaks is not None:
            a, b, c, d = (float(v) for v in self.breaks)
            if not (a < b <= c < d):
                raise DensityError(f"window breaks must increase: {self.breaks}")
            object.__setattr__(self, "breaks", (a, b, c, d))

    @staticmethod
    def flat() -> "Window":
        return Window(None)

    def evaluate(self, u: float) -> float:
        if self.breaks is None:
            return 1.0
        a, b, c, d = self.breaks
        if u <= a or u >= d:
            return 0.0
        if u < b:
            return _smootherstep((u - a) / (b - a))
        if u <= c:
            return 1.0
        return 1.0 - _smootherstep((u - c) / (d - c))

    def interior_breakpoints(self, lo: float, hi: float):
        if self.breaks is None:
            return []
        return sorted(v for v in self.breaks if lo < v < hi)


# --- atlases -------------------------------------------------------------------------


@dataclass(frozen=True)
class AtlasChart:
    name: str
    coords: tuple
    box: tuple
    windows: tuple

    def __post_init__(self):
        coords = tuple(self.coords)
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if not (len(coords) == len(box) == len(self.windows)):
            raise DensityError("chart coords, box and windows must align")
        for lo, hi in box:
            if not lo < hi:
                raise DensityError(f"empty chart box ({lo}, {hi})")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "windows", tuple(self.windows))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def weight(self, point) -> float:
        total = 1.0
        for w, u in zip(self.windows, point):
            total *= w.evaluate(float(u))
        return total

    def contains(self, point) -> bool:
        return all(lo <= u <= hi for u, (lo, hi) in zip(point, self.box))


def _expression_det(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = None
    for j in range(n):
        minor = [[row[k] for k in range(n) if k != j] for row in rows[1:]]
        term = rows[0][j] * _expression_det(minor)
        if j % 2 == 1:
            term = expr.constant(-1.0) * term
        total = term if total is None else total + term
    return total


@dataclass(frozen=True)
class Transition:
    """One overlap piece: where `region` of the source chart lands in the
    target chart, as coordinate expressions."""

    source: str
    target: str
    region: tuple
    mapping: tuple

    def __post_init__(self):
        region = tuple((float(lo), float(hi)) for lo, hi in self.region)
        object.__setattr__(self, "region", region)

    def covers(self, point) -> bool:
        return all(lo <= u <= hi for u, (lo, hi) in zip(point, self.region))

    def apply(self, point):
        return tuple(m.evaluate(point) for m in self.mapping)

    def jacobian_determinant(self, coords) -> Expression:
        rows = [[m.differentiate(name) for name in coords] for m in self.mapping]
        return _expression_det(rows)


@dataclass(frozen=True)
class Atlas:
    name: str
    charts: tuple
    transitions: tuple

    def __post_init__(self):
        names = [c.name for c in self.charts]
        if len(set(names)) != len(names):
            raise DensityError("chart names must be unique")
        dims = {c.dim for c in self.charts}
        if len(dims) != 1:
            raise DensityError("charts of mixed dimension")
        for t in self.transitions:
            if t.source not in names or t.target not in names:
                raise DensityError(f"transition references unknown chart: {t.source} -> {t.target}")
        object.__setattr__(self, "charts", tuple(self.charts))
        object.__setattr__(self, "transitions", tuple(self.transitions))

    @property
    def dim(self) -> int:
        return self.charts[0].dim

    def chart(self, name: str) -> AtlasChart:
        for c in self.charts:
            if c.name == name:
                return c
        raise DensityError(f"no chart named {name!r}")

    def transitions_from(self, name: str):
        return [t for t in self.transitions if t.source == name]

    def partition_residual(self, seed: int = 6, samples: int = 200) -> float:
        """max |sum of window weights - 1| over random points of each chart."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for chart in self.charts:
            outgoing = self.transitions_from(chart.name)
            lows = [lo for lo, _ in chart.box]
            highs = [hi for _, hi in chart.box]
            for _ in range(samples):
                point = tuple(rng.uniform(lows, highs))
                total = chart.weight(point)
                for t in outgoing:
                    if t.covers(point):
                        total += self.chart(t.target).weight(t.apply(point))
                worst = max(worst, abs(total - 1.0))
        return worst


# --- global densities ----------------------------------------------------------------


@dataclass(frozen=True)
class ManifoldDensity:
    """Per-chart real coefficient c_i with tau = c_i(x) |dx|^order; on an
    overlap the coefficients satisfy c_i(x) = c_j(F(x)) |det dF_x|^order."""

    atlas: Atlas
    order: complex
    coefficients: dict = field(compare=False)

    def __post_init__(self):
        coeffs = {}
        for chart in self.atlas.charts:
            if chart.name not in self.coefficients:
                raise DensityError(f"missing coefficient for chart {chart.name!r}")
            coeffs[chart.name] = expr.as_field(self.coefficients[chart.name], chart.coords)
        object.__setattr__(self, "coefficients", coeffs)

    def coefficient(self, name: str):
        return self.coefficients[name]


def compatibility_residual(density: ManifoldDensity, seed: int = 11, samples: int = 60) -> float:
    """max |c_i(x) - c_j(F(x)) |det dF_x|^alpha| over transition pieces."""
    rng = np.random.default_rng(seed)
    atlas = density.atlas
    alpha = density.order
    worst = 0.0
    for t in atlas.transitions:
        src = atlas.chart(t.source)
        c_src = density.coefficient(t.source)
        c_tgt = density.coefficient(t.target)
        jac = t.jacobian_determinant(src.coords)
        lows = [lo for lo, _ in t.region]
        highs = [hi for _, hi in t.region]
        for _ in range(samples):
            point = tuple(rng.uniform(lows, highs))
            factor = abs(jac.evaluate(point)) ** alpha
            mismatch = c_src.evaluate(point) - c_tgt.evaluate(t.apply(point)) * factor
            worst = max(worst, abs(mismatch))
    return worst


def manifold_density_product(a: ManifoldDensity, b: ManifoldDensity) -> ManifoldDensity:
    if a.atlas is not b.atlas:
        raise DensityError("densities over different atlases")
    coeffs = {
        c.name: a.coefficient(c.name) * b.coefficient(c.name) for c in a.atlas.charts
    }
    return ManifoldDensity(a.atlas, a.order + b.order, coeffs)


def split_signed_density(density: ManifoldDensity):
    """tau = tau_plus - tau_minus with nonnegative coefficients; real order
    and coefficients only, since the split is done pointwise by sign."""
    if complex(density.order).imag != 0.0:
        raise DensityError("signed split needs a real order")

    def clipped(name, sign):
        base = density.coefficient(name)
        coords = density.atlas.chart(name).coords
        return expr.NumericField(
            lambda x, b=base, s=sign: max(s * b.evaluate(x), 0.0), coords
        )

    plus = {c.name: clipped(c.name, 1.0) for c in density.atlas.charts}
    minus = {c.name: clipped(c.name, -1.0) for c in density.atlas.charts}
    return (
        ManifoldDensity(density.atlas, density.order, plus),
        ManifoldDensity(density.atlas, density.order, minus),
    )


# --- integration ---------------------------------------------------------------------


def _simpson_cell(fn, cell, nodes):
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(cell, nodes)]
    weights = []
    for (lo, hi), n in zip(cell, nodes):
        h = (hi - lo) / (n - 1)
        w = np.full(n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        weights.append(w * (h / 3.0))
    total_w = weights[0]
    for w in weights[1:]:
        total_w = np.multiply.outer(total_w, w)
    meshes = np.meshgrid(*axes, indexing="ij")
    values = np.empty(meshes[0].shape)
    for index in np.ndindex(values.shape):
        values[index] = fn([m[index] for m in meshes])
    return float(np.sum(values * total_w))


def _stable_cell_integral(fn, cell, tolerance):
    nodes = [9] * len(cell)
    previous = _simpson_cell(fn, cell, nodes)
    while True:
        nodes = [2 * n - 1 for n in nodes]
        if math.prod(nodes) > NODE_BUDGET + 1:
            raise QuadratureError(
                f"cell {cell} not stable to {tolerance:g} within {NODE_BUDGET} nodes"
            )
        current = _simpson_cell(fn, cell, nodes)
        if abs(current - previous) < tolerance:
            return current
        previous = current


def integrate_one_density(density: ManifoldDensity, tolerance: float = STABILITY_TOLERANCE) -> float:
    """Integral of an order-one density: windowed Simpson per chart, split
    at window breakpoints, panels doubled until each cell is stable."""
    if complex(density.order) != 1.0 + 0.0j:
        raise DensityError(f"only order-one densities integrate, got order {density.order}")
    total = 0.0
    for chart in density.atlas.charts:
        coeff = density.coefficient(chart.name)

        def integrand(point, c=coeff, ch=chart):
            return ch.weight(point) * c.evaluate(point)

        axis_cuts = []
        for (lo, hi), window in zip(chart.box, chart.windows):
            cuts = [lo] + window.interior_breakpoints(lo, hi) + [hi]
            axis_cuts.append(list(itertools.pairwise(cuts)))
        cells = list(itertools.product(*axis_cuts))
        cell_tolerance = tolerance / len(cells)
        for cell in cells:
            total += _stable_cell_integral(integrand, cell, cell_tolerance)
    return total


# --- stock atlases -------------------------------------------------------------------

HALF_OVERLAP = 0.4


def circle_atlas() -> Atlas:
    """The circle of circumference 2*pi as two overlapping arcs."""
    h = HALF_OVERLAP
    pi = math.pi
    lower = AtlasChart(
        "lower", ("u",), ((-h, pi + h),), (Window((-h, h, pi - h, pi + h)),)
    )
    upper = AtlasChart(
        "upper",
        ("u",),
        ((pi - h, 2 * pi + h),),
        (Window((pi - h, pi + h, 2 * pi - h, 2 * pi + h)),),
    )
    u = expr.parse("u", ("u",))
    shift_up = expr.parse(f"u + {2 * pi}", ("u",))
    shift_down = expr.parse(f"u - {2 * pi}", ("u",))
    transitions = (
        Transition("lower", "upper", ((pi - h, pi + h),), (u,)),
        Transition("lower", "upper", ((-h, h),), (shift_up,)),
        Transition("upper", "lower", ((pi - h, pi + h),), (u,)),
        Transition("upper", "lower", ((2 * pi - h, 2 * pi + h),), (shift_down,)),
    )
    return Atlas("circle", (lower, upper), transitions)


def scaled_circle_atlas(scale: float = 2.0) -> Atlas:
    """Same circle, but the upper chart uses a stretched coordinate
    v = scale * u, so overlap Jacobians are not unimodular."""
    if scale <= 0:
        raise DensityError("scale must be positive")
    h = HALF_OVERLAP
    pi = math.pi
    lower = AtlasChart(
        "lower", ("u",), ((-h, pi + h),), (Window((-h, h, pi - h, pi + h)),)
    )
    s = float(scale)
    upper = AtlasChart(
        "upper",
        ("v",),
        ((s * (pi - h), s * (2 * pi + h)),),
        (Window((s * (pi - h), s * (pi + h), s * (2 * pi - h), s * (2 * pi + h))),),
    )
    to_v = expr.parse(f"{s} * u", ("u",))
    to_v_shifted = expr.parse(f"{s} * (u + {2 * pi})", ("u",))
    to_u = expr.parse(f"v / {s}", ("v",))
    to_u_shifted = expr.parse(f"v / {s} - {2 * pi}", ("v",))
    transitions = (
        Transition("lower", "upper", ((pi - h, pi + h),), (to_v,)),
        Transition("lower", "upper", ((-h, h),), (to_v_shifted,)),
        Transition("upper", "lower", ((s * (pi - h), s * (pi + h)),), (to_u,)),
        Transition("upper", "lower", ((s * (2 * pi - h), s * (2 * pi + h)),), (to_u_shifted,)),
    )
    return Atlas("scaled-circle", (lower, upper), transitions)


def annulus_atlas(r_inner: float = 1.0, r_outer: float = 2.0) -> Atlas:
    """Annulus r_inner < r < r_outer, angular direction split like the
    circle atlas and the radial direction covered once."""
    if not 0 < r_inner < r_outer:
        raise DensityError("need 0 < r_inner < r_outer")
    h = HALF_OVERLAP
    pi = math.pi
    radial = (float(r_inner), float(r_outer))
    lower = AtlasChart(
        "lower",
        ("r", "u"),
        (radial, (-h, pi + h)),
        (Window.flat(), Window((-h, h, pi - h, pi + h))),
    )
    upper = AtlasChart(
        "upper",
        ("r", "u"),
        (radial, (pi - h, 2 * pi + h)),
        (Window.flat(), Window((pi - h, pi + h, 2 * pi - h, 2 * pi + h))),
    )
    r = expr.parse("r", ("r", "u"))
    u = expr.parse("u", ("r", "u"))
    up = expr.parse(f"u + {2 * pi}", ("r", "u"))
    down = expr.parse(f"u - {2 * pi}", ("r", "u"))
    transitions = (
        Transition("lower", "upper", (radial, (pi - h, pi + h)), (r, u)),
        Transition("lower", "upper", (radial, (-h, h)), (r, up)),
        Transition("upper", "lower", (radial, (pi - h, pi + h)), (r, u)),
        Transition("upper", "lower", (radial, (2 * pi - h, 2 * pi + h)), (r, down)),
    )
    return Atlas("annulus", (lower, upper), transitions)


def single_chart_atlas(name: str, coords, box) -> Atlas:
    chart = AtlasChart(name, tuple(coords), tuple(box), tuple(Window.flat() for _ in coords))
    return Atlas(name, (chart,), ())


def uniform_circle_density(atlas: Atlas | None = None) -> ManifoldDensity:
    """The arc-length density |du| on the two-chart circle; its integral
    is the circumference 2*pi."""
    atlas = atlas or circle_atlas()
    return ManifoldDensity(atlas, 1.0, {c.name: "1" for c in atlas.charts})
