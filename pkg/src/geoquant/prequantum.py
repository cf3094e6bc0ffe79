"""Prequantum line bundles over a symplectic chart.

The bundle is trivialized by a global potential theta with d(theta) equal
to the symplectic form; the covariant derivative acting on a section s is

    nabla_X s = X(s) + kappa * i * theta(X) * s,

with the phase constant kappa either 2*pi (curvature 2*pi*i*omega, the
integrality normalization) or 1 (curvature i*omega, the convention used on
the punctured plane).  The prequantum operator attached to a scalar f is

    Q_f s = nabla_{Xi_f} s - kappa * i * f * s.

Sections carry an optional compact-support box: values are truncated to
zero outside it, and construction verifies the raw fields already vanish
on the box boundary so the truncation never introduces jumps.

Integrals use tensor-product Simpson rules.  Summation is numpy's pairwise
reduction, so results are deterministic for a fixed grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr, geometry, hamilton
from .expr import Expression
from .geometry import Chart, GeometryError, OneForm, SymplecticStructure, VectorField

TWO_PI = 2 * math.pi

POTENTIAL_TOLERANCE = 1e-9
SUPPORT_TOLERANCE = 1e-12


class PrequantumError(GeometryError):
    pass


class SupportExceedsGridError(PrequantumError):
    pass


@dataclass(frozen=True)
class PrequantumBundle:
    """Trivialized bundle: certified structure, potential, phase constant."""

    symplectic: SymplecticStructure
    potential: OneForm
    kappa: float = TWO_PI
    seed: int = geometry.DEFAULT_SEED

    def __post_init__(self):
        if self.kappa not in (TWO_PI, 1.0):
            raise PrequantumError(f"kappa must be 2*pi or 1, got {self.kappa!r}")
        if self.potential.chart != self.symplectic.chart:
            raise PrequantumError("potential and structure live on different charts")
        d_theta = geometry.exterior_derivative(self.potential)
        rng = np.random.default_rng(self.seed)
        points = self.chart.sample(rng, 60)
        worst = 0.0
        for point in points:
            delta = d_theta.evaluate(point) - self.symplectic.evaluate(point)
            worst = max(worst, float(np.max(np.abs(delta))))
        if worst > POTENTIAL_TOLERANCE:
            raise PrequantumError(
                f"potential does not differentiate to the structure: residual {worst:.3e}"
            )

    @property
    def chart(self) -> Chart:
        return self.symplectic.chart


def canonical_prequantum_bundle(n: int = 1, kappa: float = TWO_PI, extent: float = 5.0) -> PrequantumBundle:
    """T*R^n with theta = sum p_i dq_i."""
    chart = geometry.cotangent_chart(n, extent)
    sym = geometry.canonical_symplectic(n, chart=chart)
    return PrequantumBundle(sym, geometry.tautological_one_form(n, chart=chart), kappa)


# --- sections ---------------------------------------------------------------------


def _boundary_points(box, rng: np.random.Generator, per_face: int = 12):
    dims = len(box)
    points = []
    for axis in range(dims):
        for value in box[axis]:
            for _ in range(per_face):
                point = [rng.uniform(lo, hi) for lo, hi in box]
                point[axis] = value
                points.append(tuple(point))
    return points


@dataclass(frozen=True)
class Section:
    """Complex section as a (re, im) pair of scalar fields."""

    bundle: PrequantumBundle
    re: object
    im: object
    support: tuple | None = None

    def __post_init__(self):
        coords = self.bundle.chart.coords
        object.__setattr__(self, "re", expr.as_field(self.re, coords))
        object.__setattr__(self, "im", expr.as_field(self.im, coords))
        if self.support is not None:
            support = tuple((float(lo), float(hi)) for lo, hi in self.support)
            if len(support) != len(coords):
                raise PrequantumError("support box dimension mismatch")
            for (slo, shi), (clo, chi) in zip(support, self.bundle.chart.bounds):
                if slo < clo - 1e-12 or shi > chi + 1e-12:
                    raise PrequantumError(
                        f"support [{slo}, {shi}] leaves the chart [{clo}, {chi}]"
                    )
            object.__setattr__(self, "support", support)
            rng = np.random.default_rng(self.bundle.seed + 1)
            worst = 0.0
            for point in _boundary_points(support, rng):
                worst = max(
                    worst,
                    abs(self.re.evaluate(point)),
                    abs(self.im.evaluate(point)),
                )
            if worst > SUPPORT_TOLERANCE:
                raise PrequantumError(
                    f"section does not vanish on its support boundary: {worst:.3e}"
                )

    def inside(self, point) -> bool:
        if self.support is None:
            return True
        return all(lo <= v <= hi for v, (lo, hi) in zip(point, self.support))

    def evaluate(self, point) -> complex:
        if not self.inside(point):
            return 0.0 + 0.0j
        return complex(self.re.evaluate(point), self.im.evaluate(point))

    def scale(self, factor: complex) -> "Section":
        factor = complex(factor)
        re = factor.real * self.re - factor.imag * self.im
        im = factor.real * self.im + factor.imag * self.re
        return Section(self.bundle, re, im, self.support)


def _common_support(a, b):
    """Combining truncated sections is only faithful to the raw-field
    representation when the boxes coincide; a sum of raws over a merged box
    would silently pick up the spillover of the smaller section."""
    if a != b:
        raise PrequantumError("sections must share a support box to combine")
    return a


def section_add(a: Section, b: Section) -> Section:
    return Section(a.bundle, a.re + b.re, a.im + b.im, _common_support(a.support, b.support))


def section_sub(a: Section, b: Section) -> Section:
    return Section(a.bundle, a.re - b.re, a.im - b.im, _common_support(a.support, b.support))


def section_scalar_multiply(f, s: Section) -> Section:
    """Multiply by a real scalar field."""
    f = expr.as_field(f, s.bundle.chart.coords)
    return Section(s.bundle, f * s.re, f * s.im, s.support)


def hermitian_product_fields(a: Section, b: Section):
    """Pointwise <a, b> = conj(a) * b as a (re, im) field pair."""
    re = a.re * b.re + a.im * b.im
    im = a.re * b.im - a.im * b.re
    return re, im


def covariant_derivative(s: Section, x: VectorField) -> Section:
    """nabla_X s = X(s) + kappa i theta(X) s."""
    bundle = s.bundle
    if x.chart != bundle.chart:
        raise PrequantumError("vector field on a different chart")
    theta_x = bundle.potential.contract(x)
    kappa = bundle.kappa
    re = x.apply(s.re) - kappa * (theta_x * s.im)
    im = x.apply(s.im) + kappa * (theta_x * s.re)
    return Section(bundle, re, im, s.support)


def curvature_section(bundle: PrequantumBundle, x: VectorField, y: VectorField, s: Section) -> Section:
    """R(X, Y) s = nabla_X nabla_Y s - nabla_Y nabla_X s - nabla_[X,Y] s."""
    first = covariant_derivative(covariant_derivative(s, y), x)
    second = covariant_derivative(covariant_derivative(s, x), y)
    third = covariant_derivative(s, hamilton.lie_bracket(x, y))
    return section_sub(section_sub(first, second), third)


def curvature_residual(
    bundle: PrequantumBundle, x: VectorField, y: VectorField, s: Section, points
) -> float:
    """max |R(X,Y)s - kappa i omega(X,Y) s| over the points."""
    actual = curvature_section(bundle, x, y, s)
    omega_xy = bundle.symplectic.two_form.pair(x, y)
    worst = 0.0
    for point in points:
        expected = 1j * bundle.kappa * omega_xy.evaluate(point) * s.evaluate(point)
        worst = max(worst, abs(actual.evaluate(point) - expected))
    return worst


def prequantum_operator(bundle: PrequantumBundle, f, s: Section) -> Section:
    """Q_f s = nabla_{Xi_f} s - kappa i f s."""
    f = expr.as_field(f, bundle.chart.coords)
    xi = hamilton.hamiltonian_vector_field(
        hamilton.HamiltonianSystem(bundle.symplectic, f)
    )
    nabla = covariant_derivative(s, xi)
    kappa = bundle.kappa
    re = nabla.re + kappa * (f * s.im)
    im = nabla.im - kappa * (f * s.re)
    return Section(bundle, re, im, s.support)


def commutator_residual(bundle: PrequantumBundle, f, g, s: Section, points) -> float:
    """max |([Q_f, Q_g] - Q_{{f,g}}) s| over the points."""
    f = expr.as_field(f, bundle.chart.coords)
    g = expr.as_field(g, bundle.chart.coords)
    qf_qg = prequantum_operator(bundle, f, prequantum_operator(bundle, g, s))
    qg_qf = prequantum_operator(bundle, g, prequantum_operator(bundle, f, s))
    bracket = hamilton.poisson_bracket(f, g, bundle.symplectic)
    q_bracket = prequantum_operator(bundle, bracket, s)
    worst = 0.0
    for point in points:
        value = qf_qg.evaluate(point) - qg_qf.evaluate(point) - q_bracket.evaluate(point)
        worst = max(worst, abs(value))
    return worst


# --- quadrature --------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product Simpson rule on a box; node counts odd and >= 3."""

    box: tuple
    nodes: tuple

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        nodes = tuple(int(n) for n in self.nodes)
        if len(box) != len(nodes):
            raise PrequantumError("box and node counts mismatch")
        for n in nodes:
            if n < 3 or n % 2 == 0:
                raise PrequantumError(f"Simpson needs odd node counts >= 3, got {n}")
        for lo, hi in box:
            if not lo < hi:
                raise PrequantumError(f"empty quadrature box ({lo}, {hi})")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "nodes", nodes)

    @property
    def dim(self) -> int:
        return len(self.box)

    def axes(self):
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.box, self.nodes)]

    def axis_weights(self):
        out = []
        for (lo, hi), n in zip(self.box, self.nodes):
            h = (hi - lo) / (n - 1)
            w = np.full(n, 2.0)
            w[1::2] = 4.0
            w[0] = w[-1] = 1.0
            out.append(w * (h / 3.0))
        return out

    def refined(self) -> "QuadratureGrid":
        """Double the panel count per axis (2n - 1 keeps the counts odd)."""
        return QuadratureGrid(self.box, tuple(2 * n - 1 for n in self.nodes))

    def meshes(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def weight_array(self) -> np.ndarray:
        weights = self.axis_weights()
        total = weights[0]
        for w in weights[1:]:
            total = np.multiply.outer(total, w)
        return total


def _field_on_grid(field, meshes) -> np.ndarray:
    shape = meshes[0].shape
    if isinstance(field, Expression):
        values = field.compiled_numpy()(meshes)
        return np.broadcast_to(np.asarray(values, dtype=float), shape).copy()
    out = np.empty(shape)
    fn = field.evaluate
    for index in np.ndindex(shape):
        out[index] = fn([m[index] for m in meshes])
    return out


def section_on_grid(s: Section, grid: QuadratureGrid) -> np.ndarray:
    """Complex values on the grid, truncated outside the support box."""
    if s.support is not None:
        for (slo, shi), (glo, ghi) in zip(s.support, grid.box):
            if slo < glo - 1e-12 or shi > ghi + 1e-12:
                raise SupportExceedsGridError(
                    f"support [{slo}, {shi}] exceeds grid [{glo}, {ghi}]"
                )
    meshes = grid.meshes()
    values = _field_on_grid(s.re, meshes) + 1j * _field_on_grid(s.im, meshes)
    if s.support is not None:
        mask = np.ones(meshes[0].shape, dtype=bool)
        for mesh, (lo, hi) in zip(meshes, s.support):
            mask &= (mesh >= lo) & (mesh <= hi)
        values = np.where(mask, values, 0.0)
    return values


def l2_inner_product(
    bundle: PrequantumBundle, a: Section, b: Section, grid: QuadratureGrid
) -> complex:
    """<<a, b>> = integral of conj(a) b |rho|, conjugate-linear in the first
    argument.  Both sections must be compactly supported inside the grid."""
    if a.support is None or b.support is None:
        raise PrequantumError("l2 pairing needs compactly supported sections")
    if grid.dim != bundle.chart.dim:
        raise PrequantumError("grid dimension mismatch")
    va = section_on_grid(a, grid)
    vb = section_on_grid(b, grid)
    meshes = grid.meshes()
    rho = _field_on_grid(geometry.volume_density_coefficient(bundle.symplectic), meshes)
    weights = grid.weight_array()
    return complex(np.sum(np.conj(va) * vb * rho * weights))


def skew_hermiticity_residual(
    bundle: PrequantumBundle, f, a: Section, b: Section, grid: QuadratureGrid
) -> float:
    """|<<Q_f a, b>> + <<a, Q_f b>>| for real f; zero in exact arithmetic by
    the surface-term argument, so the value measures quadrature error."""
    qa = prequantum_operator(bundle, f, a)
    qb = prequantum_operator(bundle, f, b)
    value = l2_inner_product(bundle, qa, b, grid) + l2_inner_product(bundle, a, qb, grid)
    return abs(value)


# --- ready-made sections -------------------------------------------------------------


def gaussian_section(
    bundle: PrequantumBundle,
    width: float = 0.5,
    support_extent: float = 5.0,
    polynomial: str = "1",
) -> Section:
    """exp(-|x|^2 / (2 width^2)) times an optional polynomial factor.

    The tails drop below 1e-12 once support_extent / width exceeds about
    7.5; the defaults give 10, leaving headroom for polynomial factors,
    and the section constructor verifies the boundary values either way.
    """
    coords = bundle.chart.coords
    quad = " + ".join(f"{name}^2" for name in coords)
    body = f"({polynomial}) * exp(-({quad}) / {2 * width * width})"
    box = tuple((-support_extent, support_extent) for _ in coords)
    return Section(bundle, expr.parse(body, coords), "0", box)


def bump_section(
    bundle: PrequantumBundle,
    extent: float = 2.0,
    power: int = 3,
    re_polynomial: str = "1",
    im_polynomial: str = "0",
) -> Section:
    """Polynomial box bump prod_i (1 - (x_i/extent)^2)^power, C^(power-1)
    across the support boundary, times optional polynomial factors."""
    coords = bundle.chart.coords
    window = "*".join(f"(1 - ({name}/{extent})^2)^{power}" for name in coords)
    box = tuple((-extent, extent) for _ in coords)
    re = expr.parse(f"({re_polynomial}) * {window}", coords)
    im_poly = im_polynomial.strip()
    if im_poly in ("0", ""):
        im = "0"
    else:
        im = expr.parse(f"({im_poly}) * {window}", coords)
    return Section(bundle, re, im, box)
