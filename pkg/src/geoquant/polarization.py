"""Real polarizations, their holonomy obstructions, and leaf-space pairing.

A polarization here is a frame of n vector fields on a 2n-dimensional
chart, certified at sample points to be pointwise independent, isotropic
for the symplectic form, and closed under Lie brackets within its own
span.  The scalars whose Hamiltonian fields preserve the polarization form
the algebra of directly quantizable observables; membership is measured by
projecting [Xi_f, X] onto the frame span.

The circle bundle over the punctured plane (polar coordinates, potential
r^2 dt, phase constant 1) carries the angular polarization whose leaves
are circles.  Parallel transport once around a leaf multiplies a section
by exp(-2 pi i r^2), so nonzero polarized sections exist on the leaves
with integer r^2 and on no others.  The transport is integrated with RK4
and compared against that closed form in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import densities, expr, geometry, hamilton, prequantum
from .expr import NumericField
from .geometry import Chart, GeometryError, OneForm, SymplecticStructure, TwoForm, VectorField
from .prequantum import PrequantumBundle, Section

ISOTROPY_TOLERANCE = 1e-10
INVOLUTIVITY_TOLERANCE = 1e-8
RANK_TOLERANCE = 1e-8
LEAF_TOLERANCE = 1e-8
HOLONOMY_STEPS = 4096


class PolarizationError(GeometryError):
    pass


def _frame_matrix(frame, point) -> np.ndarray:
    return np.column_stack([f.evaluate(point) for f in frame])


def span_residual(frame, vector_field: VectorField, points) -> float:
    """max over the points of the least-squares defect of expressing the
    field in the frame; zero means pointwise membership in the span."""
    worst = 0.0
    for point in points:
        basis = _frame_matrix(frame, point)
        target = vector_field.evaluate(point)
        solution, *_ = np.linalg.lstsq(basis, target, rcond=None)
        worst = max(worst, float(np.linalg.norm(basis @ solution - target)))
    return worst


@dataclass(frozen=True)
class Polarization:
    """Certified frame: half-dimensional, independent, isotropic, involutive."""

    symplectic: SymplecticStructure
    frame: tuple
    seed: int = geometry.DEFAULT_SEED
    samples: int = 60

    def __post_init__(self):
        frame = tuple(self.frame)
        object.__setattr__(self, "frame", frame)
        chart = self.symplectic.chart
        if chart.dim % 2 != 0 or len(frame) != chart.dim // 2:
            raise PolarizationError(
                f"need {chart.dim // 2} frame fields on a {chart.dim}-dimensional chart, got {len(frame)}"
            )
        for f in frame:
            if f.chart != chart:
                raise PolarizationError("frame field on a different chart")
        rng = np.random.default_rng(self.seed)
        points = chart.sample(rng, self.samples, shrink=0.02)
        for point in points:
            basis = _frame_matrix(frame, point)
            singular_values = np.linalg.svd(basis, compute_uv=False)
            if singular_values[-1] <= RANK_TOLERANCE * (1.0 + singular_values[0]):
                raise PolarizationError(f"frame drops rank near {tuple(point)}")
        pairings = [
            self.symplectic.two_form.pair(frame[i], frame[j])
            for i in range(len(frame))
            for j in range(i + 1, len(frame))
        ]
        for pairing in pairings:
            worst = max(abs(pairing.evaluate(p)) for p in points)
            if worst > ISOTROPY_TOLERANCE:
                raise PolarizationError(f"frame is not isotropic: pairing {worst:.3e}")
        for i in range(len(frame)):
            for j in range(i + 1, len(frame)):
                bracket = hamilton.lie_bracket(frame[i], frame[j])
                residual = span_residual(frame, bracket, points)
                if residual > INVOLUTIVITY_TOLERANCE:
                    raise PolarizationError(
                        f"frame is not involutive: bracket escapes span by {residual:.3e}"
                    )

    @property
    def chart(self) -> Chart:
        return self.symplectic.chart

    @property
    def rank(self) -> int:
        return len(self.frame)


def vertical_polarization(n: int = 1, extent: float = 5.0) -> Polarization:
    """Span of the momentum directions on T*R^n; leaves are the fibers."""
    sym = geometry.canonical_symplectic(n, extent)
    chart = sym.chart
    frame = []
    for i in range(n):
        components = ["0"] * (2 * n)
        components[n + i] = "1"
        frame.append(VectorField(chart, tuple(components)))
    return Polarization(sym, tuple(frame))


# --- the punctured plane -------------------------------------------------------------


def polar_chart(r_min: float = 0.1, r_max: float = 2.5) -> Chart:
    if not 0 < r_min < r_max:
        raise PolarizationError("need 0 < r_min < r_max")
    return Chart("polar", ("r", "t"), ((r_min, r_max), (0.0, 2 * math.pi)))


def circle_bundle(r_min: float = 0.1, r_max: float = 2.5) -> PrequantumBundle:
    """Potential r^2 dt with phase constant 1; the two-form is 2r dr^dt,
    nondegenerate because the origin is excluded."""
    chart = polar_chart(r_min, r_max)
    sigma = geometry.certify_symplectic(
        TwoForm(chart, (("0", "2*r"), ("-2*r", "0")))
    )
    alpha = OneForm(chart, ("0", "r^2"))
    return PrequantumBundle(sigma, alpha, kappa=1.0)


def circle_polarization(bundle: PrequantumBundle) -> Polarization:
    """Angular direction; leaves are the circles of constant radius."""
    frame = (VectorField(bundle.chart, ("0", "1")),)
    return Polarization(bundle.symplectic, frame)


def leaf_holonomy(bundle: PrequantumBundle, radius: float, steps: int = HOLONOMY_STEPS) -> complex:
    """Parallel transport once around the circle of the given radius.

    Solves dphi/dt = -i kappa alpha(d_t) phi over a full turn with RK4 and
    returns phi(2 pi) for phi(0) = 1.
    """
    lo, hi = bundle.chart.bounds[0]
    if not lo <= radius <= hi:
        raise PolarizationError(f"radius {radius} outside the chart")
    angular = bundle.potential.coefficients[1]
    kappa = bundle.kappa

    def rate(t: float, phi: complex) -> complex:
        return -1j * kappa * angular.evaluate((radius, t)) * phi

    h = 2 * math.pi / steps
    t, phi = 0.0, 1.0 + 0.0j
    for _ in range(steps):
        k1 = rate(t, phi)
        k2 = rate(t + h / 2, phi + h / 2 * k1)
        k3 = rate(t + h / 2, phi + h / 2 * k2)
        k4 = rate(t + h, phi + h * k3)
        phi += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return phi


def holonomy_defect(bundle: PrequantumBundle, radius: float) -> float:
    return abs(leaf_holonomy(bundle, radius) - 1.0)


def polarized_section_exists(
    bundle: PrequantumBundle, radius: float, tolerance: float = 1e-8
) -> bool:
    """A nonzero polarized section lives on the leaf exactly when the
    holonomy is trivial, which for r^2 dt means r^2 is an integer."""
    return holonomy_defect(bundle, radius) <= tolerance


def strip_polarized_section(bundle: PrequantumBundle) -> Section:
    """exp(-i r^2 t): annihilated by the angular covariant derivative on
    the full strip, but single-valued on the annulus only at integer r^2.
    Only meaningful for the unit phase constant."""
    if bundle.kappa != 1.0:
        raise PolarizationError("the strip section is built for kappa = 1")
    return Section(bundle, "cos(r^2 * t)", "0 - sin(r^2 * t)")


def seam_mismatch(bundle: PrequantumBundle, section: Section, radius: float) -> float:
    """|s(r, 0) - s(r, 2 pi)|: the single-valuedness defect on the leaf."""
    return abs(
        section.evaluate((radius, 0.0)) - section.evaluate((radius, 2 * math.pi))
    )


# --- measurements --------------------------------------------------------------------


def polarized_residual(polarization: Polarization, section: Section, points) -> float:
    """max |nabla_X s| over the frame and the points; zero means polarized."""
    worst = 0.0
    for x in polarization.frame:
        derivative = prequantum.covariant_derivative(section, x)
        for point in points:
            worst = max(worst, abs(derivative.evaluate(point)))
    return worst


def preserves_polarization_residual(polarization: Polarization, f, points=None) -> float:
    """How far [Xi_f, X] strays from the frame span, maximized over the
    frame; zero characterizes the directly quantizable scalars."""
    chart = polarization.chart
    f = expr.as_field(f, chart.coords)
    if points is None:
        rng = np.random.default_rng(polarization.seed + 1)
        points = chart.sample(rng, polarization.samples, shrink=0.02)
    xi = hamilton.hamiltonian_vector_field(
        hamilton.HamiltonianSystem(polarization.symplectic, f)
    )
    worst = 0.0
    for x in polarization.frame:
        bracket = hamilton.lie_bracket(xi, x)
        worst = max(worst, span_residual(polarization.frame, bracket, points))
    return worst


def poisson_closure_residual(polarization: Polarization, f, g, points=None) -> float:
    """Residual of {f, g}; small when the quantizable scalars close under
    the bracket."""
    bracket = hamilton.poisson_bracket(f, g, polarization.symplectic)
    return preserves_polarization_residual(polarization, bracket, points)


def operator_polarized_residual(
    bundle: PrequantumBundle, polarization: Polarization, f, section: Section, points
) -> float:
    """Residual of Q_f s against the polarization; small when s is
    polarized and f preserves the polarization."""
    if bundle.chart != polarization.chart:
        raise PolarizationError("bundle and polarization charts differ")
    image = prequantum.prequantum_operator(bundle, f, section)
    return polarized_residual(polarization, image, points)


# --- leaf space ----------------------------------------------------------------------


@dataclass(frozen=True)
class LeafQuotient:
    """Leaf space of a coordinate polarization: the base coordinates label
    leaves, the fiber coordinates are pinned to reference values."""

    chart: Chart
    base_indices: tuple
    fiber_reference: tuple

    def __post_init__(self):
        base = tuple(int(i) for i in self.base_indices)
        if len(base) + len(self.fiber_reference) != self.chart.dim:
            raise PolarizationError("base and fiber must partition the coordinates")
        object.__setattr__(self, "base_indices", base)
        object.__setattr__(
            self, "fiber_reference", tuple(float(v) for v in self.fiber_reference)
        )

    @property
    def base_coords(self) -> tuple:
        return tuple(self.chart.coords[i] for i in self.base_indices)

    @property
    def base_bounds(self) -> tuple:
        return tuple(self.chart.bounds[i] for i in self.base_indices)

    def embed(self, base_point) -> tuple:
        fiber = iter(self.fiber_reference)
        point = []
        for i in range(self.chart.dim):
            if i in self.base_indices:
                point.append(float(base_point[self.base_indices.index(i)]))
            else:
                point.append(next(fiber))
        return tuple(point)

    def restrict(self, field) -> NumericField:
        field = expr.as_field(field, self.chart.coords)
        return NumericField(
            lambda x: field.evaluate(self.embed(x)), self.base_coords
        )

    def leaf_constancy_residual(self, field, seed: int = 13, samples: int = 80) -> float:
        field = expr.as_field(field, self.chart.coords)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for point in self.chart.sample(rng, samples):
            base = tuple(point[i] for i in self.base_indices)
            worst = max(worst, abs(field.evaluate(point) - field.evaluate(self.embed(base))))
        return worst


def vertical_leaf_quotient(polarization: Polarization, reference: float = 0.0) -> LeafQuotient:
    n = polarization.rank
    return LeafQuotient(
        polarization.chart, tuple(range(n)), tuple(reference for _ in range(n))
    )


def half_density_pairing(
    quotient: LeafQuotient,
    s1: Section,
    mu1,
    s2: Section,
    mu2,
    tolerance: float = LEAF_TOLERANCE,
) -> complex:
    """Pair polarized sections against half-densities on the leaf space:
    integrate <s1, s2> mu1 mu2 over the base.  The pointwise product must
    be leaf-constant (checked), otherwise the value would depend on where
    each leaf is sampled."""
    re, im = prequantum.hermitian_product_fields(s1, s2)
    for part in (re, im):
        residual = quotient.leaf_constancy_residual(part)
        if residual > tolerance:
            raise PolarizationError(
                f"pairing integrand varies along leaves by {residual:.3e}"
            )
    mu1 = expr.as_field(mu1, quotient.base_coords)
    mu2 = expr.as_field(mu2, quotient.base_coords)
    atlas = densities.single_chart_atlas("leafspace", quotient.base_coords, quotient.base_bounds)
    values = []
    for part in (re, im):
        coefficient = quotient.restrict(part) * (mu1 * mu2)
        density = densities.ManifoldDensity(atlas, 1.0, {"leafspace": coefficient})
        values.append(densities.integrate_one_density(density))
    return complex(values[0], values[1])
