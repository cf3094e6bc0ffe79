"""Charts, vector fields, differential forms and symplectic structures.

Everything lives on a single coordinate chart: a named box in R^n with an
optional puncture.  Two-forms are stored as antisymmetric matrices of
expressions with the pairing convention

    omega(X, Y) = X^T Omega Y,

coordinates ordered (q_1..q_n, p_1..p_n) on cotangent charts.  With that
ordering the canonical form dp^dq has Omega = [[0, -1], [1, 0]] in one
degree of freedom, so omega(dq, dp) = -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .expr import Expression

DET_TOLERANCE = 1e-12
CLOSEDNESS_TOLERANCE = 1e-9
ANTISYMMETRY_TOLERANCE = 1e-12
DEFAULT_SAMPLES = 200
DEFAULT_SEED = 20260814


class GeometryError(Exception):
    pass


class CertificationError(GeometryError):
    """A sampled invariant (closedness, nondegeneracy, antisymmetry) failed."""


class SingularStructureError(GeometryError):
    """|det Omega| fell below the pivot threshold at a requested point."""


@dataclass(frozen=True)
class Chart:
    """A coordinate box, optionally punctured at a point.

    bounds are inclusive per coordinate; the puncture removes a small closed
    ball so sampled points and trajectories keep clear of it.
    """

    name: str
    coords: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]
    puncture: tuple[float, ...] | None = None
    puncture_radius: float = 1e-6

    def __post_init__(self):
        if len(self.coords) == 0:
            raise GeometryError("chart needs at least one coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise GeometryError(f"duplicate coordinates in {self.coords}")
        if len(self.bounds) != len(self.coords):
            raise GeometryError("bounds and coords mismatch")
        for lo, hi in self.bounds:
            if not (lo < hi):
                raise GeometryError(f"empty bound ({lo}, {hi})")
        if self.puncture is not None and len(self.puncture) != len(self.coords):
            raise GeometryError("puncture dimension mismatch")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def contains(self, point) -> bool:
        for value, (lo, hi) in zip(point, self.bounds):
            if not (lo <= value <= hi):
                return False
        if self.puncture is not None:
            delta = math.dist(tuple(map(float, point)), self.puncture)
            if delta <= self.puncture_radius:
                return False
        return True

    def sample(self, rng: np.random.Generator, count: int, shrink: float = 0.0) -> np.ndarray:
        """Uniform points inside the (optionally shrunk) box, avoiding the puncture."""
        lows = np.array([lo + shrink * (hi - lo) for lo, hi in self.bounds])
        highs = np.array([hi - shrink * (hi - lo) for lo, hi in self.bounds])
        out = np.empty((count, self.dim))
        filled = 0
        while filled < count:
            batch = rng.uniform(lows, highs, size=(count - filled, self.dim))
            if self.puncture is not None:
                keep = np.linalg.norm(batch - np.array(self.puncture), axis=1) > self.puncture_radius
                batch = batch[keep]
            out[filled : filled + len(batch)] = batch
            filled += len(batch)
        return out

    def parse(self, source) -> Expression:
        return expr.as_field(source, self.coords)

    def zero(self) -> Expression:
        return expr.constant(0.0, self.coords)


def _fields(chart: Chart, components) -> tuple:
    return tuple(expr.as_field(c, chart.coords) for c in components)


@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.chart.dim:
            raise GeometryError("component count != chart dimension")
        object.__setattr__(self, "components", _fields(self.chart, self.components))

    def evaluate(self, point) -> np.ndarray:
        return np.array([c.evaluate(point) for c in self.components])

    def apply(self, f):
        """Directional derivative X(f) as a scalar field."""
        f = expr.as_field(f, self.chart.coords)
        total = None
        for name, comp in zip(self.chart.coords, self.components):
            term = comp * f.differentiate(name)
            total = term if total is None else total + term
        return total


@dataclass(frozen=True)
class OneForm:
    chart: Chart
    coefficients: tuple

    def __post_init__(self):
        if len(self.coefficients) != self.chart.dim:
            raise GeometryError("coefficient count != chart dimension")
        object.__setattr__(self, "coefficients", _fields(self.chart, self.coefficients))

    def evaluate(self, point) -> np.ndarray:
        return np.array([c.evaluate(point) for c in self.coefficients])

    def contract(self, vf: VectorField):
        """theta(X) as a scalar field."""
        total = None
        for coeff, comp in zip(self.coefficients, vf.components):
            term = coeff * comp
            total = term if total is None else total + term
        return total


@dataclass(frozen=True)
class TwoForm:
    """Antisymmetric matrix of coefficient expressions.

    omega = sum_{i<j} M[i][j] dx_i ^ dx_j and omega(X, Y) = X^T M Y.
    """

    chart: Chart
    matrix: tuple

    def __post_init__(self):
        n = self.chart.dim
        if len(self.matrix) != n or any(len(row) != n for row in self.matrix):
            raise GeometryError("two-form matrix must be n x n")
        rows = tuple(_fields(self.chart, row) for row in self.matrix)
        object.__setattr__(self, "matrix", rows)

    def evaluate(self, point) -> np.ndarray:
        n = self.chart.dim
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = self.matrix[i][j].evaluate(point)
        return out

    def pair(self, x: VectorField, y: VectorField):
        """omega(X, Y) as a scalar field."""
        total = None
        for i in range(self.chart.dim):
            for j in range(self.chart.dim):
                term = x.components[i] * self.matrix[i][j] * y.components[j]
                total = term if total is None else total + term
        return total

    def antisymmetry_residual(self, points) -> float:
        worst = 0.0
        for point in points:
            m = self.evaluate(point)
            worst = max(worst, float(np.max(np.abs(m + m.T))))
        return worst

    def closedness_residual(self, points) -> float:
        """Max over sampled points and index triples of the cyclic sum
        d_i M_jk + d_j M_ki + d_k M_ij."""
        n = self.chart.dim
        coords = self.chart.coords
        partials = {}
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    partials[(k, i, j)] = self.matrix[i][j].differentiate(coords[k])
        worst = 0.0
        for point in points:
            for i in range(n):
                for j in range(i + 1, n):
                    for k in range(j + 1, n):
                        value = (
                            partials[(i, j, k)].evaluate(point)
                            + partials[(j, k, i)].evaluate(point)
                            + partials[(k, i, j)].evaluate(point)
                        )
                        worst = max(worst, abs(value))
        return worst


@dataclass(frozen=True)
class SymplecticStructure:
    """A two-form certified closed, antisymmetric and nondegenerate by
    randomized sampling.  The certificate records the seed and residuals."""

    two_form: TwoForm
    seed: int
    samples: int
    closedness: float
    antisymmetry: float
    min_abs_det: float

    @property
    def chart(self) -> Chart:
        return self.two_form.chart

    @property
    def matrix(self):
        return self.two_form.matrix

    def evaluate(self, point) -> np.ndarray:
        return self.two_form.evaluate(point)

    def is_constant(self) -> bool:
        return all(c.is_constant() for row in self.two_form.matrix for c in row)

    def is_canonical(self) -> bool:
        """Constant block form [[0, -I], [I, 0]] in (q..., p...) ordering."""
        if not self.is_constant() or self.chart.dim % 2 != 0:
            return False
        n = self.chart.dim // 2
        expected = canonical_matrix(n)
        actual = np.array(
            [[c.constant_value() for c in row] for row in self.two_form.matrix]
        )
        return bool(np.array_equal(actual, expected))


def canonical_matrix(n: int) -> np.ndarray:
    """Matrix of sum_i dp_i ^ dq_i in (q_1..q_n, p_1..p_n) ordering."""
    top = np.hstack([np.zeros((n, n)), -np.eye(n)])
    bottom = np.hstack([np.eye(n), np.zeros((n, n))])
    return np.vstack([top, bottom])


def certify_symplectic(
    two_form: TwoForm,
    seed: int = DEFAULT_SEED,
    samples: int = DEFAULT_SAMPLES,
    tolerance_scale: float = 1.0,
) -> SymplecticStructure:
    """Sample the chart and check antisymmetry, closedness and |det| > 0.

    Sampling certifies, it does not prove; the seed is recorded so a failed
    certificate can be replayed.
    """
    if two_form.chart.dim % 2 != 0:
        raise CertificationError(f"odd-dimensional chart {two_form.chart.name}")
    rng = np.random.default_rng(seed)
    points = two_form.chart.sample(rng, samples)
    anti = two_form.antisymmetry_residual(points)
    if anti > ANTISYMMETRY_TOLERANCE * tolerance_scale:
        raise CertificationError(f"antisymmetry residual {anti:.3e}")
    closed = two_form.closedness_residual(points)
    if closed > CLOSEDNESS_TOLERANCE * tolerance_scale:
        raise CertificationError(f"closedness residual {closed:.3e}")
    min_det = math.inf
    for point in points:
        det = abs(float(np.linalg.det(two_form.evaluate(point))))
        min_det = min(min_det, det)
    if min_det <= DET_TOLERANCE:
        raise CertificationError(f"degenerate: min |det| = {min_det:.3e}")
    return SymplecticStructure(two_form, seed, samples, closed, anti, min_det)


# --- standard constructions ---------------------------------------------------


def cotangent_chart(n: int, extent: float = 5.0, name: str | None = None) -> Chart:
    coords = tuple(f"q{i+1}" for i in range(n)) + tuple(f"p{i+1}" for i in range(n))
    if n == 1:
        coords = ("q", "p")
    bounds = tuple((-extent, extent) for _ in coords)
    return Chart(name or f"T*R^{n}", coords, bounds)


def canonical_symplectic(n: int, extent: float = 5.0, chart: Chart | None = None) -> SymplecticStructure:
    chart = chart or cotangent_chart(n, extent)
    matrix = canonical_matrix(n)
    rows = tuple(
        tuple(expr.constant(matrix[i, j], chart.coords) for j in range(2 * n))
        for i in range(2 * n)
    )
    return certify_symplectic(TwoForm(chart, rows))


def tautological_one_form(n: int, extent: float = 5.0, chart: Chart | None = None) -> OneForm:
    """sum_i p_i dq_i; intrinsically alpha_(q,p)(v) = p(dpi(v))."""
    chart = chart or cotangent_chart(n, extent)
    coeffs = []
    for i in range(n):
        coeffs.append(expr.variable(chart.coords[n + i], chart.coords))
    for _ in range(n):
        coeffs.append(expr.constant(0.0, chart.coords))
    return OneForm(chart, tuple(coeffs))


def exterior_derivative(form: OneForm) -> TwoForm:
    """(d alpha)_ij = d_i alpha_j - d_j alpha_i, exact symbolic derivatives."""
    chart = form.chart
    n = chart.dim
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            row.append(
                form.coefficients[j].differentiate(chart.coords[i])
                - form.coefficients[i].differentiate(chart.coords[j])
            )
        rows.append(tuple(row))
    return TwoForm(chart, tuple(rows))


def twisted_cotangent(
    n: int,
    tau: TwoForm,
    extent: float = 5.0,
    seed: int = DEFAULT_SEED,
) -> SymplecticStructure:
    """pi^* tau + sum_i dp_i ^ dq_i on T*R^n for a closed tau on the base.

    tau must be given on an n-dimensional base chart in the q coordinates;
    its coefficients are lifted unchanged (no p dependence).
    """
    if tau.chart.dim != n:
        raise GeometryError(f"base form lives on dim {tau.chart.dim}, expected {n}")
    rng = np.random.default_rng(seed)
    base_points = tau.chart.sample(rng, DEFAULT_SAMPLES)
    residual = tau.closedness_residual(base_points)
    if residual > CLOSEDNESS_TOLERANCE:
        raise CertificationError(f"base form is not closed: residual {residual:.3e}")
    chart = cotangent_chart(n, extent)
    rows = [[None] * (2 * n) for _ in range(2 * n)]
    canonical = canonical_matrix(n)
    for i in range(2 * n):
        for j in range(2 * n):
            rows[i][j] = expr.constant(canonical[i, j], chart.coords)
    for i in range(n):
        for j in range(n):
            source = str(tau.matrix[i][j])
            lifted = expr.parse(source, chart.coords) if _nonzero(source) else chart.zero()
            rows[i][j] = rows[i][j] + lifted
    form = TwoForm(chart, tuple(tuple(row) for row in rows))
    return certify_symplectic(form, seed=seed)


def _nonzero(source: str) -> bool:
    return source not in ("0", "-0", "0.0")


# --- volume density -------------------------------------------------------------


def _pfaffian(matrix, chart: Chart):
    """Recursive Pfaffian of an antisymmetric expression matrix.

    Pf(A) = sum_{j>0} (-1)^j A[0][j] Pf(A with rows/cols {0, j} removed);
    fine at desk scale (dim <= 6).
    """
    size = len(matrix)
    if size == 0:
        return expr.constant(1.0, chart.coords)
    if size % 2 != 0:
        raise GeometryError("Pfaffian needs even dimension")
    if size == 2:
        return matrix[0][1]
    total = None
    for j in range(1, size):
        keep = [k for k in range(size) if k not in (0, j)]
        minor = [[matrix[r][c] for c in keep] for r in keep]
        term = matrix[0][j] * _pfaffian(minor, chart)
        if j % 2 == 0:
            term = -term
        total = term if total is None else total + term
    return total


def wedge_top_power(structure: SymplecticStructure) -> Expression:
    """Coefficient rho with omega^m = rho dx_1 ^ ... ^ dx_2m (coordinate order),
    computed as m! * Pf(Omega)."""
    n = structure.chart.dim
    m = n // 2
    pf = _pfaffian([list(row) for row in structure.matrix], structure.chart)
    return float(math.factorial(m)) * pf


def volume_density_coefficient(structure: SymplecticStructure, probe=None) -> Expression:
    """|rho| as an expression.

    rho is continuous and nowhere zero on the certified chart, so |rho| is
    rho times a constant sign, fixed by evaluating at one interior point.
    """
    rho = wedge_top_power(structure)
    if probe is None:
        probe = [0.5 * (lo + hi) for lo, hi in structure.chart.bounds]
        if not structure.chart.contains(probe):
            rng = np.random.default_rng(structure.seed)
            probe = structure.chart.sample(rng, 1)[0]
    value = rho.evaluate(probe)
    if value == 0.0:
        raise SingularStructureError("volume coefficient vanished at probe point")
    return rho if value > 0 else -rho
