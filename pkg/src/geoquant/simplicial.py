"""Oriented simplicial complexes of dimension at most two, exact cochains,
and integer Smith normal form.

Cochain values are `fractions.Fraction`, so coboundaries, cocycle checks
and linear solves are exact.  A degree can exceed the top dimension by
one: such cochains are empty and stand in for the zero group, which keeps
compositions like "coboundary of a top-degree cochain" total.  Asking for
the coboundary of one of those empty cochains is a degree overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class SimplicialError(Exception):
    pass


class DegreeOverflowError(SimplicialError):
    pass


def as_fraction(value) -> Fraction:
    """Exact coercion; floats and strings go through their decimal reading
    so 0.1 means 1/10, not the nearest binary double."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float) or isinstance(value, str):
        return Fraction(str(value))
    raise SimplicialError(f"cannot read {value!r} as an exact rational")


@dataclass(frozen=True)
class SimplicialComplex:
    """Vertices 0..n-1 with oriented edges and triangles.

    Triangle sides are looked up among the stored edges in either
    orientation; the sign of the match feeds the incidence matrices.
    """

    name: str
    vertex_count: int
    edges: tuple
    triangles: tuple = ()

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        triangles = tuple((int(a), int(b), int(c)) for a, b, c in self.triangles)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "triangles", triangles)
        lookup = {}
        for index, (a, b) in enumerate(edges):
            if not (0 <= a < self.vertex_count and 0 <= b < self.vertex_count):
                raise SimplicialError(f"edge ({a}, {b}) leaves the vertex range")
            if a == b:
                raise SimplicialError(f"degenerate edge ({a}, {b})")
            if (a, b) in lookup:
                raise SimplicialError(f"duplicate oriented edge ({a}, {b})")
            lookup[(a, b)] = (index, 1)
            if (b, a) not in lookup:
                lookup[(b, a)] = (index, -1)
        object.__setattr__(self, "_edge_lookup", lookup)
        for a, b, c in triangles:
            if len({a, b, c}) != 3:
                raise SimplicialError(f"degenerate triangle ({a}, {b}, {c})")
            for side in ((b, c), (a, c), (a, b)):
                if side not in lookup:
                    raise SimplicialError(f"triangle side {side} is not an edge")

    @property
    def top_dimension(self) -> int:
        if self.triangles:
            return 2
        if self.edges:
            return 1
        return 0

    def simplex_count(self, degree: int) -> int:
        if degree == 0:
            return self.vertex_count
        if degree == 1:
            return len(self.edges)
        if degree == 2:
            return len(self.triangles)
        return 0

    def edge_index(self, a: int, b: int):
        """(index, sign) of the oriented edge a -> b."""
        try:
            return self._edge_lookup[(a, b)]
        except KeyError:
            raise SimplicialError(f"no edge between {a} and {b}") from None

    def boundary_matrix(self, degree: int):
        """Integer matrix of the boundary on `degree`-chains, with
        simplex_count(degree - 1) rows."""
        if degree == 1:
            rows = [[0] * len(self.edges) for _ in range(self.vertex_count)]
            for j, (a, b) in enumerate(self.edges):
                rows[b][j] += 1
                rows[a][j] -= 1
            return rows
        if degree == 2:
            rows = [[0] * len(self.triangles) for _ in self.edges]
            for j, (a, b, c) in enumerate(self.triangles):
                for side, sign in (((b, c), 1), ((a, c), -1), ((a, b), 1)):
                    index, orientation = self.edge_index(*side)
                    rows[index][j] += sign * orientation
            return rows
        raise SimplicialError(f"no boundary matrix in degree {degree}")


# --- builders ------------------------------------------------------------------------


def circle_complex(n: int) -> SimplicialComplex:
    if n < 3:
        raise SimplicialError("circle needs at least 3 vertices")
    edges = tuple((i, (i + 1) % n) for i in range(n))
    return SimplicialComplex(f"circle-{n}", n, edges)


def torus_complex(m: int, n: int) -> SimplicialComplex:
    """m x n grid with periodic boundary; each square is split by its
    diagonal into two triangles whose orientations agree, so the all-ones
    2-chain is a cycle."""
    if m < 3 or n < 3:
        raise SimplicialError(
            "torus grid needs m, n >= 3; smaller grids duplicate wrap-around edges"
        )

    def vertex(i, j):
        return (i % m) + m * (j % n)

    horizontals = [(vertex(i, j), vertex(i + 1, j)) for j in range(n) for i in range(m)]
    verticals = [(vertex(i, j), vertex(i, j + 1)) for j in range(n) for i in range(m)]
    diagonals = [
        (vertex(i, j), vertex(i + 1, j + 1)) for j in range(n) for i in range(m)
    ]
    triangles = [
        (vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1))
        for j in range(n)
        for i in range(m)
    ] + [
        (vertex(i, j), vertex(i + 1, j + 1), vertex(i, j + 1))
        for j in range(n)
        for i in range(m)
    ]
    return SimplicialComplex(
        f"torus-{m}x{n}",
        m * n,
        tuple(horizontals + verticals + diagonals),
        tuple(triangles),
    )


def tetra_sphere() -> SimplicialComplex:
    """Boundary of the tetrahedron; the 2-cycle generating its homology
    carries face coefficients (+1, -1, +1, -1)."""
    edges = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
    faces = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))
    return SimplicialComplex("tetra-sphere", 4, edges, faces)


# --- cochains ------------------------------------------------------------------------


@dataclass(frozen=True)
class Cochain:
    """Exact-valued cochain; degree may run from -1 to top + 1, where both
    extremes are empty stand-ins for zero groups."""

    complex: SimplicialComplex
    degree: int
    values: tuple

    def __post_init__(self):
        top = self.complex.top_dimension
        if not -1 <= self.degree <= top + 1:
            raise DegreeOverflowError(
                f"degree {self.degree} outside [-1, {top + 1}] on {self.complex.name}"
            )
        values = tuple(as_fraction(v) for v in self.values)
        expected = self.complex.simplex_count(self.degree)
        if len(values) != expected:
            raise SimplicialError(
                f"degree {self.degree} cochain needs {expected} values, got {len(values)}"
            )
        object.__setattr__(self, "values", values)

    def is_integral(self) -> bool:
        return all(v.denominator == 1 for v in self.values)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def __add__(self, other: "Cochain") -> "Cochain":
        self._check_compatible(other)
        return Cochain(
            self.complex, self.degree, tuple(a + b for a, b in zip(self.values, other.values))
        )

    def __sub__(self, other: "Cochain") -> "Cochain":
        self._check_compatible(other)
        return Cochain(
            self.complex, self.degree, tuple(a - b for a, b in zip(self.values, other.values))
        )

    def __neg__(self) -> "Cochain":
        return Cochain(self.complex, self.degree, tuple(-a for a in self.values))

    def scale(self, factor) -> "Cochain":
        factor = as_fraction(factor)
        return Cochain(self.complex, self.degree, tuple(factor * a for a in self.values))

    def pair_chain(self, coefficients) -> Fraction:
        """Evaluate on a chain given by one coefficient per simplex."""
        coefficients = tuple(as_fraction(c) for c in coefficients)
        if len(coefficients) != len(self.values):
            raise SimplicialError("chain length mismatch")
        return sum((a * b for a, b in zip(self.values, coefficients)), Fraction(0))

    def _check_compatible(self, other: "Cochain"):
        if self.complex is not other.complex and self.complex != other.complex:
            raise SimplicialError("cochains on different complexes")
        if self.degree != other.degree:
            raise SimplicialError("cochains of different degrees")


def zero_cochain(complex: SimplicialComplex, degree: int) -> Cochain:
    return Cochain(complex, degree, (0,) * complex.simplex_count(degree))


def coboundary(cochain: Cochain) -> Cochain:
    """Signed sum over cofaces.  At the top dimension the result is the
    empty zero cochain one degree up; only the empty stand-ins themselves
    overflow."""
    complex = cochain.complex
    top = complex.top_dimension
    if cochain.degree > top:
        raise DegreeOverflowError(
            f"no coboundary above degree {top} on {complex.name}"
        )
    if cochain.degree in (-1, top):
        return zero_cochain(complex, cochain.degree + 1)
    if cochain.degree == 0:
        values = [cochain.values[b] - cochain.values[a] for a, b in complex.edges]
        return Cochain(complex, 1, tuple(values))
    values = []
    for a, b, c in complex.triangles:
        total = Fraction(0)
        for side, sign in (((b, c), 1), ((a, c), -1), ((a, b), 1)):
            index, orientation = complex.edge_index(*side)
            total += sign * orientation * cochain.values[index]
        values.append(total)
    return Cochain(complex, 2, tuple(values))


# --- integer linear algebra ----------------------------------------------------------


def _identity(n: int):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def smith_normal_form(matrix):
    """(u, s, v, v_inverse) with s = u @ matrix @ v diagonal, nonnegative,
    each entry dividing the next, and u, v unimodular.  v_inverse is kept
    in step so callers get exact dual rows without a separate inversion."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    s = [[int(x) for x in row] for row in matrix]
    u = _identity(rows)
    v = _identity(cols)
    vinv = _identity(cols)

    def row_swap(i, j):
        s[i], s[j] = s[j], s[i]
        u[i], u[j] = u[j], u[i]

    def row_add(i, j, q):
        s[i] = [a + q * b for a, b in zip(s[i], s[j])]
        u[i] = [a + q * b for a, b in zip(u[i], u[j])]

    def row_negate(i):
        s[i] = [-a for a in s[i]]
        u[i] = [-a for a in u[i]]

    def col_swap(i, j):
        for r in s:
            r[i], r[j] = r[j], r[i]
        for r in v:
            r[i], r[j] = r[j], r[i]
        vinv[i], vinv[j] = vinv[j], vinv[i]

    def col_add(i, j, q):
        for r in s:
            r[i] += q * r[j]
        for r in v:
            r[i] += q * r[j]
        vinv[j] = [a - q * b for a, b in zip(vinv[j], vinv[i])]

    def col_negate(i):
        for r in s:
            r[i] = -r[i]
        for r in v:
            r[i] = -r[i]
        vinv[i] = [-a for a in vinv[i]]

    t = 0
    limit = min(rows, cols)
    while t < limit:
        pivot = None
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                a = abs(s[i][j])
                if a != 0 and (best is None or a < best):
                    best, pivot = a, (i, j)
        if pivot is None:
            break
        while True:
            i, j = pivot
            if i != t:
                row_swap(t, i)
            if j != t:
                col_swap(t, j)
            if s[t][t] < 0:
                row_negate(t)
            dirty = False
            for i in range(t + 1, rows):
                if s[i][t]:
                    row_add(i, t, -(s[i][t] // s[t][t]))
                    if s[i][t]:
                        dirty = True
            for j in range(t + 1, cols):
                if s[t][j]:
                    col_add(j, t, -(s[t][j] // s[t][t]))
                    if s[t][j]:
                        dirty = True
            if dirty:
                pivot = _smallest_nonzero(s, t, rows, cols)
                continue
            offender = _divisibility_offender(s, t, rows, cols)
            if offender is None:
                break
            row_add(t, offender[0], 1)
            pivot = (t, t)
        t += 1
    return u, s, v, vinv


def _smallest_nonzero(s, t, rows, cols):
    best = None
    pivot = (t, t)
    for i in range(t, rows):
        for j in range(t, cols):
            a = abs(s[i][j])
            if a != 0 and (best is None or a < best):
                best, pivot = a, (i, j)
    return pivot


def _divisibility_offender(s, t, rows, cols):
    p = s[t][t]
    for i in range(t + 1, rows):
        for j in range(t + 1, cols):
            if s[i][j] % p:
                return (i, j)
    return None


def kernel_data(matrix):
    """Integer kernel basis (columns) of the matrix together with dual
    integer functionals: dual_i(basis_j) = delta_ij."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    u, s, v, vinv = smith_normal_form(matrix)
    indices = [
        j for j in range(cols) if j >= rows or s[j][j] == 0
    ]
    basis = [[v[r][j] for r in range(cols)] for j in indices]
    duals = [list(vinv[j]) for j in indices]
    return basis, duals


def rational_solve(matrix, rhs):
    """One exact solution of `matrix @ x = rhs` over the rationals, or
    None when the system is inconsistent.  Free variables are set to 0."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    a = [[as_fraction(x) for x in row] + [as_fraction(b)] for row, b in zip(matrix, rhs)]
    pivots = []
    r = 0
    for c in range(cols):
        pivot_row = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if pivot_row is None:
            continue
        a[r], a[pivot_row] = a[pivot_row], a[r]
        scale = a[r][c]
        a[r] = [x / scale for x in a[r]]
        for i in range(rows):
            if i != r and a[i][c] != 0:
                factor = a[i][c]
                a[i] = [x - factor * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    for i in range(r, rows):
        if a[i][cols] != 0:
            return None
    solution = [Fraction(0)] * cols
    for row_index, c in enumerate(pivots):
        solution[c] = a[row_index][cols]
    return solution
