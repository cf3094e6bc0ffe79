"""Differential cocycles on triangulated surfaces: the graded triples, the
groupoid of degree-2 cocycles, circle-map functoriality, and a
constructive integrality lift.

A degree-k triple (c, h, w) has an integer k-cochain c, a real (k-1)-
cochain h and a real k-cochain w, with w structurally zero below degree 2.
The differential sends it to (dc, w - c - dh, dw) one degree up and
squares to zero.  Degree-2 triples with dc = 0, dw = 0 and w - c - dh = 0
are the cocycles; morphisms between cocycles are classes [e, k] of an
integer 1-cochain and a real 0-cochain, taken modulo shifts by the
differential of an integer 0-cochain.

Circle-valued vertex functions, given as an arbitrary real lift plus
per-edge integer jump data, act on the trivial-bundle cocycles: the object
map sends an edge potential a to (0, a, da), and a function f with edge
increment cochain g = d(lift) - jumps sends (0, a, da) to (0, a - g, d(a - g))
through the representative (-jumps, lift).  That representative is the one
whose class does not depend on the chosen lift.

The integrality lift takes a closed real 2-cochain w, rounds its periods
over an integer homology basis (computed by Smith normal form of the
boundary matrix), and either produces a cocycle (c, h, w) with integral c
or reports the certificate cycle whose period is not close to an integer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import simplicial
from .simplicial import (
    Cochain,
    SimplicialComplex,
    as_fraction,
    coboundary,
    smith_normal_form,
    zero_cochain,
)

PERIOD_TOLERANCE = Fraction(1, 10**9)


class CocycleError(Exception):
    pass


class NotComposableError(CocycleError):
    pass


class WindingError(CocycleError):
    pass


def _is_closed(cochain: Cochain) -> bool:
    """Empty stand-in cochains above the top dimension count as closed."""
    if cochain.degree > cochain.complex.top_dimension:
        return True
    return coboundary(cochain).is_zero()


@dataclass(frozen=True)
class DifferentialCochain:
    c: Cochain
    h: Cochain
    omega: Cochain

    def __post_init__(self):
        complex = self.c.complex
        if self.h.complex != complex or self.omega.complex != complex:
            raise CocycleError("components on different complexes")
        k = self.c.degree
        if self.h.degree != k - 1 or self.omega.degree != k:
            raise CocycleError(
                f"degrees ({self.c.degree}, {self.h.degree}, {self.omega.degree}) "
                f"are not of the shape (k, k-1, k)"
            )
        if not self.c.is_integral():
            raise CocycleError("first component must be integer-valued")
        if k < 2 and not self.omega.is_zero():
            raise CocycleError("form component must vanish below degree 2")

    @property
    def complex(self) -> SimplicialComplex:
        return self.c.complex

    @property
    def degree(self) -> int:
        return self.c.degree

    def is_zero(self) -> bool:
        return self.c.is_zero() and self.h.is_zero() and self.omega.is_zero()

    def __add__(self, other: "DifferentialCochain") -> "DifferentialCochain":
        return DifferentialCochain(self.c + other.c, self.h + other.h, self.omega + other.omega)

    def __sub__(self, other: "DifferentialCochain") -> "DifferentialCochain":
        return DifferentialCochain(self.c - other.c, self.h - other.h, self.omega - other.omega)


def zero_differential_cochain(complex: SimplicialComplex, degree: int) -> DifferentialCochain:
    return DifferentialCochain(
        zero_cochain(complex, degree),
        zero_cochain(complex, degree - 1),
        zero_cochain(complex, degree),
    )


def integer_triple(values_or_cochain, complex: SimplicialComplex | None = None) -> DifferentialCochain:
    """Degree-0 triple (m, -, 0) from an integer 0-cochain; these generate
    the shifts under which morphism representatives are identified."""
    if isinstance(values_or_cochain, Cochain):
        m = values_or_cochain
    else:
        m = Cochain(complex, 0, tuple(values_or_cochain))
    if m.degree != 0 or not m.is_integral():
        raise CocycleError("need an integer 0-cochain")
    return DifferentialCochain(m, Cochain(m.complex, -1, ()), zero_cochain(m.complex, 0))


def d_tilde(x: DifferentialCochain) -> DifferentialCochain:
    """(c, h, w) -> (dc, w - c - dh, dw), one degree up."""
    new_c = coboundary(x.c)
    new_h = x.omega - x.c - coboundary(x.h)
    if x.degree + 1 < 2:
        new_omega = zero_cochain(x.complex, x.degree + 1)
    else:
        new_omega = coboundary(x.omega)
    return DifferentialCochain(new_c, new_h, new_omega)


@dataclass(frozen=True)
class DifferentialCocycle:
    """Degree-2 triple with dc = 0, dw = 0 and w - c - dh = 0 exactly."""

    cochain: DifferentialCochain

    def __post_init__(self):
        x = self.cochain
        if x.degree != 2:
            raise CocycleError(f"cocycles sit in degree 2, got {x.degree}")
        if not _is_closed(x.c):
            raise CocycleError("integer component is not closed")
        if not _is_closed(x.omega):
            raise CocycleError("form component is not closed")
        defect = x.omega - x.c - coboundary(x.h)
        if any(abs(v) > PERIOD_TOLERANCE for v in defect.values):
            raise CocycleError("form, integer and potential components do not match")

    @property
    def complex(self) -> SimplicialComplex:
        return self.cochain.complex

    @property
    def c(self) -> Cochain:
        return self.cochain.c

    @property
    def h(self) -> Cochain:
        return self.cochain.h

    @property
    def omega(self) -> Cochain:
        return self.cochain.omega


def cocycles_equal(a: DifferentialCocycle, b: DifferentialCocycle) -> bool:
    return (
        a.complex == b.complex
        and a.c.values == b.c.values
        and a.h.values == b.h.values
        and a.omega.values == b.omega.values
    )


# --- morphisms -------------------------------------------------------------------------


@dataclass(frozen=True)
class CocycleMorphism:
    """Representative (e, k) of a morphism class between two cocycles.

    Against the declared source (c, h, w) and target (c', h', w') it must
    satisfy c' - c = de, h' - h = -dk - e and w = w'.
    """

    source: DifferentialCocycle
    target: DifferentialCocycle
    e: Cochain
    k: Cochain

    def __post_init__(self):
        complex = self.source.complex
        for part in (self.target.cochain.c, self.e, self.k):
            if part.complex != complex:
                raise CocycleError("morphism data on different complexes")
        if self.e.degree != 1 or not self.e.is_integral():
            raise CocycleError("first representative slot must be an integer 1-cochain")
        if self.k.degree != 0:
            raise CocycleError("second representative slot must be a 0-cochain")
        if (self.target.c - self.source.c) != coboundary(self.e):
            raise CocycleError("integer components do not differ by de")
        expected = -coboundary(self.k) - self.e
        if (self.target.h - self.source.h) != expected:
            raise CocycleError("potential components do not differ by -dk - e")
        if self.source.omega != self.target.omega:
            raise CocycleError("form components of source and target differ")


def identity_morphism(z: DifferentialCocycle) -> CocycleMorphism:
    complex = z.complex
    return CocycleMorphism(z, z, zero_cochain(complex, 1), zero_cochain(complex, 0))


def compose_morphisms(second: CocycleMorphism, first: CocycleMorphism) -> CocycleMorphism:
    """second after first; representatives add."""
    if not cocycles_equal(first.target, second.source):
        raise NotComposableError("target of the first does not match source of the second")
    return CocycleMorphism(
        first.source, second.target, first.e + second.e, first.k + second.k
    )


def invert_morphism(m: CocycleMorphism) -> CocycleMorphism:
    return CocycleMorphism(m.target, m.source, -m.e, -m.k)


def morphisms_equal(a: CocycleMorphism, b: CocycleMorphism) -> bool:
    """Same class iff the representatives differ by the differential of an
    integer 0-cochain m; the relations force m = -(k_a - k_b), so equality
    reduces to an integrality check plus one coboundary comparison."""
    if not (cocycles_equal(a.source, b.source) and cocycles_equal(a.target, b.target)):
        raise CocycleError("morphisms compare only with equal sources and targets")
    m = -(a.k - b.k)
    if not m.is_integral():
        return False
    return (a.e - b.e) == coboundary(m)


# --- circle-valued functions on trivial bundles ---------------------------------------


def dch_object(a: Cochain) -> DifferentialCocycle:
    """Edge potential a on the trivial bundle becomes the cocycle (0, a, da)."""
    if a.degree != 1:
        raise CocycleError("potential must be an edge cochain")
    complex = a.complex
    return DifferentialCocycle(
        DifferentialCochain(zero_cochain(complex, 2), a, coboundary(a))
    )


def pullback_increment(lifts: Cochain, winding: Cochain) -> Cochain:
    """Per-edge increment of the circle-valued function: d(lifts) - winding.

    Its sum over a closed loop of edges is the function's turning number,
    independent of the lift.
    """
    if lifts.degree != 0 or winding.degree != 1:
        raise CocycleError("need vertex lifts and edge winding data")
    if not winding.is_integral():
        raise WindingError("winding data must be integer-valued")
    if winding.complex.top_dimension > 1 and not coboundary(winding).is_zero():
        raise WindingError("winding data must be closed to define a single function")
    return coboundary(lifts) - winding


def dch_morphism(
    source_potential: Cochain, lifts: Cochain, winding: Cochain
) -> CocycleMorphism:
    """The action of a circle-valued function on trivial-bundle cocycles.

    The representative is (-winding, lifts): among the pairs satisfying the
    morphism relations this is the one whose class is invariant under
    integer shifts of the lift.
    """
    g = pullback_increment(lifts, winding)
    source = dch_object(source_potential)
    target = dch_object(source_potential - g)
    return CocycleMorphism(source, target, -winding, lifts)


def circle_map_data(complex: SimplicialComplex, turns: int, offset=0):
    """Standard degree-`turns` map on a circle complex, rotated by `offset`:
    vertex i sits at angle turns * i / n + offset, lifted into [0, 1)."""
    n = complex.vertex_count
    if complex.triangles or len(complex.edges) != n:
        raise CocycleError("circle maps need a circle complex")
    offset = as_fraction(offset)
    lifts = []
    for i in range(n):
        angle = Fraction(turns * i, n) + offset
        lifts.append(angle - (angle.numerator // angle.denominator))
    lift_cochain = Cochain(complex, 0, tuple(lifts))
    increments = []
    for a, b in complex.edges:
        true_step = Fraction(turns * b, n) - Fraction(turns * a, n)
        if b < a:
            true_step += turns
        increments.append(true_step)
    winding = coboundary(lift_cochain) - Cochain(complex, 1, tuple(increments))
    return lift_cochain, winding


# --- integrality lift -------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodRecord:
    cycle: tuple
    period: Fraction
    nearest: int

    @property
    def defect(self) -> Fraction:
        return abs(self.period - self.nearest)


@dataclass(frozen=True)
class LiftResult:
    feasible: bool
    periods: tuple
    cocycle: DifferentialCocycle | None = None
    certificate: PeriodRecord | None = None


def integral_lift(omega: Cochain, tolerance: Fraction = PERIOD_TOLERANCE) -> LiftResult:
    """Split a closed real 2-cochain as w = c + dh with integral c.

    Rounds the periods of w over an integer basis of 2-cycles; a period
    further than `tolerance` from every integer is returned as the
    infeasibility certificate.  Otherwise c is assembled from the dual
    basis and h is recovered exactly through the Smith decomposition of
    the boundary matrix.
    """
    if omega.degree != 2:
        raise CocycleError("only degree-2 cochains lift")
    complex = omega.complex
    if not _is_closed(omega):
        raise CocycleError("form component is not closed")
    tolerance = as_fraction(tolerance)
    triangles = complex.simplex_count(2)
    edge_count = complex.simplex_count(1)
    if triangles == 0:
        cocycle = DifferentialCocycle(
            DifferentialCochain(
                zero_cochain(complex, 2), zero_cochain(complex, 1), omega
            )
        )
        return LiftResult(True, (), cocycle=cocycle)

    d2 = complex.boundary_matrix(2)
    u, s, v, vinv = smith_normal_form(d2)
    kernel_indices = [
        j for j in range(triangles) if j >= edge_count or s[j][j] == 0
    ]
    periods = []
    for j in kernel_indices:
        cycle = tuple(v[r][j] for r in range(triangles))
        period = omega.pair_chain(cycle)
        record = PeriodRecord(cycle, period, round(period))
        periods.append(record)
        if record.defect > tolerance:
            return LiftResult(False, tuple(periods), certificate=record)

    c_values = [Fraction(0)] * triangles
    for j, record in zip(kernel_indices, periods):
        for t in range(triangles):
            c_values[t] += record.nearest * vinv[j][t]
    c = Cochain(complex, 2, tuple(c_values))

    b = (omega - c).values
    vtb = [
        sum((Fraction(v[r][t]) * b[r] for r in range(triangles)), Fraction(0))
        for t in range(triangles)
    ]
    y = [Fraction(0)] * edge_count
    for t in range(triangles):
        diagonal = s[t][t] if t < edge_count else 0
        if diagonal:
            y[t] = vtb[t] / diagonal
        elif abs(vtb[t]) > tolerance:
            raise CocycleError(
                f"period defect {vtb[t]} survived rounding; lift inconsistent"
            )
    h_values = [
        sum((Fraction(u[r][e]) * y[r] for r in range(edge_count)), Fraction(0))
        for e in range(edge_count)
    ]
    h = Cochain(complex, 1, tuple(h_values))
    cocycle = DifferentialCocycle(DifferentialCochain(c, h, omega))
    return LiftResult(True, tuple(periods), cocycle=cocycle)
