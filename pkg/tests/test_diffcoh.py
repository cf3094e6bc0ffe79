"""Differential-cocycle triples, their groupoid, circle-map functoriality,
and the integrality lift.

Frozen oracles: the degree-1 staircase on the 4-circle lifts to
(0, 1/4, 1/2, 3/4) with jump data (0, 0, 0, -1) and increment total 1;
uniform torus 2-cochains lift exactly for integer totals and produce the
fundamental-cycle certificate for totals 1/2 and 13/10; the tetrahedron
period of (1, 2, 1, 2) against its alternating cycle is +-2.
"""

import random
from fractions import Fraction

import pytest

from geoquant.diffcoh import (
    CocycleError,
    CocycleMorphism,
    DifferentialCochain,
    DifferentialCocycle,
    LiftResult,
    NotComposableError,
    WindingError,
    circle_map_data,
    cocycles_equal,
    compose_morphisms,
    d_tilde,
    dch_morphism,
    dch_object,
    identity_morphism,
    integer_triple,
    integral_lift,
    invert_morphism,
    morphisms_equal,
    pullback_increment,
    zero_differential_cochain,
)
from geoquant.simplicial import (
    Cochain,
    DegreeOverflowError,
    circle_complex,
    coboundary,
    tetra_sphere,
    torus_complex,
    zero_cochain,
)

CIRCLE4 = circle_complex(4)
TORUS = torus_complex(3, 3)


def random_cochain(rng, complex, degree, integral=False):
    count = complex.simplex_count(degree)
    if integral:
        values = tuple(Fraction(rng.randint(-3, 3)) for _ in range(count))
    else:
        values = tuple(
            Fraction(rng.randint(-15, 15), rng.randint(1, 8)) for _ in range(count)
        )
    return Cochain(complex, degree, values)


def random_triple(rng, complex, degree):
    omega = (
        zero_cochain(complex, degree)
        if degree < 2
        else random_cochain(rng, complex, degree)
    )
    return DifferentialCochain(
        random_cochain(rng, complex, degree, integral=True),
        random_cochain(rng, complex, degree - 1),
        omega,
    )


# --- graded triples and the differential -----------------------------------------------


def test_triple_degree_shape_enforced():
    with pytest.raises(CocycleError):
        DifferentialCochain(
            zero_cochain(CIRCLE4, 0), zero_cochain(CIRCLE4, 0), zero_cochain(CIRCLE4, 0)
        )


def test_triple_integrality_enforced():
    c = Cochain(CIRCLE4, 0, (Fraction(1, 2), 0, 0, 0))
    with pytest.raises(CocycleError):
        DifferentialCochain(c, Cochain(CIRCLE4, -1, ()), zero_cochain(CIRCLE4, 0))


def test_form_slot_vanishes_below_degree_two():
    c = zero_cochain(CIRCLE4, 1)
    h = zero_cochain(CIRCLE4, 0)
    with pytest.raises(CocycleError):
        DifferentialCochain(c, h, Cochain(CIRCLE4, 1, (1, 0, 0, 0)))


def test_differential_of_integer_function():
    m = integer_triple([1, 0, 2, 0], CIRCLE4)
    image = d_tilde(m)
    assert image.c == coboundary(m.c)
    assert image.h == -m.c
    assert image.omega.is_zero()


@pytest.mark.parametrize(
    "complex,degrees",
    [(TORUS, (0, 1)), (circle_complex(7), (0,)), (tetra_sphere(), (0, 1))],
    ids=["torus", "circle", "tetra"],
)
def test_differential_squares_to_zero(complex, degrees):
    rng = random.Random(23)
    for degree in degrees:
        for _ in range(10):
            assert d_tilde(d_tilde(random_triple(rng, complex, degree))).is_zero()


def test_differential_overflows_above_top():
    rng = random.Random(2)
    triple = random_triple(rng, CIRCLE4, 1)
    once = d_tilde(triple)
    assert once.degree == 2
    with pytest.raises(DegreeOverflowError):
        d_tilde(once)


def test_differential_is_additive():
    rng = random.Random(31)
    x = random_triple(rng, TORUS, 1)
    y = random_triple(rng, TORUS, 1)
    lhs = d_tilde(x + y)
    rhs = d_tilde(x) + d_tilde(y)
    assert (lhs - rhs).is_zero()


# --- cocycles --------------------------------------------------------------------------


def test_cocycle_accepts_exact_triple():
    rng = random.Random(7)
    h = random_cochain(rng, TORUS, 1)
    c = Cochain(TORUS, 2, tuple(Fraction(rng.randint(-2, 2)) for _ in range(18)))
    omega = c + coboundary(h)
    z = DifferentialCocycle(DifferentialCochain(c, h, omega))
    assert d_tilde(z.cochain).is_zero()


def test_cocycle_rejects_mismatched_form():
    h = zero_cochain(TORUS, 1)
    c = zero_cochain(TORUS, 2)
    omega = Cochain(TORUS, 2, (Fraction(1),) + (Fraction(0),) * 17)
    with pytest.raises(CocycleError):
        DifferentialCocycle(DifferentialCochain(c, h, omega))


def test_cocycle_requires_degree_two():
    with pytest.raises(CocycleError):
        DifferentialCocycle(zero_differential_cochain(TORUS, 1))


# --- the groupoid ----------------------------------------------------------------------


def automorphism(z, e_values, base):
    """Morphism z -> z with prescribed integer edge data summing to zero."""
    complex = z.complex
    e = Cochain(complex, 1, tuple(map(Fraction, e_values)))
    k_values = [base]
    for edge in range(complex.vertex_count - 1):
        k_values.append(k_values[-1] - e.values[edge])
    k = Cochain(complex, 0, tuple(k_values))
    return CocycleMorphism(z, z, e, k)


def test_morphism_relations_enforced():
    z = dch_object(Cochain(CIRCLE4, 1, (1, 0, 0, 0)))
    bad_e = Cochain(CIRCLE4, 1, (1, 0, 0, 0))
    with pytest.raises(CocycleError):
        CocycleMorphism(z, z, bad_e, zero_cochain(CIRCLE4, 0))


def test_identity_and_inverse():
    z = dch_object(Cochain(CIRCLE4, 1, tuple(Fraction(k, 3) for k in (1, 0, 2, -1))))
    ident = identity_morphism(z)
    auto = automorphism(z, (1, -1, 2, -2), Fraction(1, 5))
    assert morphisms_equal(compose_morphisms(ident, auto), auto)
    assert morphisms_equal(compose_morphisms(auto, ident), auto)
    round_trip = compose_morphisms(invert_morphism(auto), auto)
    assert round_trip.e.is_zero() and round_trip.k.is_zero()


def test_composition_is_associative():
    z = dch_object(Cochain(CIRCLE4, 1, (0, 0, 0, 0)))
    choices = [
        automorphism(z, e, base)
        for e in ((0, 0, 0, 0), (1, -1, 0, 0), (0, 1, 1, -2))
        for base in (Fraction(0), Fraction(1, 2), Fraction(-1, 3))
    ]
    for f in choices:
        for g in choices:
            for h in choices:
                left = compose_morphisms(h, compose_morphisms(g, f))
                right = compose_morphisms(compose_morphisms(h, g), f)
                assert left.e == right.e and left.k == right.k


def test_non_composable_pairs_rejected():
    z0 = dch_object(zero_cochain(CIRCLE4, 1))
    z1 = dch_object(Cochain(CIRCLE4, 1, (1, 0, 0, 0)))
    lifts, winding = circle_map_data(CIRCLE4, 1)
    toward_z1 = dch_morphism(zero_cochain(CIRCLE4, 1), lifts, winding)
    with pytest.raises(NotComposableError):
        compose_morphisms(toward_z1, identity_morphism(z1))


def test_class_equality_mod_integer_shifts():
    z = dch_object(zero_cochain(CIRCLE4, 1))
    a = automorphism(z, (0, 0, 0, 0), Fraction(1, 4))
    m = Cochain(CIRCLE4, 0, (1, 0, -2, 0))
    shifted = CocycleMorphism(z, z, a.e + coboundary(m), a.k - m)
    assert morphisms_equal(a, shifted)
    fractional = Cochain(CIRCLE4, 0, tuple(Fraction(1, 2) for _ in range(4)))
    not_shifted = CocycleMorphism(z, z, a.e, a.k - fractional)
    assert not morphisms_equal(a, not_shifted)


def test_class_comparison_needs_matching_endpoints():
    z0 = dch_object(zero_cochain(CIRCLE4, 1))
    z1 = dch_object(Cochain(CIRCLE4, 1, (1, 0, 0, 0)))
    with pytest.raises(CocycleError):
        morphisms_equal(identity_morphism(z0), identity_morphism(z1))


def test_automorphism_classes_are_reals_mod_integers():
    z = dch_object(Cochain(CIRCLE4, 1, tuple(Fraction(1, 4) for _ in range(4))))
    constants = [Fraction(n, 10) for n in range(10)]
    reps = [automorphism(z, (0, 0, 0, 0), c) for c in constants]
    for i, left in enumerate(reps):
        for j, right in enumerate(reps):
            assert morphisms_equal(left, right) == (i == j)
    wrapped = automorphism(z, (0, 0, 0, 0), Fraction(3, 10) + 2)
    assert morphisms_equal(reps[3], wrapped)


# --- circle-valued functions -----------------------------------------------------------


def test_object_map_on_zero_potential():
    z = dch_object(zero_cochain(CIRCLE4, 1))
    assert z.cochain.is_zero()


def test_object_map_records_curvature():
    rng = random.Random(11)
    a = random_cochain(rng, TORUS, 1)
    z = dch_object(a)
    assert z.omega == coboundary(a)
    assert z.c.is_zero()
    assert z.h == a


def test_object_map_rejects_wrong_degree():
    with pytest.raises(CocycleError):
        dch_object(zero_cochain(CIRCLE4, 0))


def test_staircase_lift_oracle():
    lifts, winding = circle_map_data(CIRCLE4, 1)
    assert lifts.values == (0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
    assert winding.values == (0, 0, 0, -1)
    increment = pullback_increment(lifts, winding)
    assert increment.values == (Fraction(1, 4),) * 4
    assert sum(increment.values) == 1


@pytest.mark.parametrize("turns", [0, 1, 3, -2])
def test_increment_total_is_the_turning_number(turns):
    lifts, winding = circle_map_data(CIRCLE4, turns)
    assert sum(pullback_increment(lifts, winding).values) == turns


def test_winding_data_must_be_integral():
    lifts = zero_cochain(CIRCLE4, 0)
    bad = Cochain(CIRCLE4, 1, (Fraction(1, 2), 0, 0, 0))
    with pytest.raises(WindingError):
        pullback_increment(lifts, bad)


def test_winding_data_must_be_closed_on_surfaces():
    lifts = zero_cochain(TORUS, 0)
    jumps = Cochain(TORUS, 1, (1,) + (0,) * 26)
    with pytest.raises(WindingError):
        pullback_increment(lifts, jumps)


def test_function_action_representative():
    a = Cochain(CIRCLE4, 1, tuple(Fraction(k, 5) for k in (1, 2, -1, 3)))
    lifts, winding = circle_map_data(CIRCLE4, 1)
    morphism = dch_morphism(a, lifts, winding)
    assert morphism.e == -winding
    assert morphism.k == lifts
    increment = pullback_increment(lifts, winding)
    assert morphism.target.h == a - increment
    assert cocycles_equal(morphism.source, dch_object(a))


def test_action_class_is_lift_independent():
    a = Cochain(CIRCLE4, 1, tuple(Fraction(k, 7) for k in (2, -3, 1, 4)))
    lifts, winding = circle_map_data(CIRCLE4, 1)
    first = dch_morphism(a, lifts, winding)
    shift = Cochain(CIRCLE4, 0, (3, 0, -1, 5))
    second = dch_morphism(a, lifts + shift, winding + coboundary(shift))
    assert pullback_increment(lifts, winding) == pullback_increment(
        lifts + shift, winding + coboundary(shift)
    )
    assert morphisms_equal(first, second)


def test_constant_integer_function_acts_as_identity():
    a = Cochain(CIRCLE4, 1, tuple(Fraction(k, 5) for k in (1, 2, -1, 3)))
    constant = Cochain(CIRCLE4, 0, (Fraction(7),) * 4)
    morphism = dch_morphism(a, constant, coboundary(constant))
    assert morphisms_equal(morphism, identity_morphism(dch_object(a)))


def test_constant_fractional_function_is_not_identity():
    a = zero_cochain(CIRCLE4, 1)
    constant = Cochain(CIRCLE4, 0, (Fraction(1, 3),) * 4)
    morphism = dch_morphism(a, constant, coboundary(constant))
    assert not morphisms_equal(morphism, identity_morphism(dch_object(a)))


def test_action_respects_composition():
    a = Cochain(CIRCLE4, 1, tuple(Fraction(k, 5) for k in (1, 2, -1, 3)))
    lifts1, winding1 = circle_map_data(CIRCLE4, 1)
    lifts3, winding3 = circle_map_data(CIRCLE4, 3, offset=Fraction(1, 8))
    first = dch_morphism(a, lifts1, winding1)
    middle = a - pullback_increment(lifts1, winding1)
    second = dch_morphism(middle, lifts3, winding3)
    composite = compose_morphisms(second, first)
    direct = dch_morphism(a, lifts1 + lifts3, winding1 + winding3)
    assert cocycles_equal(composite.target, direct.target)
    assert morphisms_equal(composite, direct)


def test_every_small_morphism_comes_from_a_function():
    """Bounded enumeration of valid representatives between two fixed
    trivial-bundle cocycles on the 4-circle; each one must agree with the
    class of the circle function built from its own (k, -e) data."""
    a = Cochain(CIRCLE4, 1, tuple(Fraction(1, 4) for _ in range(4)))
    lifts, winding = circle_map_data(CIRCLE4, 1)
    increment = pullback_increment(lifts, winding)
    target_potential = a - increment
    z, w = dch_object(a), dch_object(target_potential)
    regauge = Cochain(CIRCLE4, 0, (1, 0, 2, 0))
    found = 0
    for e0 in range(-1, 2):
        for e1 in range(-1, 2):
            for e2 in range(-1, 2):
                e3 = 1 - e0 - e1 - e2
                if abs(e3) > 1:
                    continue
                e = Cochain(CIRCLE4, 1, tuple(map(Fraction, (e0, e1, e2, e3))))
                for base in (Fraction(0), Fraction(1, 3), Fraction(1, 2)):
                    k_values = [base]
                    for edge in range(3):
                        k_values.append(
                            k_values[-1] + increment.values[edge] - e.values[edge]
                        )
                    k = Cochain(CIRCLE4, 0, tuple(k_values))
                    rep = CocycleMorphism(z, w, e, k)
                    witness = dch_morphism(
                        a, k + regauge, -e + coboundary(regauge)
                    )
                    assert morphisms_equal(rep, witness)
                    found += 1
    assert found == 48


# --- integrality lift ------------------------------------------------------------------


def uniform_torus_form(complex, total):
    count = complex.simplex_count(2)
    return Cochain(complex, 2, tuple(Fraction(total) / count for _ in range(count)))


@pytest.mark.parametrize("total", [0, 1, 2, -3])
def test_lift_succeeds_for_integer_totals(total):
    torus = torus_complex(4, 4)
    result = integral_lift(uniform_torus_form(torus, total))
    assert result.feasible
    assert sum(result.cocycle.c.values) == total
    assert result.cocycle.c.is_integral()
    defect = result.cocycle.omega - result.cocycle.c - coboundary(result.cocycle.h)
    assert defect.is_zero()


@pytest.mark.parametrize("total", [Fraction(1, 2), Fraction(13, 10)])
def test_lift_certifies_fractional_totals(total):
    torus = torus_complex(4, 4)
    result = integral_lift(uniform_torus_form(torus, total))
    assert not result.feasible
    assert result.cocycle is None
    assert result.certificate.period == total
    assert set(map(abs, result.certificate.cycle)) == {1}
    assert result.certificate.defect > Fraction(1, 10**9)


def test_lift_of_exact_coboundary_has_zero_integer_part():
    rng = random.Random(41)
    torus = torus_complex(4, 4)
    h = random_cochain(rng, torus, 1)
    result = integral_lift(coboundary(h))
    assert result.feasible
    assert result.cocycle.c.is_zero()


def test_lift_tolerates_tiny_period_defects():
    torus = torus_complex(3, 3)
    values = [Fraction(1, 18)] * 18
    values[0] += Fraction(1, 10**12)
    result = integral_lift(Cochain(torus, 2, tuple(values)))
    assert result.feasible
    assert sum(result.cocycle.c.values) == 1


def test_lift_on_tetra_sphere():
    tetra = tetra_sphere()
    good = integral_lift(Cochain(tetra, 2, (1, 2, 1, 2)))
    assert good.feasible
    assert abs(good.periods[0].period) == 2
    bad = integral_lift(Cochain(tetra, 2, (Fraction(1, 2), 0, 0, 0)))
    assert not bad.feasible
    assert abs(bad.certificate.period) == Fraction(1, 2)


def test_lift_without_triangles_is_trivial():
    circle = circle_complex(5)
    result = integral_lift(zero_cochain(circle, 2))
    assert result.feasible
    assert result.cocycle.c.values == ()
    assert result.periods == ()


def test_lift_rejects_wrong_degree():
    with pytest.raises(CocycleError):
        integral_lift(zero_cochain(TORUS, 1))


def test_lift_result_periods_table():
    torus = torus_complex(3, 3)
    result = integral_lift(uniform_torus_form(torus, 2))
    assert isinstance(result, LiftResult)
    assert len(result.periods) == 1
    record = result.periods[0]
    assert record.period == 2
    assert record.nearest == 2
    assert record.defect == 0
