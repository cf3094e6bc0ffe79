"""Acceptance suite: twelve gate criteria, one prefixed PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines inline;
under plain `pytest` the line for a failing criterion appears in the
captured output.  Every criterion states its tolerance and its runtime
budget, and asserts both.
"""

import cmath
import json
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest
import yaml

from conftest import random_polynomial
from geoquant import (
    densities,
    diffcoh,
    expr,
    geometry,
    hamilton,
    polarization,
    prequantum,
    simplicial,
)
from geoquant.cli import main as cli_main
from geoquant.geometry import VectorField

SYM = geometry.canonical_symplectic(1)
CHART = SYM.chart


def _finish(criterion, started, budget, ok, detail):
    elapsed = time.perf_counter() - started
    status = "PASS" if ok and elapsed < budget else "FAIL"
    print(f"[criterion {criterion:02d}] {status} {detail} ({elapsed:.2f}s / {budget:.0f}s)")
    assert ok, f"criterion {criterion}: {detail}"
    assert elapsed < budget, f"criterion {criterion}: runtime {elapsed:.2f}s over {budget}s"


def test_criterion_01_hamiltonian_field():
    """Oscillator field equals (p, -q) pointwise; tol 1e-12, budget 1 s."""
    started = time.perf_counter()
    system = hamilton.HamiltonianSystem(SYM, "p^2 / 2 + q^2 / 2")
    field = hamilton.hamiltonian_vector_field(system)
    rng = np.random.default_rng(101)
    points = CHART.sample(rng, 100)
    worst = 0.0
    for point in points:
        q, p = point
        value = np.asarray(field.evaluate(point), dtype=float)
        worst = max(worst, float(np.max(np.abs(value - np.array([p, -q])))))
    _finish(1, started, 1.0, worst <= 1e-12, f"max |Xi_H - (p, -q)| = {worst:.3e} <= 1e-12")


def test_criterion_02_poisson_algebra():
    """Bracket identities < 1e-8 on 50 triples x 100 points; field bracket
    compatibility < 1e-9; budget 10 s."""
    started = time.perf_counter()
    rng = np.random.default_rng(202)
    points = CHART.sample(rng, 100, shrink=0.25)
    worst_identity = 0.0
    worst_field = 0.0
    for _ in range(50):
        f = random_polynomial(rng, CHART.coords)
        g = random_polynomial(rng, CHART.coords)
        h = random_polynomial(rng, CHART.coords)
        anti = hamilton.poisson_bracket(f, g, SYM) + hamilton.poisson_bracket(g, f, SYM)
        leibniz = (
            hamilton.poisson_bracket(f, g * h, SYM)
            - hamilton.poisson_bracket(f, g, SYM) * h
            - g * hamilton.poisson_bracket(f, h, SYM)
        )
        jacobi = (
            hamilton.poisson_bracket(f, hamilton.poisson_bracket(g, h, SYM), SYM)
            + hamilton.poisson_bracket(g, hamilton.poisson_bracket(h, f, SYM), SYM)
            + hamilton.poisson_bracket(h, hamilton.poisson_bracket(f, g, SYM), SYM)
        )
        xi_f = hamilton.hamiltonian_vector_field(hamilton.HamiltonianSystem(SYM, f))
        xi_g = hamilton.hamiltonian_vector_field(hamilton.HamiltonianSystem(SYM, g))
        xi_fg = hamilton.hamiltonian_vector_field(
            hamilton.HamiltonianSystem(SYM, hamilton.poisson_bracket(f, g, SYM))
        )
        commutator = hamilton.lie_bracket(xi_f, xi_g)
        for point in points:
            for identity in (anti, leibniz, jacobi):
                worst_identity = max(worst_identity, abs(identity.evaluate(point)))
            defect = np.asarray(xi_fg.evaluate(point)) - np.asarray(
                commutator.evaluate(point)
            )
            worst_field = max(worst_field, float(np.max(np.abs(defect))))
    ok = worst_identity <= 1e-8 and worst_field <= 1e-9
    _finish(
        2,
        started,
        10.0,
        ok,
        f"identities {worst_identity:.3e} <= 1e-8, field bracket {worst_field:.3e} <= 1e-9",
    )


def test_criterion_03_flow_invariance():
    """Lie derivative of the symplectic form along 20 random Hamiltonian
    fields < 1e-9 at 200 points; budget 5 s."""
    started = time.perf_counter()
    rng = np.random.default_rng(303)
    points = CHART.sample(rng, 200, shrink=0.25)
    worst = 0.0
    for _ in range(20):
        f = random_polynomial(rng, CHART.coords)
        xi = hamilton.hamiltonian_vector_field(hamilton.HamiltonianSystem(SYM, f))
        derivative = hamilton.lie_derivative_two_form(xi, SYM.two_form)
        for point in points:
            matrix = np.asarray(derivative.evaluate(point), dtype=float)
            worst = max(worst, float(np.max(np.abs(matrix))))
    _finish(3, started, 5.0, worst <= 1e-9, f"max |L_Xi omega| = {worst:.3e} <= 1e-9")


def test_criterion_04_oscillator_flow():
    """Return to start after T = 2 pi within 1e-4; energy drift < 1e-6 over
    one period and < 1e-5 over 1e6 steps; budget 30 s."""
    started = time.perf_counter()
    system = hamilton.HamiltonianSystem(SYM, "p^2 / 2 + q^2 / 2")
    period = 2 * math.pi
    step = period / 1000
    one = hamilton.integrate_flow(system, (1.0, 0.0), period, step, "leapfrog")
    returned = float(np.linalg.norm(one.states[-1] - one.states[0]))
    long = hamilton.integrate_flow(system, (1.0, 0.0), 1000 * period, step, "leapfrog")
    ok = returned <= 1e-4 and one.energy_drift <= 1e-6 and long.energy_drift <= 1e-5
    _finish(
        4,
        started,
        30.0,
        ok,
        f"return {returned:.3e} <= 1e-4, drift {one.energy_drift:.3e} <= 1e-6, "
        f"long drift {long.energy_drift:.3e} <= 1e-5 ({len(long.times) - 1} steps)",
    )


def test_criterion_05_curvature():
    """Curvature equals kappa i omega(X, Y) s within 1e-8 for random data,
    both phase conventions; budget 5 s."""
    started = time.perf_counter()
    rng = np.random.default_rng(505)
    worst = 0.0
    for kappa in (2 * math.pi, 1.0):
        bundle = prequantum.canonical_prequantum_bundle(1, kappa=kappa)
        points = bundle.chart.sample(rng, 40, shrink=0.2)
        for _ in range(5):
            x = VectorField(
                bundle.chart,
                tuple(random_polynomial(rng, bundle.chart.coords, degree=2, terms=2) for _ in range(2)),
            )
            y = VectorField(
                bundle.chart,
                tuple(random_polynomial(rng, bundle.chart.coords, degree=2, terms=2) for _ in range(2)),
            )
            section = prequantum.Section(
                bundle,
                random_polynomial(rng, bundle.chart.coords, degree=2, terms=3),
                random_polynomial(rng, bundle.chart.coords, degree=2, terms=3),
            )
            worst = max(
                worst, prequantum.curvature_residual(bundle, x, y, section, points)
            )
    _finish(5, started, 5.0, worst <= 1e-8, f"curvature residual {worst:.3e} <= 1e-8")


def test_criterion_06_operator_homomorphism():
    """[Q_f, Q_g] = Q_{{f,g}} within 1e-7 on 50 random pairs; the (q, p)
    pair gives [Q_q, Q_p]s = 2 pi i s to expression accuracy 1e-12;
    budget 10 s."""
    started = time.perf_counter()
    bundle = prequantum.canonical_prequantum_bundle(1)
    rng = np.random.default_rng(606)
    points = bundle.chart.sample(rng, 30, shrink=0.2)
    section = prequantum.Section(bundle, "1 + q/9", "p/7")
    worst = 0.0
    for _ in range(50):
        f = random_polynomial(rng, bundle.chart.coords)
        g = random_polynomial(rng, bundle.chart.coords)
        worst = max(
            worst, prequantum.commutator_residual(bundle, f, g, section, points)
        )
    p_then_q = prequantum.prequantum_operator(
        bundle, "q", prequantum.prequantum_operator(bundle, "p", section)
    )
    q_then_p = prequantum.prequantum_operator(
        bundle, "p", prequantum.prequantum_operator(bundle, "q", section)
    )
    exact = 0.0
    for point in points:
        lhs = p_then_q.evaluate(point) - q_then_p.evaluate(point)
        rhs = 2j * math.pi * section.evaluate(point)
        exact = max(exact, abs(lhs - rhs))
    ok = worst <= 1e-7 and exact <= 1e-12
    _finish(
        6,
        started,
        10.0,
        ok,
        f"commutator residual {worst:.3e} <= 1e-7, canonical pair {exact:.3e} <= 1e-12",
    )


def test_criterion_07_skew_hermiticity():
    """Quadrature residual < 1e-6 at 201^2 Simpson nodes and shrinking at
    least 4x under node doubling; budget 60 s."""
    started = time.perf_counter()
    bundle = prequantum.canonical_prequantum_bundle(1)
    a = prequantum.bump_section(bundle, extent=2.0, power=3, re_polynomial="1 + q", im_polynomial="p")
    b = prequantum.bump_section(
        bundle, extent=2.0, power=3, re_polynomial="p - q^2", im_polynomial="1 + q*p"
    )
    f = "q^2*p + q + p^2"
    coarse_grid = prequantum.QuadratureGrid(((-2.0, 2.0), (-2.0, 2.0)), (201, 201))
    coarse = prequantum.skew_hermiticity_residual(bundle, f, a, b, coarse_grid)
    fine = prequantum.skew_hermiticity_residual(bundle, f, a, b, coarse_grid.refined())
    ok = coarse <= 1e-6 and fine <= coarse / 4
    _finish(
        7,
        started,
        60.0,
        ok,
        f"residual {coarse:.3e} <= 1e-6 at 201^2, {coarse / max(fine, 1e-300):.1f}x drop at 401^2",
    )


def test_criterion_08_holonomy_obstruction():
    """Leaf holonomy matches exp(-2 pi i r^2) within 1e-8 for r^2 in
    {1/4, 1/2, 1, 2, 3}; sections exist exactly at integers; budget 5 s."""
    started = time.perf_counter()
    bundle = polarization.circle_bundle()
    worst = 0.0
    existence_ok = True
    for r_squared in (0.25, 0.5, 1.0, 2.0, 3.0):
        radius = math.sqrt(r_squared)
        value = polarization.leaf_holonomy(bundle, radius)
        closed = cmath.exp(-2j * math.pi * r_squared)
        worst = max(worst, abs(value - closed))
        exists = polarization.polarized_section_exists(bundle, radius)
        existence_ok = existence_ok and (exists == (abs(r_squared - round(r_squared)) < 1e-12))
    ok = worst <= 1e-8 and existence_ok
    _finish(
        8,
        started,
        5.0,
        ok,
        f"holonomy defect {worst:.3e} <= 1e-8, existence matches integrality: {existence_ok}",
    )


def test_criterion_09_quantizable_scalars():
    """Membership residual < 1e-9 for the fiberwise-affine family, bracket
    closure < 1e-7, operator preservation < 1e-7, and the quadratic
    counterexample >= 1e-2; budget 10 s."""
    started = time.perf_counter()
    vertical = polarization.vertical_polarization(1)
    bundle = prequantum.canonical_prequantum_bundle(1)
    rng = np.random.default_rng(909)
    points = vertical.chart.sample(rng, 60, shrink=0.1)
    family = ["p", "q", "q^2*p + sin(q)", "q*p + q^3", "(1 + q^2)*p"]
    section = prequantum.Section(bundle, "cos(q)", "sin(q)")
    worst_membership = max(
        polarization.preserves_polarization_residual(vertical, f, points) for f in family
    )
    worst_closure = 0.0
    for i, f in enumerate(family):
        for g in family[i + 1 :]:
            worst_closure = max(
                worst_closure,
                polarization.poisson_closure_residual(
                    vertical,
                    expr.parse(f, vertical.chart.coords),
                    expr.parse(g, vertical.chart.coords),
                    points,
                ),
            )
    worst_operator = max(
        polarization.operator_polarized_residual(bundle, vertical, f, section, points)
        for f in family
    )
    counterexample = polarization.preserves_polarization_residual(vertical, "p^2", points)
    ok = (
        worst_membership <= 1e-9
        and worst_closure <= 1e-7
        and worst_operator <= 1e-7
        and counterexample >= 1e-2
    )
    _finish(
        9,
        started,
        10.0,
        ok,
        f"membership {worst_membership:.3e} <= 1e-9, closure {worst_closure:.3e} <= 1e-7, "
        f"operator {worst_operator:.3e} <= 1e-7, p^2 residual {counterexample:.3e} >= 1e-2",
    )


def test_criterion_10_densities():
    """Frame equivariance, order additivity, pullback functoriality to
    1e-10; circle length 2 pi within 1e-8 through two atlases agreeing to
    1e-7; budget 10 s."""
    started = time.perf_counter()
    rng = np.random.default_rng(1010)
    worst_algebra = 0.0
    for _ in range(40):
        matrix_a = rng.uniform(-2, 2, size=(2, 2))
        matrix_b = rng.uniform(-2, 2, size=(2, 2))
        if abs(np.linalg.det(matrix_a)) < 0.1 or abs(np.linalg.det(matrix_b)) < 0.1:
            continue
        for order in (1.0, 0.5, -1.0):
            tau = densities.VectorDensity(2, order, 1.3 - 0.4j)
            frame = np.eye(2)
            lhs = tau.evaluate(frame @ matrix_a)
            rhs = tau.evaluate(frame) * abs(np.linalg.det(matrix_a)) ** order
            worst_algebra = max(worst_algebra, abs(lhs - rhs))
        sigma = densities.VectorDensity(2, 0.5, 0.7 + 0.1j)
        tau = densities.VectorDensity(2, 1.5, -0.2 + 0.9j)
        product = densities.density_product(sigma, tau)
        lhs = product.evaluate(matrix_a)
        rhs = sigma.evaluate(matrix_a) * tau.evaluate(matrix_a)
        worst_algebra = max(worst_algebra, abs(lhs - rhs))
        pulled_twice = densities.density_pullback(
            densities.density_pullback(tau, matrix_a), matrix_b
        )
        composite = densities.density_pullback(tau, matrix_a @ matrix_b)
        worst_algebra = max(
            worst_algebra, abs(pulled_twice.evaluate(np.eye(2)) - composite.evaluate(np.eye(2)))
        )
    plain = densities.ManifoldDensity(densities.circle_atlas(), 1.0, {"lower": "1", "upper": "1"})
    scaled = densities.ManifoldDensity(
        densities.scaled_circle_atlas(2.0), 1.0, {"lower": "1", "upper": "0.5"}
    )
    length_plain = densities.integrate_one_density(plain)
    length_scaled = densities.integrate_one_density(scaled)
    circumference = abs(length_plain - 2 * math.pi)
    agreement = abs(length_plain - length_scaled)
    ok = worst_algebra <= 1e-10 and circumference <= 1e-8 and agreement <= 1e-7
    _finish(
        10,
        started,
        10.0,
        ok,
        f"algebra {worst_algebra:.3e} <= 1e-10, circle {circumference:.3e} <= 1e-8, "
        f"atlases agree {agreement:.3e} <= 1e-7",
    )


def test_criterion_11_differential_cocycles():
    """delta^2 = 0 and the triple differential squares to zero exactly on
    100 random cochains per builtin complex; groupoid and functor laws on
    the 4-circle; lift-independence; integral_lift on torus totals
    {0, 1, 2, -3} and infeasibility for {1/2, 1.3}; budget 60 s."""
    started = time.perf_counter()
    rng = random.Random(1111)
    complexes = [
        simplicial.circle_complex(12),
        simplicial.torus_complex(6, 6),
        simplicial.tetra_sphere(),
    ]
    exact_ok = True
    for complex in complexes:
        degrees = (0,) if complex.top_dimension == 1 else (0, 1)
        for _ in range(100):
            degree = degrees[rng.randrange(len(degrees))]
            count = complex.simplex_count(degree)
            cochain = simplicial.Cochain(
                complex,
                degree,
                tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(count)),
            )
            exact_ok = exact_ok and simplicial.coboundary(
                simplicial.coboundary(cochain)
            ).is_zero()
            triple = diffcoh.DifferentialCochain(
                simplicial.Cochain(
                    complex, degree, tuple(Fraction(rng.randint(-3, 3)) for _ in range(count))
                ),
                simplicial.Cochain(
                    complex,
                    degree - 1,
                    tuple(
                        Fraction(rng.randint(-9, 9), rng.randint(1, 7))
                        for _ in range(complex.simplex_count(degree - 1))
                    ),
                ),
                simplicial.zero_cochain(complex, degree),
            )
            exact_ok = exact_ok and diffcoh.d_tilde(diffcoh.d_tilde(triple)).is_zero()

    circle = simplicial.circle_complex(4)
    potential = simplicial.Cochain(circle, 1, tuple(Fraction(1, 4) for _ in range(4)))
    z = diffcoh.dch_object(potential)
    autos = []
    for e_values in ((0, 0, 0, 0), (1, -1, 0, 0), (0, 1, 1, -2)):
        for base in (Fraction(0), Fraction(1, 2), Fraction(-1, 3)):
            e = simplicial.Cochain(circle, 1, tuple(map(Fraction, e_values)))
            k_values = [base]
            for edge in range(3):
                k_values.append(k_values[-1] - e.values[edge])
            k = simplicial.Cochain(circle, 0, tuple(k_values))
            autos.append(diffcoh.CocycleMorphism(z, z, e, k))
    groupoid_ok = True
    identity = diffcoh.identity_morphism(z)
    for f in autos:
        left = diffcoh.compose_morphisms(identity, f)
        right = diffcoh.compose_morphisms(f, identity)
        groupoid_ok = groupoid_ok and diffcoh.morphisms_equal(left, f)
        groupoid_ok = groupoid_ok and diffcoh.morphisms_equal(right, f)
        cancel = diffcoh.compose_morphisms(diffcoh.invert_morphism(f), f)
        groupoid_ok = groupoid_ok and cancel.e.is_zero() and cancel.k.is_zero()
        for g in autos:
            for h in autos:
                lhs = diffcoh.compose_morphisms(h, diffcoh.compose_morphisms(g, f))
                rhs = diffcoh.compose_morphisms(diffcoh.compose_morphisms(h, g), f)
                groupoid_ok = groupoid_ok and lhs.e == rhs.e and lhs.k == rhs.k

    lifts1, winding1 = diffcoh.circle_map_data(circle, 1)
    lifts2, winding2 = diffcoh.circle_map_data(circle, 2)
    first = diffcoh.dch_morphism(potential, lifts1, winding1)
    middle = potential - diffcoh.pullback_increment(lifts1, winding1)
    second = diffcoh.dch_morphism(middle, lifts2, winding2)
    functor_ok = diffcoh.morphisms_equal(
        diffcoh.compose_morphisms(second, first),
        diffcoh.dch_morphism(potential, lifts1 + lifts2, winding1 + winding2),
    )
    shift = simplicial.Cochain(circle, 0, (2, -1, 0, 3))
    regauged = diffcoh.dch_morphism(
        potential, lifts1 + shift, winding1 + simplicial.coboundary(shift)
    )
    lift_independent = diffcoh.morphisms_equal(first, regauged)

    torus = simplicial.torus_complex(8, 8)
    count = torus.simplex_count(2)
    lift_ok = True
    for total in (0, 1, 2, -3):
        form = simplicial.Cochain(
            torus, 2, tuple(Fraction(total, count) for _ in range(count))
        )
        result = diffcoh.integral_lift(form)
        lift_ok = lift_ok and result.feasible and sum(result.cocycle.c.values) == total
    for total in (Fraction(1, 2), Fraction(13, 10)):
        form = simplicial.Cochain(
            torus, 2, tuple(Fraction(total) / count for _ in range(count))
        )
        result = diffcoh.integral_lift(form)
        lift_ok = lift_ok and (not result.feasible) and result.certificate.period == total

    ok = exact_ok and groupoid_ok and functor_ok and lift_independent and lift_ok
    _finish(
        11,
        started,
        60.0,
        ok,
        f"exact laws {exact_ok}, groupoid {groupoid_ok}, functor {functor_ok}, "
        f"lift-independence {lift_independent}, 8x8 lifts {lift_ok}",
    )


def test_criterion_12_cli_determinism(tmp_path):
    """All seven commands emit byte-identical reports when re-run with the
    same config and seed; budget 120 s."""
    started = time.perf_counter()
    scenes = {
        "flow": {
            "hamiltonian": "p^2 / 2 + q^2 / 2",
            "initial": [1.0, 0.0],
            "duration": 6.283185307179586,
            "time_step": 0.006283185307179586,
            "seed": 0,
        },
        "poisson-check": {
            "functions": ["q", "p", "q*p", "q^2 + p^2", "sin(q)"],
            "triples": 10,
            "samples": 50,
            "seed": 7,
        },
        "prequantize": {
            "observables": ["q", "p"],
            "section": {"re": "1 + q", "im": "p"},
            "grid": {"nodes": 201},
            "samples": 40,
            "seed": 3,
        },
        "holonomy": {"radius_squared": 0.5, "steps": 4096, "seed": 0},
        "polarized-check": {
            "functions": ["q", "p", "q^2*p + sin(q)", "p^2"],
            "samples": 50,
            "seed": 5,
        },
        "integrate-density": {
            "atlas": "scaled-circle",
            "scale": 2.0,
            "coefficients": {"lower": "1", "upper": "0.5"},
            "seed": 2,
        },
        "cocycle": {
            "complex": {"kind": "torus", "rows": 4, "columns": 4},
            "uniform_total": -3,
            "seed": 1,
        },
    }
    identical = True
    for command, scene in scenes.items():
        config_path = tmp_path / f"{command}.yaml"
        config_path.write_text(yaml.safe_dump(scene), encoding="utf-8")
        first = tmp_path / f"{command}-a.json"
        second = tmp_path / f"{command}-b.json"
        code_a = cli_main([command, "--config", str(config_path), "--out", str(first)])
        code_b = cli_main([command, "--config", str(config_path), "--out", str(second)])
        same = first.read_bytes() == second.read_bytes()
        identical = identical and code_a == 0 and code_b == 0 and same
        body = json.loads(first.read_text())
        identical = identical and body["command"] == command
    _finish(12, started, 120.0, identical, f"7 commands re-run byte-identical: {identical}")
