"""Parser, evaluator and derivative tests for the expression engine.

Derivative checks run against two independent oracles: hand-derived
closed forms frozen here, and central finite differences.
"""

import math

import pytest
from hypothesis import given, settings, strategies as st

from geoquant import expr
from geoquant.expr import (
    EvaluationError,
    Expression,
    NumericField,
    ParseError,
    UnknownIdentifierError,
    parse,
)

QP = ("q", "p")


def fd_derivative(f, point, index, h=1e-6):
    """Central-difference oracle, independent of the symbolic rules."""
    upper = list(point)
    lower = list(point)
    upper[index] += h
    lower[index] -= h
    return (f(upper) - f(lower)) / (2 * h)


# --- parsing ----------------------------------------------------------------


def test_parse_precedence_and_power():
    e = parse("q + p*q^2", QP)
    assert e.evaluate((2.0, 3.0)) == 2.0 + 3.0 * 4.0


def test_power_right_associative():
    e = parse("q^p^2", QP)
    # q^(p^2), not (q^p)^2
    assert e.evaluate((2.0, 2.0)) == pytest.approx(2.0 ** 4.0)


def test_unary_minus_binds_below_power():
    e = parse("-q^2", QP)
    assert e.evaluate((3.0, 0.0)) == -9.0


def test_double_star_alias():
    assert parse("q**3", QP).evaluate((2.0, 0.0)) == 8.0


def test_pi_constant():
    assert parse("cos(pi)", QP).evaluate((0.0, 0.0)) == pytest.approx(-1.0)


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        parse("sin(q)*exp(p", QP)
    assert err.value.position == 12


def test_unknown_identifier_named():
    with pytest.raises(UnknownIdentifierError) as err:
        parse("q + zap", QP)
    assert err.value.name == "zap"
    assert err.value.position == 4


def test_unknown_function_named():
    with pytest.raises(UnknownIdentifierError):
        parse("tan(q)", QP)


def test_deep_nesting_rejected_not_crash():
    with pytest.raises(ParseError):
        parse("(" * 500 + "q" + ")" * 500, QP)


@given(st.text(max_size=80))
@settings(max_examples=300, deadline=None)
def test_parser_total_on_arbitrary_text(source):
    """Any input either parses or raises a positioned ParseError."""
    try:
        e = parse(source, QP)
    except ParseError as err:
        assert isinstance(err.position, int)
        assert 0 <= err.position <= len(source)
    else:
        assert isinstance(e, Expression)


def test_print_parse_print_idempotent():
    samples = [
        "q^2/2 + p^2/2",
        "-q^2",
        "sin(q)*cos(p) - exp(q/(1 + p^2))",
        "q^(1/2) + sqrt(p)",
        "1/(q - p) - (q - p)/2",
        "2.5*q^-2",
    ]
    for source in samples:
        once = str(parse(source, QP))
        twice = str(parse(once, QP))
        assert once == twice


# --- evaluation domain errors -------------------------------------------------


def test_log_domain_error():
    with pytest.raises(EvaluationError):
        parse("log(q)", QP).evaluate((-1.0, 0.0))


def test_sqrt_domain_error():
    with pytest.raises(EvaluationError):
        parse("sqrt(q)", QP).evaluate((-4.0, 0.0))


def test_division_by_zero():
    with pytest.raises(EvaluationError):
        parse("1/q", QP).evaluate((0.0, 1.0))


def test_fractional_power_of_negative_base():
    with pytest.raises(EvaluationError):
        parse("q^(1/2)", QP).evaluate((-2.0, 0.0))


def test_zero_to_negative_power():
    with pytest.raises(EvaluationError):
        parse("q^-1", QP).evaluate((0.0, 0.0))


def test_overflow_raises_not_inf():
    with pytest.raises(EvaluationError):
        parse("exp(exp(q))", QP).evaluate((100.0, 0.0))


# --- differentiation ----------------------------------------------------------


def test_power_rule_oracle():
    # d/dq q^3 = 3 q^2, frozen closed form
    d = parse("q^3", QP).differentiate("q")
    for q in (-2.0, -0.5, 0.0, 1.0, 3.0):
        assert d.evaluate((q, 0.0)) == pytest.approx(3 * q * q, abs=1e-12)


def test_rational_exponent_power_rule():
    # d/dq q^(3/2) = 1.5 q^(1/2)
    d = parse("q^(3/2)", QP).differentiate("q")
    for q in (0.25, 1.0, 4.0):
        assert d.evaluate((q, 0.0)) == pytest.approx(1.5 * math.sqrt(q), rel=1e-12)


def test_product_rule_oracle():
    # d/dq (q^2 sin(q)) = 2q sin(q) + q^2 cos(q)
    d = parse("q^2*sin(q)", QP).differentiate("q")
    for q in (-1.0, 0.5, 2.0):
        expected = 2 * q * math.sin(q) + q * q * math.cos(q)
        assert d.evaluate((q, 0.0)) == pytest.approx(expected, rel=1e-12)


def test_quotient_and_chain_rule_against_finite_differences():
    sources = [
        "sin(q*p) + cos(q)^2",
        "exp(-q^2 - p^2)",
        "log(1 + q^2 + p^2)",
        "sqrt(1 + q^2)*p",
        "(q + p)/(2 + q^2)",
        "q^(1/3 + p^2)",
    ]
    points = [(0.3, -0.7), (1.1, 0.4), (2.0, 1.5)]
    for source in sources:
        e = parse(source, QP)
        for name, index in (("q", 0), ("p", 1)):
            d = e.differentiate(name)
            for point in points:
                oracle = fd_derivative(lambda x: e.evaluate(x), point, index)
                value = d.evaluate(point)
                assert value == pytest.approx(oracle, rel=1e-6, abs=1e-8), (
                    source,
                    name,
                    point,
                )


def test_derivative_closed_over_grammar():
    """Derivatives must evaluate through the same engine (no foreign nodes)."""
    e = parse("exp(q^2)*sin(p)/sqrt(1 + p^2)", QP)
    d = e.differentiate("p").differentiate("q")
    assert math.isfinite(d.evaluate((0.2, 0.3)))
    # and printing stays parseable
    assert isinstance(parse(str(d), QP), Expression)


@given(
    st.floats(min_value=-2, max_value=2, allow_nan=False),
    st.floats(min_value=-2, max_value=2, allow_nan=False),
    st.floats(min_value=-3, max_value=3, allow_nan=False),
)
@settings(max_examples=100, deadline=None)
def test_differentiation_linear(a, b, q):
    f = parse("sin(q)*q", QP)
    g = parse("cos(q) + q^3", QP)
    combo = a * f + b * g
    left = combo.differentiate("q").evaluate((q, 0.0))
    right = a * f.differentiate("q").evaluate((q, 0.0)) + b * g.differentiate(
        "q"
    ).evaluate((q, 0.0))
    assert left == pytest.approx(right, rel=1e-9, abs=1e-9)


def test_constant_folding_only():
    assert str(parse("2*3 + q", QP)) == "6 + q"
    # no algebraic simplification beyond constants
    assert str(parse("q - q", QP)) == "q - q"


# --- compiled paths -----------------------------------------------------------


def test_compiled_matches_evaluate():
    e = parse("exp(-q^2)*sin(p) + q/(1 + p^2)", QP)
    fn = e.compiled()
    for point in [(0.1, 0.2), (-1.0, 2.0), (0.5, -0.5)]:
        assert fn(point) == pytest.approx(e.evaluate(point), rel=1e-15)


def test_compiled_numpy_vectorizes():
    np = pytest.importorskip("numpy")
    e = parse("q^2 + sin(p)", QP)
    fn = e.compiled_numpy()
    qs = np.linspace(-1, 1, 11)
    ps = np.linspace(0, 2, 11)
    out = fn((qs, ps))
    for i in range(11):
        assert out[i] == pytest.approx(e.evaluate((qs[i], ps[i])))


# --- opaque callables ----------------------------------------------------------


def test_numeric_field_fd_step_and_accuracy():
    field = NumericField(lambda x: math.sin(x[0]) * x[1], QP)
    d = field.differentiate("q")
    assert d.evaluate((0.7, 2.0)) == pytest.approx(2.0 * math.cos(0.7), rel=1e-8)


def test_numeric_field_combines_with_expressions():
    field = NumericField(lambda x: x[0] ** 2, QP)
    e = parse("p", QP)
    combo = field * e + 1.0
    assert combo.evaluate((3.0, 4.0)) == pytest.approx(37.0)


def test_as_field_dispatch():
    assert isinstance(expr.as_field("q + p", QP), Expression)
    assert isinstance(expr.as_field(lambda x: x[0], QP), NumericField)
    assert expr.as_field(2, QP).evaluate((0.0, 0.0)) == 2.0
