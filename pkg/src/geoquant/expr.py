"""Scalar expressions in named coordinates: parsing, evaluation, exact derivatives.

The grammar covers constants, variables, + - * /, powers, and the unary
functions sin, cos, exp, log, sqrt.  Precedence from tightest to loosest:
power, unary minus, * /, + -.  Power is right-associative, so q^p^2 reads
q^(p^2).  Both ^ and ** are accepted for powers; the printer emits ^.

Differentiation is exact (closed over the same node set) and applies
constant folding but no other simplification.  Equality of expressions is
a semantic notion here: compare values at sample points, never tree shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "Expression",
    "NumericField",
    "ExprError",
    "ParseError",
    "UnknownIdentifierError",
    "EvaluationError",
    "parse",
    "constant",
    "variable",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

_MAX_DEPTH = 200


class ExprError(Exception):
    """Base class for expression failures."""


class ParseError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, position: int):
        ParseError.__init__(self, f"unknown identifier {name!r}", position)
        self.name = name


class EvaluationError(ExprError):
    """Raised when evaluation leaves the domain (log of a nonpositive value,
    division by zero, fractional power of a negative base, overflow)."""


# --- AST -------------------------------------------------------------------


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str
    index: int


@dataclass(frozen=True)
class Add(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Sub(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Mul(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Div(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: Node


@dataclass(frozen=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node


# --- folding constructors ---------------------------------------------------
# Constant folding only; anything smarter would change evaluation semantics
# in corner cases (e.g. 0*log(q) must still hit the log domain check? No:
# 0*x folds to 0 by design, matching ordinary calculus usage).


def _const(v: float) -> Node:
    return Const(float(v))


def _is_const(n: Node, v: float | None = None) -> bool:
    if not isinstance(n, Const):
        return False
    return v is None or n.value == v


def _add(a: Node, b: Node) -> Node:
    if _is_const(a) and _is_const(b):
        return _const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Add(a, b)


def _sub(a: Node, b: Node) -> Node:
    if _is_const(a) and _is_const(b):
        return _const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _mul(a: Node, b: Node) -> Node:
    if _is_const(a) and _is_const(b):
        return _const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return _const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, -1.0):
        return _neg(b)
    if _is_const(b, -1.0):
        return _neg(a)
    return Mul(a, b)


def _div(a: Node, b: Node) -> Node:
    if _is_const(b) and b.value != 0.0 and _is_const(a):
        return _const(a.value / b.value)
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return _const(0.0)
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def _pow(a: Node, b: Node) -> Node:
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return _const(1.0)
    if _is_const(a) and _is_const(b):
        try:
            v = a.value ** b.value
        except (ValueError, OverflowError, ZeroDivisionError):
            return Pow(a, b)
        if isinstance(v, complex):
            return Pow(a, b)
        return _const(v)
    return Pow(a, b)


def _neg(a: Node) -> Node:
    if _is_const(a):
        return _const(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def _call(func: str, a: Node) -> Node:
    if _is_const(a):
        try:
            return _const(_apply_function(func, a.value))
        except EvaluationError:
            pass
    return Call(func, a)


def _apply_function(func: str, x: float) -> float:
    if func == "sin":
        return math.sin(x)
    if func == "cos":
        return math.cos(x)
    if func == "exp":
        try:
            return math.exp(x)
        except OverflowError:
            raise EvaluationError(f"exp overflow at argument {x!r}")
    if func == "log":
        if x <= 0.0:
            raise EvaluationError(f"log of nonpositive value {x!r}")
        return math.log(x)
    if func == "sqrt":
        if x < 0.0:
            raise EvaluationError(f"sqrt of negative value {x!r}")
        return math.sqrt(x)
    raise EvaluationError(f"unsupported function {func!r}")


# --- tokenizer ---------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num', 'ident', 'op', 'end'
    text: str
    pos: int


_DIGITS = "0123456789"


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _DIGITS or (ch == "." and i + 1 < n and source[i + 1] in _DIGITS):
            j = i
            while j < n and source[j] in _DIGITS:
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j] in _DIGITS:
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k] in _DIGITS:
                    j = k
                    while j < n and source[j] in _DIGITS:
                        j += 1
            tokens.append(_Token("num", source[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("ident", source[i:j], i))
            i = j
            continue
        if ch == "*" and i + 1 < n and source[i + 1] == "*":
            tokens.append(_Token("op", "^", i))
            i += 2
            continue
        if ch in "+-*/^(),":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


# --- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token], variables: tuple[str, ...]):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables
        self.depth = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ParseError(f"expected {text!r}", tok.pos)
        self.advance()

    def _enter(self, pos: int) -> None:
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            raise ParseError("expression nested too deeply", pos)

    def parse(self) -> Node:
        node = self.sum()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected token {tok.text!r}", tok.pos)
        return node

    def sum(self) -> Node:
        self._enter(self.peek().pos)
        try:
            node = self.product()
            while True:
                tok = self.peek()
                if tok.kind == "op" and tok.text in "+-":
                    self.advance()
                    rhs = self.product()
                    node = _add(node, rhs) if tok.text == "+" else _sub(node, rhs)
                else:
                    return node
        finally:
            self.depth -= 1

    def product(self) -> Node:
        self._enter(self.peek().pos)
        try:
            node = self.unary()
            while True:
                tok = self.peek()
                if tok.kind == "op" and tok.text in "*/":
                    self.advance()
                    rhs = self.unary()
                    node = _mul(node, rhs) if tok.text == "*" else _div(node, rhs)
                else:
                    return node
        finally:
            self.depth -= 1

    def unary(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self._enter(tok.pos)
            try:
                self.advance()
                return _neg(self.unary())
            finally:
                self.depth -= 1
        return self.power()

    def power(self) -> Node:
        self._enter(self.peek().pos)
        try:
            base = self.atom()
            tok = self.peek()
            if tok.kind == "op" and tok.text == "^":
                self.advance()
                # right-associative; exponent may carry a unary minus
                exponent = self.unary()
                return _pow(base, exponent)
            return base
        finally:
            self.depth -= 1

    def atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return _const(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if tok.text not in FUNCTIONS:
                    raise UnknownIdentifierError(tok.text, tok.pos)
                self.advance()
                arg = self.sum()
                self.expect(")")
                return _call(tok.text, arg)
            if tok.text in self.variables:
                return Var(tok.text, self.variables.index(tok.text))
            if tok.text == "pi":
                return _const(math.pi)
            raise UnknownIdentifierError(tok.text, tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.sum()
            self.expect(")")
            return node
        raise ParseError(
            f"unexpected token {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
            tok.pos,
        )


# --- printer -----------------------------------------------------------------

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _precedence(node: Node) -> int:
    if isinstance(node, (Add, Sub)):
        return _PREC_ADD
    if isinstance(node, (Mul, Div)):
        return _PREC_MUL
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _format_const(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _to_string(node: Node) -> str:
    if isinstance(node, Const):
        if node.value < 0:
            return "-" + _format_const(-node.value)
        return _format_const(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Add):
        return f"{_wrap(node.left, _PREC_ADD)} + {_wrap(node.right, _PREC_ADD)}"
    if isinstance(node, Sub):
        return f"{_wrap(node.left, _PREC_ADD)} - {_wrap(node.right, _PREC_ADD + 1)}"
    if isinstance(node, Mul):
        return f"{_wrap(node.left, _PREC_MUL)}*{_wrap(node.right, _PREC_MUL)}"
    if isinstance(node, Div):
        return f"{_wrap(node.left, _PREC_MUL)}/{_wrap(node.right, _PREC_MUL + 1)}"
    if isinstance(node, Neg):
        return f"-{_wrap(node.operand, _PREC_NEG)}"
    if isinstance(node, Pow):
        # base must bind tighter than the power itself; exponent may be unary
        base = _wrap(node.base, _PREC_POW + 1)
        exponent = _wrap(node.exponent, _PREC_NEG)
        return f"{base}^{exponent}"
    if isinstance(node, Call):
        return f"{node.func}({_to_string(node.arg)})"
    raise TypeError(f"unknown node {node!r}")


def _wrap(node: Node, minimum: int) -> str:
    text = _to_string(node)
    if _precedence(node) < minimum:
        return f"({text})"
    return text


# --- evaluation --------------------------------------------------------------


def _evaluate(node: Node, point) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return float(point[node.index])
    if isinstance(node, Add):
        return _evaluate(node.left, point) + _evaluate(node.right, point)
    if isinstance(node, Sub):
        return _evaluate(node.left, point) - _evaluate(node.right, point)
    if isinstance(node, Mul):
        return _evaluate(node.left, point) * _evaluate(node.right, point)
    if isinstance(node, Div):
        num = _evaluate(node.left, point)
        denom = _evaluate(node.right, point)
        if denom == 0.0:
            raise EvaluationError("division by zero")
        return num / denom
    if isinstance(node, Neg):
        return -_evaluate(node.operand, point)
    if isinstance(node, Pow):
        base = _evaluate(node.base, point)
        exponent = _evaluate(node.exponent, point)
        if base == 0.0 and exponent < 0.0:
            raise EvaluationError("zero raised to a negative power")
        if base < 0.0 and exponent != int(exponent):
            raise EvaluationError(
                f"negative base {base!r} with non-integer exponent {exponent!r}"
            )
        try:
            return base ** exponent
        except OverflowError:
            raise EvaluationError("power overflow")
    if isinstance(node, Call):
        return _apply_function(node.func, _evaluate(node.arg, point))
    raise TypeError(f"unknown node {node!r}")


# --- differentiation ---------------------------------------------------------


def _differentiate(node: Node, index: int) -> Node:
    if isinstance(node, Const):
        return _const(0.0)
    if isinstance(node, Var):
        return _const(1.0 if node.index == index else 0.0)
    if isinstance(node, Add):
        return _add(_differentiate(node.left, index), _differentiate(node.right, index))
    if isinstance(node, Sub):
        return _sub(_differentiate(node.left, index), _differentiate(node.right, index))
    if isinstance(node, Mul):
        return _add(
            _mul(_differentiate(node.left, index), node.right),
            _mul(node.left, _differentiate(node.right, index)),
        )
    if isinstance(node, Div):
        return _div(
            _sub(
                _mul(_differentiate(node.left, index), node.right),
                _mul(node.left, _differentiate(node.right, index)),
            ),
            _pow(node.right, _const(2.0)),
        )
    if isinstance(node, Neg):
        return _neg(_differentiate(node.operand, index))
    if isinstance(node, Pow):
        base, exponent = node.base, node.exponent
        dbase = _differentiate(base, index)
        if isinstance(exponent, Const):
            # power rule keeps rational exponents exact and avoids log()
            return _mul(
                _mul(exponent, _pow(base, _const(exponent.value - 1.0))), dbase
            )
        dexp = _differentiate(exponent, index)
        if isinstance(base, Const):
            return _mul(node, _mul(dexp, _const(math.log(base.value))))
        # general case needs base > 0 at evaluation time
        return _mul(
            node,
            _add(_mul(dexp, _call("log", base)), _mul(exponent, _div(dbase, base))),
        )
    if isinstance(node, Call):
        inner = _differentiate(node.arg, index)
        if node.func == "sin":
            return _mul(_call("cos", node.arg), inner)
        if node.func == "cos":
            return _neg(_mul(_call("sin", node.arg), inner))
        if node.func == "exp":
            return _mul(node, inner)
        if node.func == "log":
            return _div(inner, node.arg)
        if node.func == "sqrt":
            return _div(inner, _mul(_const(2.0), node))
        raise TypeError(f"unknown function {node.func!r}")
    raise TypeError(f"unknown node {node!r}")


# --- code generation ---------------------------------------------------------


def _emit(node: Node, names: str) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return f"{names}[{node.index}]"
    if isinstance(node, Add):
        return f"({_emit(node.left, names)} + {_emit(node.right, names)})"
    if isinstance(node, Sub):
        return f"({_emit(node.left, names)} - {_emit(node.right, names)})"
    if isinstance(node, Mul):
        return f"({_emit(node.left, names)} * {_emit(node.right, names)})"
    if isinstance(node, Div):
        return f"({_emit(node.left, names)} / {_emit(node.right, names)})"
    if isinstance(node, Neg):
        return f"(-{_emit(node.operand, names)})"
    if isinstance(node, Pow):
        return f"({_emit(node.base, names)} ** {_emit(node.exponent, names)})"
    if isinstance(node, Call):
        return f"_m.{node.func}({_emit(node.arg, names)})"
    raise TypeError(f"unknown node {node!r}")


class _NumpyModule:
    """Function table for vectorized compiled expressions."""

    def __init__(self):
        import numpy as np

        self.sin = np.sin
        self.cos = np.cos
        self.exp = np.exp
        self.log = np.log
        self.sqrt = np.sqrt


# --- public wrapper ----------------------------------------------------------


def _combine(op, a, b):
    """Arithmetic on fields: AST ops when both sides are expressions, a
    closure-backed NumericField otherwise."""
    a = _as_field(a, b)
    b = _as_field(b, a)
    if isinstance(a, Expression) and isinstance(b, Expression):
        if a.variables != b.variables:
            raise ValueError(
                f"mixed coordinate systems {a.variables} vs {b.variables}"
            )
        return Expression(op(a._node, b._node), a.variables)
    variables = a.variables if not isinstance(a, (int, float)) else b.variables
    fa = a.evaluate if not isinstance(a, (int, float)) else (lambda pt, _v=a: _v)
    fb = b.evaluate if not isinstance(b, (int, float)) else (lambda pt, _v=b: _v)

    def fn(pt):
        return _OPMAP[op](fa(pt), fb(pt))

    return NumericField(fn, variables)


def _as_field(x, other):
    if isinstance(x, (int, float)):
        if isinstance(other, Expression):
            return Expression(_const(float(x)), other.variables)
        return x
    return x


_OPMAP = {}


class Expression:
    """Immutable symbolic expression over a fixed coordinate tuple."""

    __slots__ = ("_node", "variables", "_fn", "_vfn")

    def __init__(self, node: Node, variables: tuple[str, ...]):
        self._node = node
        self.variables = tuple(variables)
        self._fn = None
        self._vfn = None

    def evaluate(self, point) -> float:
        value = _evaluate(self._node, point)
        if isinstance(value, complex) or not math.isfinite(value):
            raise EvaluationError(f"non-finite result {value!r}")
        return value

    def differentiate(self, name: str) -> "Expression":
        if name not in self.variables:
            raise ValueError(f"unknown coordinate {name!r} (have {self.variables})")
        return Expression(_differentiate(self._node, self.variables.index(name)), self.variables)

    def gradient(self) -> "tuple[Expression, ...]":
        return tuple(self.differentiate(v) for v in self.variables)

    def compiled(self):
        """Scalar fast path: a plain Python callable taking a point sequence."""
        if self._fn is None:
            source = f"lambda _x: {_emit(self._node, '_x')}"
            self._fn = eval(source, {"_m": math})
        return self._fn

    def compiled_numpy(self):
        """Vectorized path: callable taking a sequence of coordinate arrays."""
        if self._vfn is None:
            source = f"lambda _x: {_emit(self._node, '_x')}"
            self._vfn = eval(source, {"_m": _NumpyModule()})
        return self._vfn

    def is_constant(self) -> bool:
        return isinstance(self._node, Const)

    def constant_value(self) -> float:
        if not isinstance(self._node, Const):
            raise ValueError("not a constant expression")
        return self._node.value

    def depends_on(self) -> frozenset[str]:
        out: set[str] = set()
        stack = [self._node]
        while stack:
            node = stack.pop()
            if isinstance(node, Var):
                out.add(node.name)
            elif isinstance(node, (Add, Sub, Mul, Div)):
                stack.append(node.left)
                stack.append(node.right)
            elif isinstance(node, Pow):
                stack.append(node.base)
                stack.append(node.exponent)
            elif isinstance(node, Neg):
                stack.append(node.operand)
            elif isinstance(node, Call):
                stack.append(node.arg)
        return frozenset(out)

    def __str__(self) -> str:
        return _to_string(self._node)

    def __repr__(self) -> str:
        return f"Expression({_to_string(self._node)!r}, variables={self.variables})"

    def __add__(self, other):
        return _combine(_add, self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return _combine(_sub, self, other)

    def __rsub__(self, other):
        return _combine(_sub, _as_field(other, self), self)

    def __mul__(self, other):
        return _combine(_mul, self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _combine(_div, self, other)

    def __rtruediv__(self, other):
        return _combine(_div, _as_field(other, self), self)

    def __pow__(self, other):
        return _combine(_pow, self, other)

    def __neg__(self):
        return Expression(_neg(self._node), self.variables)


class NumericField:
    """Opaque scalar field with finite-difference derivatives.

    Fallback for callables supplied from outside; derivatives use central
    differences with step 1e-5 * max(1, |x_i|).  Symbolic expressions are
    always preferred when available.
    """

    __slots__ = ("fn", "variables")

    def __init__(self, fn, variables: tuple[str, ...]):
        self.fn = fn
        self.variables = tuple(variables)

    def evaluate(self, point) -> float:
        return float(self.fn(point))

    def differentiate(self, name: str) -> "NumericField":
        if name not in self.variables:
            raise ValueError(f"unknown coordinate {name!r} (have {self.variables})")
        index = self.variables.index(name)
        base = self.fn

        def derivative(point, _i=index, _f=base):
            x = list(point)
            h = 1e-5 * max(1.0, abs(float(x[_i])))
            x[_i] = float(point[_i]) + h
            upper = _f(x)
            x[_i] = float(point[_i]) - h
            lower = _f(x)
            return (upper - lower) / (2.0 * h)

        return NumericField(derivative, self.variables)

    def __add__(self, other):
        return _combine(_add, self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return _combine(_sub, self, other)

    def __rsub__(self, other):
        return _combine(_sub, other, self)

    def __mul__(self, other):
        return _combine(_mul, self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _combine(_div, self, other)

    def __rtruediv__(self, other):
        return _combine(_div, other, self)

    def __neg__(self):
        return NumericField(lambda pt, _f=self.fn: -_f(pt), self.variables)


_OPMAP = {
    _add: lambda a, b: a + b,
    _sub: lambda a, b: a - b,
    _mul: lambda a, b: a * b,
    _div: lambda a, b: a / b,
    _pow: lambda a, b: a ** b,
}


def parse(source: str, variables) -> Expression:
    """Parse source into an Expression over the given coordinate names."""
    variables = tuple(variables)
    if len(set(variables)) != len(variables):
        raise ValueError(f"duplicate coordinate names in {variables}")
    tokens = _tokenize(source)
    node = _Parser(tokens, variables).parse()
    return Expression(node, variables)


def constant(value: float, variables) -> Expression:
    return Expression(_const(float(value)), tuple(variables))


def variable(name: str, variables) -> Expression:
    variables = tuple(variables)
    return Expression(Var(name, variables.index(name)), variables)


def as_field(obj, variables):
    """Coerce a string, number, Expression, NumericField or plain callable
    into a field usable by the geometry layers."""
    variables = tuple(variables)
    if isinstance(obj, Expression) or isinstance(obj, NumericField):
        if obj.variables != variables:
            raise ValueError(f"field over {obj.variables}, expected {variables}")
        return obj
    if isinstance(obj, str):
        return parse(obj, variables)
    if isinstance(obj, (int, float)):
        return constant(float(obj), variables)
    if callable(obj):
        return NumericField(obj, variables)
    raise TypeError(f"cannot interpret {obj!r} as a scalar field")
