"""Curve expressions: tokenizer, recursive-descent parser, printer and symbolic derivatives.

Grammar (``^`` binds tightest and is right associative, then unary minus,
then ``* /``, then ``+ -``)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | 'x' | NAME '(' expr ')' | '(' expr ')'

Numbers are integer or decimal literals and are kept as exact fractions, so
``1/2*x^2`` is an exact rational coefficient times ``x^2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .curves import EXACT_ELEMENTARY, EXACT_POLYNOMIAL, Curve, Interval, Polynomial

FUNCTIONS: dict[str, Callable] = {
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "sqrt": np.sqrt,
}


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_col: int


class ParseError(ValueError):
    def __init__(self, message: str, span: Span):
        super().__init__(f"{message} at line {span.line}, column {span.col}")
        self.message = message
        self.span = span


@dataclass(frozen=True)
class Node:
    span: Span | None = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Num(Node):
    value: Fraction
    text: str = ""

    def __post_init__(self):
        if not self.text:
            object.__setattr__(self, "text", _fraction_text(self.value))


@dataclass(frozen=True)
class Var(Node):
    pass


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class Bin(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    name: str
    arg: Node


def _fraction_text(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


# ---------------------------------------------------------------- tokenizer

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)"
    r"|(?P<num>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        col = pos - line_start + 1
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", Span(line, col, col + 1))
        kind = m.lastgroup
        text = m.group()
        span = Span(line, col, col + len(text))
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind == "num":
            tail = src[m.end():m.end() + 1]
            if tail and (tail.isalnum() or tail in "._"):
                raise ParseError(f"malformed number {text + tail!r}", Span(line, col, col + len(text) + 1))
            out.append(Token("num", text, span))
        elif kind != "ws":
            out.append(Token(kind, text, span))
        pos = m.end()
    out.append(Token("eof", "", Span(line, pos - line_start + 1, pos - line_start + 1)))
    return out


# ------------------------------------------------------------------- parser

class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text:
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise ParseError(f"expected {text!r}, found {found}", tok.span)
        return self.take()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.text!r}", tok.span)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take()
            node = Bin(op.text, node, self.term(), span=op.span)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take()
            node = Bin(op.text, node, self.unary(), span=op.span)
        return node

    def unary(self) -> Node:
        if self.peek().text == "-":
            op = self.take()
            return Neg(self.unary(), span=op.span)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek().text == "^":
            op = self.take()
            start = self.peek().span
            exponent = self.unary()
            if _integer_value(exponent) is None:
                raise ParseError("exponent must be an integer constant", start)
            return Bin("^", base, exponent, span=op.span)
        return base

    def atom(self) -> Node:
        tok = self.take()
        if tok.kind == "num":
            try:
                value = Fraction(tok.text)
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"malformed number {tok.text!r}", tok.span) from None
            return Num(value, tok.text, span=tok.span)
        if tok.kind == "name":
            if tok.text == "x":
                return Var(span=tok.span)
            if tok.text not in FUNCTIONS:
                raise ParseError(f"unknown identifier {tok.text!r}", tok.span)
            self.expect("(")
            if self.peek().text == ")":
                raise ParseError(f"{tok.text}() takes exactly one argument, got 0", tok.span)
            arg = self.expr()
            if self.peek().text == ",":
                raise ParseError(f"{tok.text}() takes exactly one argument", tok.span)
            self.expect(")")
            return Call(tok.text, arg, span=tok.span)
        if tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"unexpected {found}", tok.span)


def parse_expression(src: str) -> Node:
    return _Parser(src).parse()


def _integer_value(node: Node) -> int | None:
    if isinstance(node, Num) and node.value.denominator == 1:
        return int(node.value)
    if isinstance(node, Neg):
        v = _integer_value(node.arg)
        return None if v is None else -v
    if isinstance(node, Bin) and node.op == "^":
        # right-associative towers such as 2^3 in x^2^3
        b, k = _integer_value(node.left), _integer_value(node.right)
        if b is None or k is None or k < 0 or abs(k) > 64 or abs(b) > 2**16:
            return None
        return b**k
    return None


# ------------------------------------------------------------------ printer

def to_source(node: Node) -> str:
    """Print ``node`` so that ``parse_expression(to_source(n)) == n``."""
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        inner = to_source(node.arg)
        return f"-{inner}" if isinstance(node.arg, (Num, Var, Call)) else f"-({inner})"
    if isinstance(node, Call):
        return f"{node.name}({to_source(node.arg)})"
    if node.op == "^":
        base = to_source(node.left)
        if isinstance(node.left, Neg):
            base = f"({base})"
        return f"({base}^{to_source(node.right)})"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


# ----------------------------------------------------- symbolic derivatives

ZERO, ONE = Num(Fraction(0)), Num(Fraction(1))


def const(v) -> Node:
    v = Fraction(v)
    return Neg(Num(-v)) if v < 0 else Num(v)


def _const_value(n: Node) -> Fraction | None:
    if isinstance(n, Num):
        return n.value
    if isinstance(n, Neg) and isinstance(n.arg, Num):
        return -n.arg.value
    return None


def add(a: Node, b: Node) -> Node:
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None:
        return const(ca + cb)
    if ca == 0:
        return b
    if cb == 0:
        return a
    if isinstance(b, Neg):
        return Bin("-", a, b.arg)
    return Bin("+", a, b)


def sub(a: Node, b: Node) -> Node:
    return add(a, neg(b))


def neg(a: Node) -> Node:
    ca = _const_value(a)
    if ca is not None:
        return const(-ca)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a: Node, b: Node) -> Node:
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None:
        return const(ca * cb)
    if ca == 0 or cb == 0:
        return ZERO
    if ca == 1:
        return b
    if cb == 1:
        return a
    if ca == -1:
        return neg(b)
    if cb == -1:
        return neg(a)
    return Bin("*", a, b)


def div(a: Node, b: Node) -> Node:
    ca, cb = _const_value(a), _const_value(b)
    if cb == 1:
        return a
    if ca is not None and cb is not None and cb != 0:
        return const(ca / cb)
    if ca == 0:
        return ZERO
    return Bin("/", a, b)


def power(a: Node, k: int) -> Node:
    if k == 0:
        return ONE
    if k == 1:
        return a
    ca = _const_value(a)
    if ca is not None and (ca != 0 or k > 0):
        return const(ca**k)
    return Bin("^", a, const(k))


def derivative(node: Node) -> Node:
    """Symbolic d/dx with light constant folding."""
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Neg):
        return neg(derivative(node.arg))
    if isinstance(node, Call):
        u, du = node.arg, derivative(node.arg)
        outer = {
            "exp": lambda: Call("exp", u),
            "log": lambda: div(ONE, u),
            "sin": lambda: Call("cos", u),
            "cos": lambda: neg(Call("sin", u)),
            "sqrt": lambda: div(ONE, mul(const(2), Call("sqrt", u))),
        }[node.name]()
        return mul(outer, du)
    u, v = node.left, node.right
    if node.op == "+":
        return add(derivative(u), derivative(v))
    if node.op == "-":
        return sub(derivative(u), derivative(v))
    if node.op == "*":
        return add(mul(derivative(u), v), mul(u, derivative(v)))
    if node.op == "/":
        return div(sub(mul(derivative(u), v), mul(u, derivative(v))), power(v, 2))
    k = _integer_value(v)
    return mul(mul(const(k), power(u, k - 1)), derivative(u))


# --------------------------------------------------------------- evaluation

def compile_float(node: Node) -> Callable:
    """Numpy-vectorised evaluator."""
    if isinstance(node, Num):
        c = float(node.value)
        return lambda x: c + 0.0 * x
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Neg):
        g = compile_float(node.arg)
        return lambda x: -g(x)
    if isinstance(node, Call):
        fn, g = FUNCTIONS[node.name], compile_float(node.arg)
        return lambda x: fn(g(x))
    a, b = compile_float(node.left), compile_float(node.right)
    if node.op == "+":
        return lambda x: a(x) + b(x)
    if node.op == "-":
        return lambda x: a(x) - b(x)
    if node.op == "*":
        return lambda x: a(x) * b(x)
    if node.op == "/":
        return lambda x: a(x) / b(x)
    k = _integer_value(node.right)
    return lambda x: a(x) ** k if k >= 0 else 1.0 / a(x) ** (-k)


def compile_exact(node: Node) -> Callable[[Fraction], Fraction] | None:
    """Exact rational evaluator, or None when the expression calls a transcendental function."""
    if isinstance(node, Call):
        return None
    if isinstance(node, Num):
        return lambda x, c=node.value: c
    if isinstance(node, Var):
        return lambda x: Fraction(x)
    if isinstance(node, Neg):
        g = compile_exact(node.arg)
        return None if g is None else (lambda x: -g(x))
    a, b = compile_exact(node.left), compile_exact(node.right)
    if a is None or b is None:
        return None
    if node.op == "^":
        k = _integer_value(node.right)
        return lambda x: a(x) ** k
    op = {"+": lambda p, q: p + q, "-": lambda p, q: p - q,
          "*": lambda p, q: p * q, "/": lambda p, q: p / q}[node.op]
    return lambda x: op(a(x), b(x))


def to_polynomial(node: Node) -> Polynomial | None:
    """Exact polynomial form, or None if the expression is not a polynomial in x."""
    if isinstance(node, Num):
        return Polynomial([node.value])
    if isinstance(node, Var):
        return Polynomial([0, 1])
    if isinstance(node, Neg):
        p = to_polynomial(node.arg)
        return None if p is None else -p
    if isinstance(node, Call):
        return None
    a, b = to_polynomial(node.left), to_polynomial(node.right)
    if a is None or b is None:
        return None
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if b.is_constant() and b.coeffs[0] != 0:
            return a * Polynomial([1 / b.coeffs[0]])
        return None
    k = _integer_value(node.right)
    return a**k if k >= 0 else None


def curve_from_expression(src: str, domain: Interval, **kw) -> Curve:
    """Build a Curve whose derivatives are generated symbolically from ``src``."""
    ast = parse_expression(src)
    poly = to_polynomial(ast)
    if poly is not None:
        return poly.curve(domain, name=src, **kw)
    d1 = derivative(ast)
    d2 = derivative(d1)
    return Curve(
        compile_float(ast), domain, d1=compile_float(d1), d2=compile_float(d2),
        kind=EXACT_ELEMENTARY, exact=compile_exact(ast), vectorized=True, name=src, **kw,
    )


def is_polynomial(src_or_ast) -> bool:
    ast = parse_expression(src_or_ast) if isinstance(src_or_ast, str) else src_or_ast
    return to_polynomial(ast) is not None


def kind_of(src: str) -> str:
    return EXACT_POLYNOMIAL if is_polynomial(src) else EXACT_ELEMENTARY


__all__ = [
    "Bin", "Call", "Neg", "Node", "Num", "ParseError", "Span", "Var",
    "compile_exact", "compile_float", "curve_from_expression", "derivative",
    "is_polynomial", "kind_of", "parse_expression", "to_polynomial", "to_source",
    "tokenize",
]
