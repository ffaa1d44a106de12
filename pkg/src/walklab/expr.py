"""Closed-form angle fields of time and position.

Coin angles and gauge phases are configured as plain-text expressions in
the two variables ``t`` and ``x``.  A small recursive descent parser turns
the text into an immutable syntax tree; the tree evaluates at scalar
points or on whole numpy grids.

Grammar (whitespace insensitive)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := atom ('^' factor)?          # right associative
    atom    := NUMBER | 'pi' | 'e' | 't' | 'x'
             | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.
Known functions: sin cos tan exp ln sqrt abs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "ExprDomainError",
    "parse_angle_expr",
    "eval_expr",
    "eval_on_grid",
    "to_source",
    "is_constant",
]


class ExprError(ValueError):
    """Base class for expression parsing and evaluation failures."""


class ExprSyntaxError(ExprError):
    """Malformed source text; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprDomainError(ExprError):
    """Evaluation left the real domain; carries the offending subexpression."""

    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in '{to_source(subexpr)}'")
        self.subexpr = subexpr


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    # one of the variables 't', 'x' or the constants 'pi', 'e'
    ident: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/', '^'
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Name, Neg, BinOp, Call]

_FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs")
_CONSTANTS = {"pi": np.pi, "e": np.e}
_VARIABLES = ("t", "x")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num', 'ident', 'op', 'end'
    text: str
    offset: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            # skip leading whitespace before reporting
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            bad = len(source) - len(stripped)
            raise ExprSyntaxError(f"unexpected character '{source[bad]}'", bad)
        for kind in ("num", "ident", "op"):
            text = m.group(kind)
            if text is not None:
                tokens.append(_Token(kind, text, m.start(kind)))
                break
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ExprSyntaxError(
                f"expected '{op}', found {tok.text!r}" if tok.kind != "end"
                else f"expected '{op}', found end of input",
                tok.offset,
            )
        self.advance()

    def parse(self) -> Expr:
        tree = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {tok.text!r}", tok.offset)
        return tree

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            # recurse through factor: right associative, exponent may be signed
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "ident":
            if tok.text in _VARIABLES or tok.text in _CONSTANTS:
                return Name(tok.text)
            if tok.text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(tok.text, arg)
            raise ExprSyntaxError(f"unknown identifier '{tok.text}'", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if tok.kind == "end":
            raise ExprSyntaxError(
                "expected a number, name, function call or '('; found end of input",
                tok.offset,
            )
        raise ExprSyntaxError(
            f"expected a number, name, function call or '('; found {tok.text!r}",
            tok.offset,
        )


def parse_angle_expr(source: str) -> Expr:
    """Parse ``source`` into an expression tree.

    Raises :class:`ExprSyntaxError` with a byte offset on malformed input
    and on unknown identifiers.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(source).parse()


def _eval(node: Expr, t, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.ident == "t":
            return t
        if node.ident == "x":
            return x
        return _CONSTANTS[node.ident]
    if isinstance(node, Neg):
        return -np.asarray(_eval(node.operand, t, x))
    if isinstance(node, BinOp):
        lhs = np.asarray(_eval(node.left, t, x), dtype=float)
        rhs = np.asarray(_eval(node.right, t, x), dtype=float)
        if node.op == "+":
            return lhs + rhs
        if node.op == "-":
            return lhs - rhs
        if node.op == "*":
            return lhs * rhs
        if node.op == "/":
            if np.any(rhs == 0.0):
                raise ExprDomainError("division by zero", node)
            return lhs / rhs
        # power: keep the result real
        if np.any((lhs < 0.0) & (rhs != np.floor(rhs))):
            raise ExprDomainError("negative base with non-integer exponent", node)
        if np.any((lhs == 0.0) & (rhs < 0.0)):
            raise ExprDomainError("zero base with negative exponent", node)
        return np.power(lhs, rhs)
    if isinstance(node, Call):
        arg = np.asarray(_eval(node.arg, t, x), dtype=float)
        if node.func == "ln":
            if np.any(arg <= 0.0):
                raise ExprDomainError("logarithm of a non-positive value", node)
            return np.log(arg)
        if node.func == "sqrt":
            if np.any(arg < 0.0):
                raise ExprDomainError("square root of a negative value", node)
            return np.sqrt(arg)
        if node.func == "sin":
            return np.sin(arg)
        if node.func == "cos":
            return np.cos(arg)
        if node.func == "tan":
            return np.tan(arg)
        if node.func == "exp":
            return np.exp(arg)
        if node.func == "abs":
            return np.abs(arg)
    raise TypeError(f"not an expression node: {node!r}")


def eval_on_grid(node: Expr, t, x) -> np.ndarray:
    """Evaluate ``node`` with numpy broadcasting over ``t`` and ``x``.

    The result is broadcast to the shape of ``t`` and ``x``; a final
    finiteness check turns overflow into a domain error.
    """
    value = np.asarray(_eval(node, np.asarray(t, dtype=float), np.asarray(x, dtype=float)),
                       dtype=float)
    value = np.broadcast_to(value, np.broadcast_shapes(np.shape(t), np.shape(x))).copy() \
        if value.shape != np.broadcast_shapes(np.shape(t), np.shape(x)) else value
    if not np.all(np.isfinite(value)):
        raise ExprDomainError("evaluation produced a non-finite value", node)
    return value


def eval_expr(node: Expr, t: float, x: float) -> float:
    """Evaluate ``node`` at a single space-time point in IEEE doubles."""
    return float(eval_on_grid(node, float(t), float(x)))


def is_constant(node: Expr) -> bool:
    """True when the expression contains neither ``t`` nor ``x``."""
    if isinstance(node, Num):
        return True
    if isinstance(node, Name):
        return node.ident not in _VARIABLES
    if isinstance(node, Neg):
        return is_constant(node.operand)
    if isinstance(node, BinOp):
        return is_constant(node.left) and is_constant(node.right)
    if isinstance(node, Call):
        return is_constant(node.arg)
    raise TypeError(f"not an expression node: {node!r}")


_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "neg": 30, "^": 40}


def _node_prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return 100


def to_source(node: Expr) -> str:
    """Render a tree back to text; parse(to_source(e)) reproduces ``e``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Name):
        return node.ident
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        if _node_prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        prec = _PREC[node.op]
        left = to_source(node.left)
        right = to_source(node.right)
        lp = _node_prec(node.left)
        rp = _node_prec(node.right)
        if lp < prec or (node.op == "^" and lp == prec):
            left = f"({left})"
        # left-associative: parenthesize an equal-precedence right child;
        # '^' recurses through unary on the right, so only lower goes in parens
        if rp < prec if node.op == "^" else rp <= prec:
            right = f"({right})"
        return f"{left} {node.op} {right}" if node.op in "+-" else f"{left}{node.op}{right}"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")
