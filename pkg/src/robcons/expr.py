"""Tiny arithmetic language for time-dependent fault signals.

Grammar (``^`` binds tighter than unary minus, and is right-associative)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | 't' | NAME '(' sum (',' sum)* ')' | '(' sum ')'

Functions: ``sin``, ``cos``, ``abs`` (one argument), ``min``, ``max`` (two or
more).  Angles are in radians.  Evaluation accepts a scalar ``t`` or a numpy
array of times.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ParseError

__all__ = ["Num", "Var", "Neg", "BinOp", "Call", "parse_signal", "eval_expression", "to_text"]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str = "t"


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


FUNCTIONS = {"sin": (1, 1), "cos": (1, 1), "abs": (1, 1), "min": (2, None), "max": (2, None)}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.tok
        if text != value or kind == "end":
            raise ParseError(f"unexpected {text or 'end of input'!r}", pos, [value])
        self.advance()

    def parse(self):
        node = self.sum()
        kind, text, pos = self.tok
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", pos, ["+", "-", "*", "/", "^", "end of input"])
        return node

    def sum(self):
        node = self.product()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.product())
        return node

    def product(self):
        node = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op, pos = self.advance()[1], self.tok[2]
            right = self.unary()
            if op == "/" and _is_constant(right) and _const_value(right) == 0:
                raise ParseError("division by constant zero", pos)
            node = BinOp(op, node, right)
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.tok
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "name":
            self.advance()
            if text == "t":
                return Var()
            if text not in FUNCTIONS:
                raise ParseError(f"unknown identifier {text!r}", pos, ["t", *FUNCTIONS])
            self.expect("(")
            args = [self.sum()]
            while self.tok[1] == ",":
                self.advance()
                args.append(self.sum())
            self.expect(")")
            lo, hi = FUNCTIONS[text]
            if len(args) < lo or (hi is not None and len(args) > hi):
                raise ParseError(f"{text}() got {len(args)} arguments", pos)
            return Call(text, tuple(args))
        if kind == "op" and text == "(":
            self.advance()
            node = self.sum()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {text or 'end of input'!r}", pos,
                         ["number", "t", "function", "(", "-"])


def _is_constant(node) -> bool:
    if isinstance(node, Num):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return _is_constant(node.operand)
    if isinstance(node, BinOp):
        return _is_constant(node.left) and _is_constant(node.right)
    return all(_is_constant(a) for a in node.args)


def _const_value(node):
    try:
        return eval_expression(node, 0.0)
    except (EvaluationError, OverflowError):
        return None


def parse_signal(text: str):
    return _Parser(text).parse()


def eval_expression(expr, t):
    """Evaluate ``expr`` at ``t`` (scalar or array); raises on division by zero."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = _eval(expr, t)
    out = np.broadcast_to(out, t.shape)
    return float(out) if scalar else np.array(out)


def _eval(node, t):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, Neg):
        return -_eval(node.operand, t)
    if isinstance(node, BinOp):
        a, b = _eval(node.left, t), _eval(node.right, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvaluationError("division by zero")
            return np.divide(a, b)
        return np.power(np.asarray(a, dtype=float), b)
    args = [_eval(a, t) for a in node.args]
    if node.name == "sin":
        return np.sin(args[0])
    if node.name == "cos":
        return np.cos(args[0])
    if node.name == "abs":
        return np.abs(args[0])
    if node.name == "min":
        return np.minimum.reduce(np.broadcast_arrays(*args))
    return np.maximum.reduce(np.broadcast_arrays(*args))


def to_text(node) -> str:
    """Render with full parenthesisation so re-parsing yields the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
