"""Coefficient expressions in ``t``: parsing, evaluation and canonical printing.

Grammar (see docs/grammar.md)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = "-" unary | power ;
    power    = primary [ "^" exponent ] ;
    exponent = [ "-" ] power ;          (constant only)
    primary  = number | "t" | func "(" expr ")" | "(" expr ")" ;

A minus sign written directly in front of a number literal (and not
followed by ``^``) is read as part of the literal, so ``-1.5`` is the
constant -1.5 while ``-(1.5)`` is a negation node.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

from tsdelay.errors import EvalError, ExprSyntaxError

Span = Union[tuple[int, int], None]

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "abs")


@dataclass(frozen=True)
class Num:
    value: float
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str = "t"
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr
    span: Span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: Expr
    span: Span = field(default=None, compare=False, repr=False)


Expr = Union[Num, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# tokens
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = len(text) - len(text[pos:].lstrip())
            if rest == len(text):
                break
            raise ExprSyntaxError(rest, f"unexpected character {text[rest]!r}")
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_OPERAND = frozenset({"number", "t", "function", "(", "-"})


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def fail(self, expected: frozenset[str]) -> ExprSyntaxError:
        tok = self.tok
        got = "end of input" if tok.kind == "end" else repr(tok.text)
        return ExprSyntaxError(tok.pos, f"expected {' or '.join(sorted(expected))}, got {got}", expected)

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise self.fail(frozenset({"operator", "end of input"}))
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            right = self.term()
            left = BinOp(op, left, right, (left.span[0], right.span[1]))
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take().text
            right = self.unary()
            left = BinOp(op, left, right, (left.span[0], right.span[1]))
        return left

    def unary(self) -> Expr:
        tok = self.tok
        if tok.kind == "op" and tok.text == "-":
            nxt, after = self.peek(), self.peek(2)
            if nxt.kind == "num" and not (after.kind == "op" and after.text == "^"):
                self.i += 2
                return Num(-float(nxt.text), (tok.pos, nxt.pos + len(nxt.text)))
            self.take()
            operand = self.unary()
            return Neg(operand, (tok.pos, operand.span[1]))
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            start = self.tok.pos
            exponent = self.exponent()
            if _has_var(exponent):
                raise ExprSyntaxError(start, "exponent must be constant", frozenset({"constant"}))
            return BinOp("^", base, exponent, (base.span[0], exponent.span[1]))
        return base

    def exponent(self) -> Expr:
        tok = self.tok
        if tok.kind == "op" and tok.text == "-":
            return self.unary()
        return self.power()

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text), (tok.pos, tok.pos + len(tok.text)))
        if tok.kind == "name":
            if tok.text == "t":
                self.take()
                return Var("t", (tok.pos, tok.pos + 1))
            if tok.text in FUNCTIONS:
                self.take()
                if not (self.tok.kind == "op" and self.tok.text == "("):
                    raise self.fail(frozenset({"("}))
                self.take()
                arg = self.expr()
                close = self.tok
                if not (close.kind == "op" and close.text == ")"):
                    raise self.fail(frozenset({")", "operator"}))
                self.take()
                return Call(tok.text, arg, (tok.pos, close.pos + 1))
            raise ExprSyntaxError(tok.pos, f"unknown name {tok.text!r}", _OPERAND)
        if tok.kind == "op" and tok.text == "(":
            self.take()
            inner = self.expr()
            close = self.tok
            if not (close.kind == "op" and close.text == ")"):
                raise self.fail(frozenset({")", "operator"}))
            self.take()
            return _respan(inner, (tok.pos, close.pos + 1))
        raise self.fail(_OPERAND)


def _respan(e: Expr, span: tuple[int, int]) -> Expr:
    # parenthesised subexpressions report the span including the brackets
    return type(e)(**{**{k: getattr(e, k) for k in e.__dataclass_fields__}, "span": span})


def _has_var(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, Num):
        return False
    if isinstance(e, Neg):
        return _has_var(e.operand)
    if isinstance(e, Call):
        return _has_var(e.arg)
    return _has_var(e.left) or _has_var(e.right)


def parse(text: str) -> Expr:
    """Parse expression text into an AST."""
    if not text or not text.strip():
        raise ExprSyntaxError(0, "empty expression", _OPERAND)
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _call(func: str, x: float) -> float:
    if func == "exp":
        return math.exp(x)
    if func == "log":
        if x <= 0:
            raise ValueError("log of a nonpositive number")
        return math.log(x)
    if func == "sin":
        return math.sin(x)
    if func == "cos":
        return math.cos(x)
    if func == "sqrt":
        if x < 0:
            raise ValueError("sqrt of a negative number")
        return math.sqrt(x)
    return abs(x)


def evaluate(e: Expr, t: float, source: str | None = None) -> float:
    """Evaluate ``e`` at ``t`` in double precision.

    Domain errors become ``EvalError`` carrying the span of the failing node.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(t)
    try:
        if isinstance(e, Neg):
            return -evaluate(e.operand, t, source)
        if isinstance(e, Call):
            return _call(e.func, evaluate(e.arg, t, source))
        lv = evaluate(e.left, t, source)
        rv = evaluate(e.right, t, source)
        if e.op == "+":
            return lv + rv
        if e.op == "-":
            return lv - rv
        if e.op == "*":
            return lv * rv
        if e.op == "/":
            if rv == 0:
                raise ZeroDivisionError("division by zero")
            return lv / rv
        return math.pow(lv, rv)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        if isinstance(exc, EvalError):
            raise
        text = source[e.span[0] : e.span[1]] if source is not None and e.span is not None else None
        raise EvalError(str(exc), e.span, text) from None


class Compiled:
    """A parsed expression usable as ``f(t)``; keeps the source for error messages."""

    def __init__(self, text: str):
        self.text = text
        self.expr = parse(text)

    def __call__(self, t: float) -> float:
        return evaluate(self.expr, t, self.text)

    def __repr__(self) -> str:
        return f"Compiled({self.text!r})"


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------


def format_expr(e: Expr) -> str:
    """Canonical fully parenthesised text; ``parse(format_expr(e)) == e``."""
    if isinstance(e, Num):
        s = repr(float(e.value))
        return f"({s})" if s.startswith("-") else s
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Neg):
        return f"(-({format_expr(e.operand)}))"
    if isinstance(e, Call):
        return f"{e.func}({format_expr(e.arg)})"
    return f"({format_expr(e.left)}{e.op}{format_expr(e.right)})"
