"""Arithmetic expression ASTs over state and input variables.

Grammar (documented in the README):

    expr   := ['-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ['^' ['-'] int]
    atom   := number | var | func '(' expr ')' | '(' expr ')'
    func   := sin | cos | exp | tanh | abs | neg
    var    := x1..xn | u1..up

State variables are x1..xn, input variables u1..un.  Expressions evaluate
either at a point (floats) or over a box (interval extension); the interval
evaluation is a sound inclusion function of the pointwise one.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

from .intervals import (
    Box,
    Interval,
    IntervalError,
    iabs,
    iadd,
    icos,
    idiv,
    iexp,
    imul,
    ineg,
    ipow,
    isin,
    isub,
    itanh,
)


class ExprSyntaxError(ValueError):
    """Malformed expression text; carries the character position."""

    def __init__(self, message: str, pos: int) -> None:
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class UndeclaredVariableError(ValueError):
    def __init__(self, name: str, n: int, p: int, pos: int) -> None:
        super().__init__(
            f"undeclared variable '{name}' (declared: x1..x{n}, u1..u{p}) at position {pos}"
        )
        self.pos = pos


class EvaluationError(ArithmeticError):
    """Division by zero or a non-finite intermediate value."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # 'x' or 'u'
    index: int  # 1-based


@dataclass(frozen=True)
class Unary:
    op: str  # neg, sin, cos, exp, tanh, abs
    arg: "ExprAST"


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * /
    left: "ExprAST"
    right: "ExprAST"


@dataclass(frozen=True)
class Power:
    base: "ExprAST"
    exponent: int


ExprAST = Union[Const, Var, Unary, BinOp, Power]

_FUNCS = ("sin", "cos", "exp", "tanh", "abs", "neg")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ExprSyntaxError(f"unexpected character {text[pos:].strip()[0]!r}", pos)
        if m.lastgroup is None:
            break
        tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n: int, p: int) -> None:
        self.tokens = _tokenize(text)
        self.i = 0
        self.n = n
        self.p = p

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, pos = self.peek()
        if val != value:
            raise ExprSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos)
        self.advance()

    def parse(self) -> ExprAST:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {val!r}", pos)
        return node

    def expr(self) -> ExprAST:
        negate = False
        if self.peek()[1] == "-":
            self.advance()
            negate = True
        node = self.term()
        if negate:
            node = Unary("neg", node)
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> ExprAST:
        node = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> ExprAST:
        node = self.atom()
        if self.peek()[1] == "^":
            self.advance()
            sign = 1
            if self.peek()[1] == "-":
                self.advance()
                sign = -1
            kind, val, pos = self.advance()
            if kind != "num" or not val.isdigit():
                raise ExprSyntaxError(f"expected integer exponent, found {val!r}", pos)
            node = Power(node, sign * int(val))
        return node

    def atom(self) -> ExprAST:
        kind, val, pos = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in _FUNCS:
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return Unary("neg", inner) if val == "neg" else Unary(val, inner)
            m = re.fullmatch(r"([xu])(\d+)", val)
            if m is None:
                raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
            var_kind, idx = m.group(1), int(m.group(2))
            limit = self.n if var_kind == "x" else self.p
            if not 1 <= idx <= limit:
                raise UndeclaredVariableError(val, self.n, self.p, pos)
            return Var(var_kind, idx)
        if val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ExprSyntaxError(f"expected number, variable or '(', found {val or 'end of input'!r}", pos)


def parse_expression(text: str, n: int, p: int) -> ExprAST:
    """Parse expression text over x1..xn, u1..up into an AST."""
    return _Parser(text, n, p).parse()


def eval_point(e: ExprAST, x: Sequence[float], u: Sequence[float] = ()) -> float:
    """Evaluate at a concrete state/input point."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        vec = x if e.kind == "x" else u
        return float(vec[e.index - 1])
    if isinstance(e, Unary):
        v = eval_point(e.arg, x, u)
        if e.op == "neg":
            return -v
        if e.op == "abs":
            return abs(v)
        try:
            return getattr(math, e.op)(v)
        except (OverflowError, ValueError) as exc:
            raise EvaluationError(f"{e.op}({v}) is not finite") from exc
    if isinstance(e, BinOp):
        a = eval_point(e.left, x, u)
        b = eval_point(e.right, x, u)
        if e.op == "+":
            r = a + b
        elif e.op == "-":
            r = a - b
        elif e.op == "*":
            r = a * b
        else:
            if b == 0.0:
                raise EvaluationError("division by zero")
            r = a / b
        if not math.isfinite(r):
            raise EvaluationError(f"non-finite result in {e.op}")
        return r
    if isinstance(e, Power):
        base = eval_point(e.base, x, u)
        if e.exponent < 0 and base == 0.0:
            raise EvaluationError("zero base with negative exponent")
        r = float(base**e.exponent)
        if not math.isfinite(r):
            raise EvaluationError("non-finite result in power")
        return r
    raise TypeError(f"unknown AST node {e!r}")


_UNARY_INTERVAL = {
    "neg": ineg,
    "abs": iabs,
    "sin": isin,
    "cos": icos,
    "exp": iexp,
    "tanh": itanh,
}

_BINOP_INTERVAL = {"+": iadd, "-": isub, "*": imul, "/": idiv}


def eval_interval(e: ExprAST, X: Box, Uu: Box | None = None) -> Interval:
    """Natural interval extension over a state box and optional input box.

    Sound: eval_point(e, x, u) lies in the result for every x in X, u in Uu.
    Division by an interval containing zero raises IntervalError.
    """
    if isinstance(e, Const):
        return Interval.point(e.value)
    if isinstance(e, Var):
        if e.kind == "x":
            return X.dims[e.index - 1]
        if Uu is None:
            raise IntervalError(f"no input box given but expression uses u{e.index}")
        return Uu.dims[e.index - 1]
    if isinstance(e, Unary):
        return _UNARY_INTERVAL[e.op](eval_interval(e.arg, X, Uu))
    if isinstance(e, BinOp):
        return _BINOP_INTERVAL[e.op](eval_interval(e.left, X, Uu), eval_interval(e.right, X, Uu))
    if isinstance(e, Power):
        return ipow(eval_interval(e.base, X, Uu), e.exponent)
    raise TypeError(f"unknown AST node {e!r}")


def compile_point(e: ExprAST):
    """Compile an AST into a closure (x, u) -> float.

    Performs the same operations in the same order as eval_point, so the
    two produce bitwise-identical results; the closure form just removes
    the dispatch overhead in simulation hot loops.
    """
    if isinstance(e, Const):
        v = e.value
        return lambda x, u: v
    if isinstance(e, Var):
        idx = e.index - 1
        if e.kind == "x":
            return lambda x, u: x[idx]
        return lambda x, u: u[idx]
    if isinstance(e, Unary):
        arg = compile_point(e.arg)
        if e.op == "neg":
            return lambda x, u: -arg(x, u)
        if e.op == "abs":
            return lambda x, u: abs(arg(x, u))
        fn = getattr(math, e.op)

        def unary(x, u, arg=arg, fn=fn, op=e.op):
            v = arg(x, u)
            try:
                return fn(v)
            except (OverflowError, ValueError) as exc:
                raise EvaluationError(f"{op}({v}) is not finite") from exc

        return unary
    if isinstance(e, BinOp):
        left = compile_point(e.left)
        right = compile_point(e.right)
        if e.op == "+":
            return lambda x, u: left(x, u) + right(x, u)
        if e.op == "-":
            return lambda x, u: left(x, u) - right(x, u)
        if e.op == "*":
            return lambda x, u: left(x, u) * right(x, u)

        def div(x, u, left=left, right=right):
            b = right(x, u)
            if b == 0.0:
                raise EvaluationError("division by zero")
            return left(x, u) / b

        return div
    if isinstance(e, Power):
        base = compile_point(e.base)
        n = e.exponent

        def power(x, u, base=base, n=n):
            b = base(x, u)
            if n < 0 and b == 0.0:
                raise EvaluationError("zero base with negative exponent")
            return float(b**n)

        return power
    raise TypeError(f"unknown AST node {e!r}")


def free_vars(e: ExprAST) -> set[tuple[str, int]]:
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {(e.kind, e.index)}
    if isinstance(e, Unary):
        return free_vars(e.arg)
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Power):
        return free_vars(e.base)
    raise TypeError(f"unknown AST node {e!r}")


def to_text(e: ExprAST) -> str:
    """Render an AST back to grammar-conforming text (fully parenthesized)."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"{e.kind}{e.index}"
    if isinstance(e, Unary):
        return f"{'neg' if e.op == 'neg' else e.op}({to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Power):
        exp = str(e.exponent) if e.exponent >= 0 else f"-{-e.exponent}"
        return f"({to_text(e.base)})^{exp}"
    raise TypeError(f"unknown AST node {e!r}")
