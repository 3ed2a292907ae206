"""Single-variable expression trees: parsing, evaluation and rendering.

The dialect is a small subset of Python/NumPy arithmetic over one unknown
``x``::

    1/sqrt(x) + 2.0*log10((0.000045/0.15)/3.7 + 2.51/(100000*sqrt(x)))

Precedence, from tightest: ``**``/``^`` (right associative), unary minus,
``*``/``/``, ``+``/``-``. ``log`` is the natural logarithm.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

MAX_INPUT_BYTES = 64 * 1024
MAX_NESTING = 100

FUNCTIONS = ("sqrt", "exp", "log", "log10", "sin", "cos", "tan", "abs", "sign")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")
NAMED_CONSTANTS = {"pi": math.pi, "e": math.e}

_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "**"}


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        value = float(self.value)
        if not math.isfinite(value):
            raise ValueError(f"constant must be finite, got {self.value!r}")
        if value < 0:
            raise ValueError("negative constants are written as Unary('negate', Constant(...))")
        # normalise -0.0 so rendering never emits a sign
        object.__setattr__(self, "value", value + 0.0)


@dataclass(frozen=True)
class Variable:
    pass


@dataclass(frozen=True)
class Unary:
    op: str
    child: Expr

    def __post_init__(self):
        if self.op != "negate":
            raise ValueError(f"unknown unary op {self.op!r}")


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")


@dataclass(frozen=True)
class Call:
    func: str
    arg: Expr

    def __post_init__(self):
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")


Expr = Union[Constant, Variable, Unary, Binary, Call]

X = Variable()


def const(value: float) -> Expr:
    """Constant node for any finite real, negating through ``Unary`` if needed."""
    value = float(value)
    if value < 0:
        return Unary("negate", Constant(-value))
    return Constant(value)


def add(a: Expr, b: Expr) -> Binary:
    return Binary("add", a, b)


def sub(a: Expr, b: Expr) -> Binary:
    return Binary("sub", a, b)


def mul(a: Expr, b: Expr) -> Binary:
    return Binary("mul", a, b)


def div(a: Expr, b: Expr) -> Binary:
    return Binary("div", a, b)


def power(a: Expr, b: Expr) -> Binary:
    return Binary("pow", a, b)


def neg(a: Expr) -> Unary:
    return Unary("negate", a)


def call(func: str, arg: Expr) -> Call:
    return Call(func, arg)


def contains_variable(e: Expr) -> bool:
    if isinstance(e, Variable):
        return True
    if isinstance(e, Constant):
        return False
    if isinstance(e, Unary):
        return contains_variable(e.child)
    if isinstance(e, Call):
        return contains_variable(e.arg)
    return contains_variable(e.left) or contains_variable(e.right)


def count_nodes(e: Expr) -> int:
    if isinstance(e, (Constant, Variable)):
        return 1
    if isinstance(e, Unary):
        return 1 + count_nodes(e.child)
    if isinstance(e, Call):
        return 1 + count_nodes(e.arg)
    return 1 + count_nodes(e.left) + count_nodes(e.right)


# ---------------------------------------------------------------------------
# parsing

class ParseError(ValueError):
    def __init__(self, offset: int, message: str, fragment: str = ""):
        self.offset = offset
        self.message = message or "parse error"
        self.fragment = fragment
        super().__init__(f"{self.message} at byte {offset}: {fragment!r}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>(?:(?:np|numpy|math)\.)?[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    pos: int  # character offset


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(_byte_offset(text, pos), "unexpected character", text[pos:pos + 10])
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
            if kind == "name" and "." in m.group():
                # formulators are asked for NumPy syntax, so np.sqrt and math.pi
                # are read as sqrt and pi; the bare unknown may not be qualified
                qualified = m.group().split(".", 1)[1]
                if qualified == "x":
                    raise ParseError(_byte_offset(text, pos), "unknown identifier", m.group())
                tokens[-1].text = qualified
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.depth = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.tok
        pos = min(tok.pos, max(len(self.text) - 1, 0))
        fragment = tok.text or self.text[max(0, pos - 10):]
        return ParseError(_byte_offset(self.text, pos), message, fragment)

    def accept(self, *texts: str) -> _Token | None:
        if self.tok.kind == "op" and self.tok.text in texts:
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, text: str) -> _Token:
        tok = self.accept(text)
        if tok is None:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return tok

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise ParseError(0, "empty expression", self.text)
        e = self.sum()
        if self.tok.kind != "end":
            if self.tok.text == ")":
                raise self.error("unbalanced ')'")
            if self.tok.kind in ("number", "name") or self.tok.text == "(":
                raise self.error("implicit multiplication is not allowed")
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def sum(self) -> Expr:
        e = self.product()
        while True:
            tok = self.accept("+", "-")
            if tok is None:
                return e
            e = Binary("add" if tok.text == "+" else "sub", e, self.product())

    def product(self) -> Expr:
        e = self.unary()
        while True:
            tok = self.accept("*", "/")
            if tok is None:
                return e
            e = Binary("mul" if tok.text == "*" else "div", e, self.unary())

    def unary(self) -> Expr:
        if self.accept("-"):
            return self.nested(lambda: Unary("negate", self.unary()))
        if self.accept("+"):
            return self.nested(self.unary)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.accept("**", "^"):
            # exponent binds to a unary so that 2**-1 and 2^3^2 behave as in Python
            return Binary("pow", base, self.nested(self.unary))
        return base

    def nested(self, fn):
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise self.error("expression nested too deeply")
        try:
            return fn()
        finally:
            self.depth -= 1

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            value = float(tok.text)
            if not math.isfinite(value):
                raise self.error("numeric literal overflows", tok)
            return Constant(value)
        if tok.kind == "name":
            self.i += 1
            name = tok.text
            if name == "x":
                return X
            if name in NAMED_CONSTANTS:
                return Constant(NAMED_CONSTANTS[name])
            if name in FUNCTIONS:
                open_tok = self.tok
                if self.accept("(") is None:
                    raise self.error(f"function {name!r} must be called", tok)
                if self.tok.text == ")":
                    raise self.error(f"{name}() takes exactly one argument", open_tok)
                arg = self.nested(self.sum)
                if self.tok.text == ",":
                    raise self.error(f"{name}() takes exactly one argument")
                if self.tok.kind == "end":
                    raise self.error("unbalanced '('", open_tok)
                self.expect(")")
                return Call(name, arg)
            if self.tok.text == "(":
                raise self.error(f"unknown function {name!r}", tok)
            raise self.error(f"unknown identifier {name!r}", tok)
        if tok.text == "(":
            self.i += 1
            e = self.nested(self.sum)
            if self.tok.kind == "end":
                raise self.error("unbalanced '('", tok)
            self.expect(")")
            return e
        if tok.kind == "end":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {tok.text!r}")


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises :class:`ParseError` for anything outside the dialect: unknown
    names (including a second variable), bad arity, unbalanced parentheses,
    implicit multiplication and empty input.
    """
    if len(text.encode("utf-8")) > MAX_INPUT_BYTES:
        raise ParseError(MAX_INPUT_BYTES, "input exceeds 64 KiB", text[:20])
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# evaluation

def _safe(fn, *args) -> float:
    try:
        return fn(*args)
    except OverflowError:
        return math.inf
    except (ValueError, ZeroDivisionError):
        return math.nan


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _div(a: float, b: float) -> float:
    if b == 0:
        return math.nan
    return a / b


def _pow(a: float, b: float) -> float:
    if math.isnan(a) or math.isnan(b):
        return math.nan
    return _safe(math.pow, a, b)


def _sign(v: float) -> float:
    if math.isnan(v):
        return math.nan
    return float((v > 0) - (v < 0))


_FUNC_IMPL = {
    "sqrt": lambda v: _safe(math.sqrt, v),
    "exp": _exp,
    "log": lambda v: math.nan if v <= 0 else _safe(math.log, v),
    "log10": lambda v: math.nan if v <= 0 else _safe(math.log10, v),
    "sin": lambda v: _safe(math.sin, v),
    "cos": lambda v: _safe(math.cos, v),
    "tan": lambda v: _safe(math.tan, v),
    "abs": abs,
    "sign": _sign,
}


def evaluate(e: Expr, x: float) -> float:
    """Evaluate ``e`` at ``x`` in IEEE double precision.

    Domain errors (log of a non-positive value, sqrt of a negative, division
    by zero) give NaN instead of raising; overflow gives an infinity.
    """
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, Variable):
        return x
    if isinstance(e, Unary):
        return -evaluate(e.child, x)
    if isinstance(e, Call):
        return _FUNC_IMPL[e.func](evaluate(e.arg, x))
    a = evaluate(e.left, x)
    b = evaluate(e.right, x)
    op = e.op
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return _div(a, b)
    return _pow(a, b)


def compile_expr(e: Expr):
    """Return a closure ``f(x)`` equivalent to ``evaluate(e, x)`` but faster
    for repeated calls, such as inside an iterative solver."""
    if isinstance(e, Constant):
        v = e.value
        return lambda x: v
    if isinstance(e, Variable):
        return lambda x: x
    if isinstance(e, Unary):
        c = compile_expr(e.child)
        return lambda x: -c(x)
    if isinstance(e, Call):
        fn = _FUNC_IMPL[e.func]
        c = compile_expr(e.arg)
        return lambda x: fn(c(x))
    l, r = compile_expr(e.left), compile_expr(e.right)
    op = e.op
    if op == "add":
        return lambda x: l(x) + r(x)
    if op == "sub":
        return lambda x: l(x) - r(x)
    if op == "mul":
        return lambda x: l(x) * r(x)
    if op == "div":
        return lambda x: _div(l(x), r(x))
    return lambda x: _pow(l(x), r(x))


# ---------------------------------------------------------------------------
# rendering

def render(e: Expr) -> str:
    """Fully parenthesised canonical text that parses back to the same tree."""
    if isinstance(e, Constant):
        return repr(e.value)
    if isinstance(e, Variable):
        return "x"
    if isinstance(e, Unary):
        return f"(-{render(e.child)})"
    if isinstance(e, Call):
        return f"{e.func}({render(e.arg)})"
    return f"({render(e.left)} {_SYMBOLS[e.op]} {render(e.right)})"
