"""Symbolic derivative and light simplification of expression trees."""

from __future__ import annotations

import math

from .expr import (
    Binary,
    Call,
    Constant,
    Expr,
    Unary,
    Variable,
    add,
    call,
    const,
    contains_variable,
    div,
    evaluate,
    mul,
    neg,
    power,
    sub,
)

ZERO = Constant(0.0)
ONE = Constant(1.0)
TWO = Constant(2.0)
LN10 = Constant(math.log(10.0))


def differentiate(f: Expr) -> Expr:
    """Return d f/dx, simplified."""
    return simplify(_d(f))


def _d(f: Expr) -> Expr:
    if isinstance(f, Constant):
        return ZERO
    if isinstance(f, Variable):
        return ONE
    if isinstance(f, Unary):
        return neg(_d(f.child))
    if isinstance(f, Call):
        return _d_call(f)

    u, v = f.left, f.right
    op = f.op
    if op == "add":
        return add(_d(u), _d(v))
    if op == "sub":
        return sub(_d(u), _d(v))
    if op == "mul":
        return add(mul(_d(u), v), mul(u, _d(v)))
    if op == "div":
        return div(sub(mul(_d(u), v), mul(u, _d(v))), power(v, TWO))
    # pow
    if not contains_variable(v):
        # g * f^(g-1) * f'; avoids log(f) so negative bases stay defined
        return mul(mul(v, power(u, sub(v, ONE))), _d(u))
    return mul(
        f,
        add(mul(_d(v), call("log", u)), div(mul(v, _d(u)), u)),
    )


def _d_call(f: Call) -> Expr:
    u = f.arg
    du = _d(u)
    name = f.func
    if name == "sqrt":
        outer = div(ONE, mul(TWO, call("sqrt", u)))
    elif name == "exp":
        outer = call("exp", u)
    elif name == "log":
        outer = div(ONE, u)
    elif name == "log10":
        outer = div(ONE, mul(u, LN10))
    elif name == "sin":
        outer = call("cos", u)
    elif name == "cos":
        outer = neg(call("sin", u))
    elif name == "tan":
        outer = div(ONE, power(call("cos", u), TWO))
    elif name == "abs":
        # sign(0) == 0 by convention
        outer = call("sign", u)
    elif name == "sign":
        outer = ZERO
    else:  # pragma: no cover - the function set is closed
        raise ValueError(f"no derivative rule for {name!r}")
    return mul(outer, du)


def _value(e: Expr) -> float | None:
    """Numeric value of a variable-free constant leaf (possibly negated)."""
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, Unary) and isinstance(e.child, Constant):
        return -e.child.value
    return None


def _fold(e: Expr) -> Expr:
    if contains_variable(e):
        return e
    v = evaluate(e, 0.0)
    if math.isfinite(v):
        return const(v)
    return e


def simplify(e: Expr) -> Expr:
    """Constant folding plus the identities e+0, e-0, e*1, e*0, e/1, e^1, e^0, 0/e, --e.

    Subtrees whose folded value would be NaN or infinite are left alone so
    domain errors survive simplification.
    """
    if isinstance(e, (Constant, Variable)):
        return e
    if isinstance(e, Unary):
        c = simplify(e.child)
        if isinstance(c, Unary):
            return c.child
        cv = _value(c)
        if cv is not None:
            return const(-cv)
        return neg(c)
    if isinstance(e, Call):
        return _fold(call(e.func, simplify(e.arg)))

    a = simplify(e.left)
    b = simplify(e.right)
    av, bv = _value(a), _value(b)
    op = e.op
    if av is not None and bv is not None:
        return _fold(Binary(op, a, b))
    if op == "add":
        if av == 0:
            return b
        if bv == 0:
            return a
    elif op == "sub":
        if bv == 0:
            return a
        if av == 0:
            return simplify(neg(b))
    elif op == "mul":
        if av == 0 or bv == 0:
            return ZERO
        if av == 1:
            return b
        if bv == 1:
            return a
        if av == -1:
            return simplify(neg(b))
        if bv == -1:
            return simplify(neg(a))
    elif op == "div":
        if bv == 1:
            return a
        if av == 0:
            return ZERO
    elif op == "pow":
        if bv == 1:
            return a
        if bv == 0:
            return ONE
    return Binary(op, a, b)
