"""Newton-Raphson iteration with the benchmark's convergence rules, and a
bisection root finder kept independent of it for ground-truth checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

from .expr import Expr, compile_expr

CONVERGED = "converged"
DERIVATIVE_VANISHED = "derivative_vanished"
MAX_ITERATIONS = "max_iterations"
EVAL_ERROR = "eval_error"

# |f'| below this is treated as exactly zero; only guards the division
TINY_DERIVATIVE = 1e-300


class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "residual"
    tolerance: float = 1e-4
    max_iterations: int = 1000
    rounding_digits: int = 3

    def __post_init__(self):
        if self.mode not in ("replication", "residual"):
            raise ValueError(f"mode must be 'replication' or 'residual', got {self.mode!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.rounding_digits < 0:
            raise ValueError("rounding_digits must be non-negative")


@dataclass(frozen=True)
class SolveOutcome:
    status: str
    root: Optional[float]
    iterations: int
    final_residual: float
    unrounded: Optional[float] = field(default=None, compare=False)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise BracketError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")


def round_half_away(value: float, digits: int) -> float:
    """Round to ``digits`` decimals, ties away from zero on the shortest repr.

    >>> round_half_away(2.0005, 3)
    2.001
    >>> round_half_away(-0.0125, 3)
    -0.013
    """
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def newton_raphson(
    f: Expr,
    fprime: Expr,
    x0: float,
    config: SolverConfig = SolverConfig(),
    ground_truth: Optional[float] = None,
) -> SolveOutcome:
    """Run the Newton loop on ``f`` from ``x0``.

    In ``replication`` mode the loop stops once the new iterate is within
    ``tolerance`` of ``ground_truth``; in ``residual`` mode once
    ``|f(x_new)| < tolerance``. Iteration counts start at 1, so a root found
    by the first step reports ``iterations == 1``.
    """
    if not math.isfinite(x0):
        raise ValueError(f"initial guess must be finite, got {x0!r}")
    replication = config.mode == "replication"
    if replication and ground_truth is None:
        raise ValueError("replication mode needs a ground truth")

    fn = compile_expr(f)
    dfn = compile_expr(fprime)
    digits = config.rounding_digits
    x = float(x0)

    for it in range(1, config.max_iterations + 1):
        fval = fn(x)
        dval = dfn(x)
        if not (math.isfinite(fval) and math.isfinite(dval)):
            return SolveOutcome(EVAL_ERROR, None, it, fval, x)
        if dval == 0 or abs(dval) < TINY_DERIVATIVE:
            return SolveOutcome(DERIVATIVE_VANISHED, None, it, fval, x)
        x_new = x - fval / dval
        if not math.isfinite(x_new):
            return SolveOutcome(EVAL_ERROR, None, it, fval, x_new)
        f_new = fn(x_new)
        if replication:
            error = abs(x_new - ground_truth)
        else:
            error = abs(f_new)
        if error < config.tolerance:
            return SolveOutcome(CONVERGED, round_half_away(x_new, digits), it, f_new, x_new)
        x = x_new

    return SolveOutcome(
        MAX_ITERATIONS, round_half_away(x, digits), config.max_iterations, fn(x), x
    )


def bisection_oracle(f: Expr, bracket: Bracket, tolerance: float = 1e-10) -> float:
    """Root of ``f`` inside ``bracket`` by plain interval halving.

    Stops when the bracket is narrower than ``tolerance`` (or can no longer
    shrink in floating point) and returns its midpoint. An endpoint that is
    an exact zero is returned as is.
    """
    fn = compile_expr(f)
    lo, hi = float(bracket.lo), float(bracket.hi)
    flo, fhi = fn(lo), fn(hi)
    if not (math.isfinite(flo) and math.isfinite(fhi)):
        raise BracketError(f"non-finite residual at bracket ends: f({lo})={flo}, f({hi})={fhi}")
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo < 0) == (fhi < 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")

    while hi - lo >= tolerance:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = fn(mid)
        if math.isnan(fmid):
            raise BracketError(f"residual is NaN at {mid} inside the bracket")
        if fmid == 0:
            return mid
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)
