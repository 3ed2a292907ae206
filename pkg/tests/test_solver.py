import math

import pytest

from hybridsolve.autodiff import differentiate
from hybridsolve.expr import parse
from hybridsolve.solver import (
    Bracket,
    BracketError,
    SolverConfig,
    bisection_oracle,
    newton_raphson,
    round_half_away,
)

from conftest import COLEBROOK_ROOT, COLEBROOK_TEXT, KEPLER_ROOT


def algorithm_trace(f, df, x0, gt, tol=1e-4, max_iter=1000):
    """Line-by-line transcription of the reference loop, for comparison."""
    x = x0
    for it in range(1, max_iter + 1):
        fv, dv = f(x), df(x)
        if dv == 0:
            return "derivative_vanished", None, it
        x_new = x - fv / dv
        if abs(x_new - gt) < tol:
            return "converged", round_half_away(x_new, 3), it
        x = x_new
    return "max_iterations", round_half_away(x, 3), max_iter


def solve(text, x0, **kw):
    gt = kw.pop("ground_truth", None)
    f = parse(text)
    return newton_raphson(f, differentiate(f), x0, SolverConfig(**kw), gt)


def test_quadratic_residual_mode():
    out = solve("x**2 - 4", 3.0)
    assert out.status == "converged"
    assert out.root == 2.0
    assert out.iterations <= 6
    assert abs(out.final_residual) < 1e-4


def test_derivative_vanishes_on_first_iteration():
    out = solve("x**2", 0.0)
    assert out.status == "derivative_vanished"
    assert out.iterations == 1
    assert out.root is None


def test_tiny_derivative_treated_as_zero():
    out = solve("1e-310*x + 1", 0.0)
    assert out.status == "derivative_vanished"


def test_kepler_replication_matches_bisection():
    f = parse("x - 0.6*sin(x) - 0.6")
    gt = bisection_oracle(f, Bracket(0.0, math.pi))
    assert gt == pytest.approx(KEPLER_ROOT, abs=1e-9)
    out = newton_raphson(f, differentiate(f), 0.6, SolverConfig(mode="replication"), gt)
    assert out.status == "converged"
    assert out.root == round_half_away(gt, 3) == 1.147


@pytest.mark.parametrize("text, df, x0, gt", [
    ("x**2 - 4", lambda x: 2 * x, 3.0, 2.0),
    ("x**2", lambda x: 2 * x, 0.0, 0.0),
    ("x - 0.6*sin(x) - 0.6", lambda x: 1 - 0.6 * math.cos(x), 0.6, KEPLER_ROOT),
    ("x**3 - 2*x + 2", lambda x: 3 * x * x - 2, 0.0, -1.7692923542386314),
])
def test_replication_trace_fidelity(text, df, x0, gt):
    f = parse(text)
    fn = lambda x: eval(text.replace("sin", "math.sin"), {"math": math, "x": x})  # noqa: E731
    expected = algorithm_trace(fn, df, x0, gt)
    out = newton_raphson(f, differentiate(f), x0, SolverConfig(mode="replication"), gt)
    assert (out.status, out.root, out.iterations) == expected


def test_oscillation_hits_cap():
    out = solve("x**3 - 2*x + 2", 0.0)
    assert out.status == "max_iterations"
    assert out.iterations == 1000
    assert out.root in (0.0, 1.0)


def test_eval_error_on_nan_iterate():
    out = solve("sqrt(x) - 1", -4.0)
    assert out.status == "eval_error"
    assert math.isnan(out.final_residual)


def test_eval_error_when_step_leaves_domain():
    # from a guess right of the root the first step lands at negative f
    out = solve(COLEBROOK_TEXT, 0.1)
    assert out.status == "eval_error"
    assert out.iterations == 2
    assert out.unrounded < 0
    out = solve("log(x)", 3.0)
    assert out.status == "eval_error"


def test_residual_certificate():
    f = parse(COLEBROOK_TEXT)
    out = newton_raphson(f, differentiate(f), 0.02, SolverConfig(tolerance=1e-10))
    assert out.converged
    assert abs(out.final_residual) < 1e-10
    assert out.unrounded == pytest.approx(COLEBROOK_ROOT, rel=1e-9)


def test_replication_requires_ground_truth():
    with pytest.raises(ValueError):
        solve("x - 1", 0.0, mode="replication")


@pytest.mark.parametrize("kw", [
    {"tolerance": 0}, {"tolerance": -1}, {"max_iterations": 0},
    {"rounding_digits": -1}, {"mode": "bogus"},
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_non_finite_guess_rejected():
    with pytest.raises(ValueError):
        solve("x", math.nan)


@pytest.mark.parametrize("value, digits, expected", [
    (2.0005, 3, 2.001),
    (-2.0005, 3, -2.001),
    (1.0004999, 3, 1.0),
    (0.0125, 3, 0.013),
    (0.0125, 2, 0.01),
    (2.5, 0, 3.0),
    (-2.5, 0, -3.0),
])
def test_rounding_half_away_from_zero(value, digits, expected):
    assert round_half_away(value, digits) == expected


def test_bisection_linear():
    assert bisection_oracle(parse("x - 1"), Bracket(0.0, 2.0)) == 1.0


def test_bisection_lambert_at_e():
    assert bisection_oracle(parse("x*exp(x) - e"), Bracket(0.0, 2.0)) == pytest.approx(1.0, abs=1e-10)


def test_bisection_colebrook_against_haaland():
    root = bisection_oracle(parse(COLEBROOK_TEXT), Bracket(0.005, 0.1))
    assert root == pytest.approx(COLEBROOK_ROOT, abs=1e-10)
    rel = 0.000045 / 0.15
    haaland = (-1.8 * math.log10((rel / 3.7) ** 1.11 + 6.9 / 1e5)) ** -2
    assert abs(haaland - root) / root < 0.02


def test_bisection_zero_endpoint():
    assert bisection_oracle(parse("x"), Bracket(0.0, 1.0)) == 0.0


def test_bisection_rejects_same_sign():
    with pytest.raises(BracketError):
        bisection_oracle(parse("x**2 + 1"), Bracket(-1.0, 1.0))


def test_bisection_rejects_nan_endpoint():
    with pytest.raises(BracketError):
        bisection_oracle(parse("log(x)"), Bracket(-1.0, 2.0))


def test_bracket_order():
    with pytest.raises(BracketError):
        Bracket(1.0, 1.0)


def test_bisection_is_deterministic():
    f = parse(COLEBROOK_TEXT)
    assert len({bisection_oracle(f, Bracket(0.005, 0.1)) for _ in range(5)}) == 1
