import math

import pytest
from hypothesis import strategies as st

from hybridsolve import expr as ex

COLEBROOK_TEXT = "1/sqrt(x) + 2.0*log10((0.000045/0.15)/3.7 + 2.51/(100000*sqrt(x)))"

# Roots computed independently with mpmath.findroot at 40 digits.
COLEBROOK_ROOT = 0.019469127552452998  # Re=1e5, eps=4.5e-5 m, D=0.15 m
DIODE_ROOT = 0.6964845745632098  # Vs=5 V, R=1000 ohm, Is=1e-14 A, VT=0.026 V
KEPLER_ROOT = 1.1468946193414707  # e=0.6, M=0.6


def central_fd(f, x, rel_step=1e-6):
    h = rel_step * max(1.0, abs(x))
    return (ex.evaluate(f, x + h) - ex.evaluate(f, x - h)) / (2 * h)


def trees(max_depth=8):
    """Random expression trees; constants are non-negative finite floats."""
    leaves = st.one_of(
        st.just(ex.X),
        st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False).map(ex.Constant),
        st.sampled_from([0.5, 2.0, 3.7, 1e-14, 1e20]).map(ex.Constant),
    )

    def extend(children):
        return st.one_of(
            st.builds(ex.Unary, st.just("negate"), children),
            st.builds(ex.Binary, st.sampled_from(ex.BINARY_OPS), children, children),
            st.builds(ex.Call, st.sampled_from(ex.FUNCTIONS), children),
        )

    return st.recursive(leaves, extend, max_leaves=2 ** max_depth)


def depth(e):
    if isinstance(e, (ex.Constant, ex.Variable)):
        return 1
    if isinstance(e, ex.Unary):
        return 1 + depth(e.child)
    if isinstance(e, ex.Call):
        return 1 + depth(e.arg)
    return 1 + max(depth(e.left), depth(e.right))


def same_float(a, b):
    return (math.isnan(a) and math.isnan(b)) or a == b


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        key = marker.args[0]
        title = marker.args[1]
        _, ok, notes = _acceptance.get(key, (title, True, []))
        notes = notes + [v for k, v in item.user_properties if k == "detail"]
        _acceptance[key] = (title, ok and report.passed, notes)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance):
        title, ok, notes = _acceptance[key]
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {title}"
        if notes:
            line += " (" + "; ".join(dict.fromkeys(notes)) + ")"
        terminalreporter.write_line(line)
