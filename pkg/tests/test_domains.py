import json
import math

import numpy as np
import pytest

from hybridsolve import expr as ex
from hybridsolve.autodiff import differentiate
from hybridsolve.domains import (
    DEFAULT_COUNTS,
    DOMAINS,
    R_GAS,
    ChemicalParams,
    DomainId,
    DomainProblem,
    ElectronicsParams,
    FluidParams,
    HeatParams,
    OrbitalParams,
    ParameterError,
    StructuralParams,
    ThermoParams,
    build_residual,
    dataset_fingerprint,
    dumps_dataset,
    exact_root,
    generate_dataset,
    ground_truth,
    query_numbers,
    read_dataset,
    render_query,
    sample_params,
    write_dataset,
)

from conftest import COLEBROOK_ROOT, COLEBROOK_TEXT, DIODE_ROOT, central_fd

REF_FLUID = FluidParams(reynolds=100000, roughness=0.000045, diameter=0.15)
REF_ORBITAL = OrbitalParams(eccentricity=0.6, mean_anomaly=0.6)
REF_DIODE = ElectronicsParams(source_voltage=5, resistance=1000, saturation_current=1e-14,
                                thermal_voltage=0.026)


def draws(domain, n=100, seed=2024):
    rng = np.random.default_rng([seed, DOMAINS.index(domain)])
    return [sample_params(domain, rng) for _ in range(n)]


def test_fluid_residual_matches_formulator_example():
    r = build_residual("fluid_mechanics", REF_FLUID)
    assert r.expr == ex.parse(COLEBROOK_TEXT)
    assert ex.parse(ex.render(r.expr)) == ex.parse(COLEBROOK_TEXT)


def test_orbital_residual():
    r = build_residual("orbital_mechanics", REF_ORBITAL)
    assert r.expr == ex.parse("x - 0.6*sin(x) - 0.6")
    assert r.x0 == 0.6


def test_structural_residual_at_e():
    r = build_residual("structural", StructuralParams(math.e))
    assert r.expr == ex.parse("x*exp(x) - 2.718281828459045")
    assert exact_root("structural", StructuralParams(math.e)) == pytest.approx(1.0, abs=1e-10)


def test_electronics_residual_form():
    r = build_residual("electronics", REF_DIODE)
    assert r.expr == ex.parse("x + 1000*1e-14*(exp(x/0.026) - 1) - 5")
    assert r.x0 == 0.6


def test_thermo_residual_form():
    p = ThermoParams("nitrogen", 20.0, 300.0)
    r = build_residual("thermodynamics", p)
    assert r.expr == ex.parse("(20 + 1.39/x**2)*(x - 0.03913) - 0.08206*300")


def test_heat_residual_root_is_wien_temperature():
    p = HeatParams(2.898)
    t = exact_root("heat_transfer", p)
    u = 6.62607015e-34 * 299792458.0 / (2.898e-6 * 1.380649e-23 * t)
    assert u == pytest.approx(4.965114231744276, rel=1e-9)
    # Wien's displacement constant b = 2.897771955e-3 m K
    assert t == pytest.approx(2.897771955e-3 / 2.898e-6, rel=1e-8)


def test_chemical_residual_root_is_closed_form_bet():
    p = ChemicalParams(bet_constant=100.0, relative_pressure=0.2, adsorbed_volume=50.0)
    c, r, v = 100.0, 0.2, 50.0
    expected = v * (1 - r) * (1 + (c - 1) * r) / (c * r)
    assert exact_root("chemical", p) == pytest.approx(expected, rel=1e-10)
    # the original single-point relation holds at the root
    vm = exact_root("chemical", p)
    assert r / (v * (1 - r)) == pytest.approx(1 / (vm * c) + (c - 1) / (vm * c) * r, rel=1e-9)


def test_ground_truth_examples():
    assert ground_truth("orbital_mechanics", OrbitalParams(0.0, 0.5)) == 0.5
    assert ground_truth("structural", StructuralParams(math.e)) == 1.0
    assert exact_root("electronics", REF_DIODE) == pytest.approx(DIODE_ROOT, abs=1e-9)
    assert ground_truth("electronics", REF_DIODE) == 0.696
    assert exact_root("fluid_mechanics", REF_FLUID) == pytest.approx(COLEBROOK_ROOT, abs=1e-10)
    assert ground_truth("fluid_mechanics", REF_FLUID) == 0.019


@pytest.mark.parametrize("domain, params", [
    ("fluid_mechanics", FluidParams(1e3, 1e-5, 0.1)),
    ("fluid_mechanics", FluidParams(1e5, 0.01, 0.1)),
    ("orbital_mechanics", OrbitalParams(0.95, 1.0)),
    ("orbital_mechanics", OrbitalParams(0.5, 4.0)),
    ("electronics", ElectronicsParams(12, 1000, 1e-14)),
    ("electronics", ElectronicsParams(5, 1000, 1e-11)),
    ("thermodynamics", ThermoParams("argon", 20, 300)),
    ("thermodynamics", ThermoParams("nitrogen", 5, 300)),
    ("heat_transfer", HeatParams(20.0)),
    ("structural", StructuralParams(0.01)),
    ("chemical", ChemicalParams(5, 0.2, 50)),
    ("chemical", ChemicalParams(100, 0.5, 50)),
])
def test_out_of_range_rejected(domain, params):
    with pytest.raises(ParameterError):
        build_residual(domain, params)


def test_wrong_param_type_rejected():
    with pytest.raises(ParameterError):
        build_residual("orbital_mechanics", REF_FLUID)


def test_params_from_mapping():
    r = build_residual("orbital_mechanics", {"eccentricity": 0.6, "mean_anomaly": 0.6})
    assert r.x0 == 0.6
    with pytest.raises(ParameterError):
        build_residual("orbital_mechanics", {"eccentricity": 0.6, "mean_anomaly": 0.6, "z": 1})


def test_fluid_query():
    q = render_query("fluid_mechanics", REF_FLUID)
    for s in ("0.15 meters", "100,000", "0.000045 meters"):
        assert s in q


def test_orbital_query():
    assert "eccentricity of 0.6" in render_query("orbital_mechanics", REF_ORBITAL)


def test_electronics_query():
    q = render_query("electronics", REF_DIODE)
    assert "1000-ohm resistor" in q
    assert "5-volt" in q
    assert "1 × 10^-14 amperes" in q
    assert "0.026 volts" in q


@pytest.mark.parametrize("domain", DOMAINS)
def test_queries_embed_every_parameter(domain):
    for p in draws(domain, 20):
        q = render_query(domain, p)
        assert q == render_query(domain, p)
        for s in query_numbers(domain, p):
            assert s in q


def test_default_dataset_counts():
    ds = generate_dataset(0)
    assert len(ds) == 100
    counts = {d: sum(1 for p in ds if p.domain is d) for d in DOMAINS}
    assert [counts[d] for d in DOMAINS] == [16, 16, 16, 16, 11, 13, 12]
    assert [p.id for p in ds] == list(range(1, 101))
    assert sum(DEFAULT_COUNTS.values()) == 100


def test_empty_counts():
    assert generate_dataset(3, {d: 0 for d in DOMAINS}) == []


def test_negative_count_rejected():
    with pytest.raises(ValueError):
        generate_dataset(3, {"chemical": -1})


def test_dataset_determinism():
    a = dumps_dataset(generate_dataset(42))
    b = dumps_dataset(generate_dataset(42))
    assert a == b
    assert a != dumps_dataset(generate_dataset(43))


def test_domain_streams_are_independent():
    full = generate_dataset(5)
    only = generate_dataset(5, {"structural": 13})
    assert [p.params for p in only] == [p.params for p in full if p.domain is DomainId.STRUCTURAL]


def test_jsonl_round_trip(tmp_path):
    ds = generate_dataset(9, {"heat_transfer": 3, "thermodynamics": 2, "electronics": 2})
    path = tmp_path / "ds.jsonl"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert back == ds
    assert dataset_fingerprint(back) == dataset_fingerprint(ds)
    row = json.loads(path.read_text().splitlines()[0])
    assert set(row) == {"id", "domain", "query", "ground_truth", "params"}


def test_problem_from_external_record():
    rec = {"id": 7, "domain": "electronics", "query": "diode?", "ground_truth": 0.696,
           "params": {"source_voltage": 5, "resistance": 1000, "saturation_current": 1e-14}}
    p = DomainProblem.from_dict(rec)
    assert p.params.thermal_voltage == 0.026
    assert p.to_dict()["params"]["resistance"] == 1000


def test_ground_truths_are_three_decimal():
    for p in generate_dataset(1):
        assert p.ground_truth == round(p.ground_truth, 3)


# ---------------------------------------------------------------------------
# physics properties

def test_residual_certificate_on_generated_problems():
    for p in generate_dataset(11):
        r = build_residual(p.domain, p.params)
        root = exact_root(p.domain, p.params)
        scale = 1.0 + abs(root * ex.evaluate(differentiate(r.expr), root))
        assert abs(ex.evaluate(r.expr, root)) <= 1e-8 * scale
        assert p.ground_truth == round(root, 3) or abs(p.ground_truth - root) <= 5e-4 + 1e-12


def test_kepler_identity():
    for p in draws(DomainId.ORBITAL_MECHANICS, 200):
        e_anom = exact_root("orbital_mechanics", p)
        assert abs(e_anom - p.eccentricity * math.sin(e_anom) - p.mean_anomaly) < 1e-9


def test_colebrook_range():
    for p in draws(DomainId.FLUID_MECHANICS, 200):
        assert 0.005 < exact_root("fluid_mechanics", p) < 0.1


@pytest.mark.parametrize("rel", [1e-6, 1e-4, 1e-2])
def test_colebrook_monotone_in_reynolds(rel):
    res = np.logspace(4, 7, 40)
    f = [exact_root("fluid_mechanics", FluidParams(float(re), rel * 0.1, 0.1)) for re in res]
    assert all(b <= a + 1e-12 for a, b in zip(f, f[1:]))


def test_diode_bound():
    for p in draws(DomainId.ELECTRONICS, 200):
        vd = exact_root("electronics", p)
        assert 0 < vd < p.source_voltage


def test_vdw_gas_root():
    for p in draws(DomainId.THERMODYNAMICS, 300):
        v = exact_root("thermodynamics", p)
        assert v > p.b
        if p.temperature >= 300 and p.pressure <= 50:
            ideal = R_GAS * p.temperature / p.pressure
            assert abs(v - ideal) / ideal < 0.30


def test_vdw_picks_largest_root():
    for p in draws(DomainId.THERMODYNAMICS, 300):
        coeffs = [p.pressure, -(p.pressure * p.b + R_GAS * p.temperature), p.a, -p.a * p.b]
        real = [z.real for z in np.roots(coeffs) if abs(z.imag) < 1e-9 and z.real > p.b]
        assert exact_root("thermodynamics", p) == pytest.approx(max(real), rel=1e-8)


@pytest.mark.parametrize("domain", DOMAINS)
def test_single_sign_change_inside_bracket(domain):
    for p in draws(domain, 30):
        r = build_residual(domain, p)
        xs = np.linspace(r.bracket.lo, r.bracket.hi, 2001)
        vals = np.array([ex.evaluate(r.expr, float(x)) for x in xs])
        assert np.all(np.isfinite(vals))
        signs = np.sign(vals[vals != 0])
        assert np.count_nonzero(np.diff(signs)) == 1


@pytest.mark.parametrize("domain", DOMAINS)
def test_derivative_matches_finite_differences(domain):
    rng = np.random.default_rng(DOMAINS.index(domain))
    checked = 0
    for p in draws(domain, 10):
        r = build_residual(domain, p)
        d = differentiate(r.expr)
        for x in rng.uniform(r.bracket.lo, r.bracket.hi, 10):
            fd = central_fd(r.expr, float(x))
            an = ex.evaluate(d, float(x))
            if math.isnan(fd) or math.isnan(an):
                continue
            assert abs(an - fd) <= 1e-5 * (1 + abs(fd))
            checked += 1
    assert checked >= 90
