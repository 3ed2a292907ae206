"""Seven engineering equation families: residuals, ground truths, queries, datasets.

Every family maps a small set of physical parameters to a residual ``f(x)``
in the quantity the query asks for, a default starting guess, and a bracket
with a verified sign change that isolates the intended root.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .expr import (
    X,
    Constant,
    Expr,
    add,
    call,
    div,
    mul,
    power,
    sub,
)
from .solver import Bracket, bisection_oracle, round_half_away


class DomainId(str, Enum):
    FLUID_MECHANICS = "fluid_mechanics"
    ORBITAL_MECHANICS = "orbital_mechanics"
    ELECTRONICS = "electronics"
    THERMODYNAMICS = "thermodynamics"
    HEAT_TRANSFER = "heat_transfer"
    STRUCTURAL = "structural"
    CHEMICAL = "chemical"

    def __str__(self) -> str:
        return self.value


DOMAINS = tuple(DomainId)

DEFAULT_COUNTS = {
    DomainId.FLUID_MECHANICS: 16,
    DomainId.ORBITAL_MECHANICS: 16,
    DomainId.ELECTRONICS: 16,
    DomainId.THERMODYNAMICS: 16,
    DomainId.HEAT_TRANSFER: 11,
    DomainId.STRUCTURAL: 13,
    DomainId.CHEMICAL: 12,
}

# Physical constants (SI, exact by definition since 2019)
PLANCK = 6.62607015e-34
LIGHT_SPEED = 299792458.0
BOLTZMANN = 1.380649e-23

# L·atm/(mol·K)
R_GAS = 0.08206

# van der Waals constants: a in L²·atm/mol², b in L/mol
VDW_GASES = {
    "nitrogen": (1.390, 0.03913),
    "carbon dioxide": (3.592, 0.04267),
    "methane": (2.253, 0.04278),
}


class ParameterError(ValueError):
    pass


def _check(name: str, value: float, lo: float, hi: float) -> None:
    if not (math.isfinite(value) and lo <= value <= hi):
        raise ParameterError(f"{name}={value!r} outside [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# parameter records

@dataclass(frozen=True)
class FluidParams:
    reynolds: float
    roughness: float  # absolute, m
    diameter: float  # m

    def validate(self):
        _check("reynolds", self.reynolds, 1e4, 1e7)
        _check("diameter", self.diameter, 1e-3, 10.0)
        _check("relative roughness", self.roughness / self.diameter, 1e-6, 1e-2)


@dataclass(frozen=True)
class OrbitalParams:
    eccentricity: float
    mean_anomaly: float  # rad

    def validate(self):
        # e = 0 is admitted as the circular limit; sampling stays in [0.1, 0.9]
        _check("eccentricity", self.eccentricity, 0.0, 0.9)
        _check("mean_anomaly", self.mean_anomaly, 0.0, math.pi)


@dataclass(frozen=True)
class ElectronicsParams:
    source_voltage: float  # V
    resistance: float  # ohm
    saturation_current: float  # A
    thermal_voltage: float = 0.026  # V

    def validate(self):
        _check("source_voltage", self.source_voltage, 1.0, 10.0)
        _check("resistance", self.resistance, 100.0, 10000.0)
        _check("saturation_current", self.saturation_current, 1e-15, 1e-12)
        _check("thermal_voltage", self.thermal_voltage, 1e-3, 1.0)


@dataclass(frozen=True)
class ThermoParams:
    gas: str
    pressure: float  # atm
    temperature: float  # K

    def validate(self):
        if self.gas not in VDW_GASES:
            raise ParameterError(f"unknown gas {self.gas!r}; expected one of {sorted(VDW_GASES)}")
        _check("pressure", self.pressure, 10.0, 100.0)
        _check("temperature", self.temperature, 200.0, 500.0)

    @property
    def a(self) -> float:
        return VDW_GASES[self.gas][0]

    @property
    def b(self) -> float:
        return VDW_GASES[self.gas][1]


@dataclass(frozen=True)
class HeatParams:
    peak_wavelength_um: float  # micrometers

    def validate(self):
        _check("peak_wavelength_um", self.peak_wavelength_um, 0.5, 10.0)

    @property
    def peak_wavelength(self) -> float:
        return self.peak_wavelength_um * 1e-6


@dataclass(frozen=True)
class StructuralParams:
    k: float

    def validate(self):
        _check("k", self.k, 0.1, 100.0)


@dataclass(frozen=True)
class ChemicalParams:
    bet_constant: float
    relative_pressure: float  # P/P0
    adsorbed_volume: float  # cm³(STP)/g

    def validate(self):
        _check("bet_constant", self.bet_constant, 10.0, 1000.0)
        _check("relative_pressure", self.relative_pressure, 0.05, 0.35)
        _check("adsorbed_volume", self.adsorbed_volume, 1e-6, 1e6)


PARAM_TYPES = {
    DomainId.FLUID_MECHANICS: FluidParams,
    DomainId.ORBITAL_MECHANICS: OrbitalParams,
    DomainId.ELECTRONICS: ElectronicsParams,
    DomainId.THERMODYNAMICS: ThermoParams,
    DomainId.HEAT_TRANSFER: HeatParams,
    DomainId.STRUCTURAL: StructuralParams,
    DomainId.CHEMICAL: ChemicalParams,
}


def params_from_dict(domain: DomainId | str, data: Mapping) -> object:
    cls = PARAM_TYPES[DomainId(domain)]
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ParameterError(f"unexpected parameters for {domain}: {sorted(unknown)}")
    return cls(**data)


def _coerce(domain: DomainId | str, params) -> tuple[DomainId, object]:
    domain = DomainId(domain)
    cls = PARAM_TYPES[domain]
    if isinstance(params, Mapping):
        params = params_from_dict(domain, params)
    if not isinstance(params, cls):
        raise ParameterError(f"{domain} expects {cls.__name__}, got {type(params).__name__}")
    params.validate()
    return domain, params


# ---------------------------------------------------------------------------
# residuals

@dataclass(frozen=True)
class Residual:
    expr: Expr
    x0: float
    bracket: Bracket


def haaland(p: FluidParams) -> float:
    """Explicit Haaland approximation of the Darcy friction factor.

    Used as the Newton seed: a fixed 0.02 overshoots to negative f for
    smooth pipes at high Reynolds number.
    """
    rel = p.roughness / p.diameter
    return (-1.8 * math.log10((rel / 3.7) ** 1.11 + 6.9 / p.reynolds)) ** -2


def _fluid(p: FluidParams) -> Residual:
    # 1/sqrt(f) + 2.0*log10((eps/D)/3.7 + 2.51/(Re*sqrt(f)))
    rel = div(div(Constant(p.roughness), Constant(p.diameter)), Constant(3.7))
    sqrt_x = call("sqrt", X)
    inner = add(rel, div(Constant(2.51), mul(Constant(p.reynolds), sqrt_x)))
    e = add(div(Constant(1.0), sqrt_x), mul(Constant(2.0), call("log10", inner)))
    return Residual(e, haaland(p), Bracket(0.005, 0.1))


def _orbital(p: OrbitalParams) -> Residual:
    e = sub(sub(X, mul(Constant(p.eccentricity), call("sin", X))), Constant(p.mean_anomaly))
    return Residual(e, p.mean_anomaly, Bracket(0.0, math.pi))


def _electronics(p: ElectronicsParams) -> Residual:
    ris = mul(Constant(p.resistance), Constant(p.saturation_current))
    diode = mul(ris, sub(call("exp", div(X, Constant(p.thermal_voltage))), Constant(1.0)))
    e = sub(add(X, diode), Constant(p.source_voltage))
    return Residual(e, 0.6, Bracket(0.0, p.source_voltage))


def _vdw_bracket(p: ThermoParams) -> Bracket:
    """Bracket around the largest root above ``b`` (gas phase).

    The residual has the sign of the cubic ``P V³ − (Pb + RT) V² + a V − ab``
    for V > 0, which is negative at V = b. Beyond its larger critical point
    the cubic is increasing, so the largest root lies either there or, when
    the local minimum is positive, below the local maximum.
    """
    P, T, a, b = p.pressure, p.temperature, p.a, p.b
    RT = R_GAS * T
    hi = 10.0 * RT / P
    lo = 1.01 * b

    def cubic(v):
        return P * v**3 - (P * b + RT) * v**2 + a * v - a * b

    s = P * b + RT
    disc = s * s - 3.0 * P * a
    if disc > 0:
        v1 = (s - math.sqrt(disc)) / (3.0 * P)
        v2 = (s + math.sqrt(disc)) / (3.0 * P)
        if cubic(v2) > 0:
            hi = v1
        elif v2 > lo:
            lo = v2
    if cubic(lo) > 0:
        lo = b
    return Bracket(lo, hi)


def _thermo(p: ThermoParams) -> Residual:
    # (P + a/V^2)(V - b) - R T
    pressure_term = add(Constant(p.pressure), div(Constant(p.a), power(X, Constant(2.0))))
    e = sub(mul(pressure_term, sub(X, Constant(p.b))), mul(Constant(R_GAS), Constant(p.temperature)))
    # Seeding at the ideal-gas volume can strand Newton near a local minimum of
    # the residual (subcritical CO2); the bracket's lower end never does.
    bracket = _vdw_bracket(p)
    return Residual(e, bracket.lo, bracket)


WIEN_X = 4.965114231744276


def _wien_scale(p: HeatParams) -> float:
    return PLANCK * LIGHT_SPEED / (p.peak_wavelength * BOLTZMANN)


def _heat(p: HeatParams) -> Residual:
    # Wien condition (u - 5) e^u + 5 = 0 with u = hc/(lambda k_B T), unknown T
    u = div(mul(Constant(PLANCK), Constant(LIGHT_SPEED)),
            mul(mul(Constant(p.peak_wavelength), Constant(BOLTZMANN)), X))
    e = add(mul(sub(u, Constant(5.0)), call("exp", u)), Constant(5.0))
    scale = _wien_scale(p)
    return Residual(e, scale / 4.9, Bracket(scale / 6.0, scale / 4.0))


def _structural(p: StructuralParams) -> Residual:
    e = sub(mul(X, call("exp", X)), Constant(p.k))
    return Residual(e, math.log1p(p.k), Bracket(0.0, math.log1p(p.k) + 1.0))


def _chemical(p: ChemicalParams) -> Residual:
    # BET single point multiplied through by V_m·C·V·(1 - r):
    #   C r V_m = V (1 - r)(1 + (C - 1) r)
    # The divided form has residuals of order 1e-3, too small for an
    # absolute stopping tolerance of 1e-4 to pin three decimals of V_m.
    C, r, V = Constant(p.bet_constant), Constant(p.relative_pressure), Constant(p.adsorbed_volume)
    one = Constant(1.0)
    rhs = mul(mul(V, sub(one, r)), add(one, mul(sub(C, one), r)))
    x0 = p.adsorbed_volume * (1.0 - p.relative_pressure)
    return Residual(sub(mul(mul(C, r), X), rhs), x0, Bracket(0.5 * x0, 4.0 * x0))


_BUILDERS = {
    DomainId.FLUID_MECHANICS: _fluid,
    DomainId.ORBITAL_MECHANICS: _orbital,
    DomainId.ELECTRONICS: _electronics,
    DomainId.THERMODYNAMICS: _thermo,
    DomainId.HEAT_TRANSFER: _heat,
    DomainId.STRUCTURAL: _structural,
    DomainId.CHEMICAL: _chemical,
}


def build_residual(domain: DomainId | str, params) -> Residual:
    """Residual expression, default initial guess and isolating bracket."""
    domain, params = _coerce(domain, params)
    return _BUILDERS[domain](params)


def exact_root(domain: DomainId | str, params, tolerance: float = 1e-10) -> float:
    """Unrounded bisection root of the domain residual."""
    r = build_residual(domain, params)
    return bisection_oracle(r.expr, r.bracket, tolerance)


def ground_truth(domain: DomainId | str, params) -> float:
    """Bisection root at 1e-10, rounded to three decimals. Never uses Newton."""
    return round_half_away(exact_root(domain, params), 3)


# ---------------------------------------------------------------------------
# natural-language queries

def fmt_number(value: float, group: bool = True) -> str:
    """Plain positional form, thousands separators from 10,000 upwards."""
    if float(value).is_integer() and abs(value) < 1e15:
        n = int(value)
        return f"{n:,}" if group and abs(n) >= 10000 else str(n)
    return np.format_float_positional(value, trim="-")


def fmt_power10(value: float) -> str:
    """``1e-14`` -> ``"1 × 10^-14"``; mantissa kept to the significant digits given."""
    exponent = math.floor(math.log10(abs(value)))
    mantissa = value / 10.0**exponent
    mantissa = float(f"{mantissa:.6g}")
    if mantissa >= 10:
        mantissa /= 10
        exponent += 1
    return f"{fmt_number(mantissa)} × 10^{exponent}"


def render_query(domain: DomainId | str, params) -> str:
    domain, p = _coerce(domain, params)
    if domain is DomainId.FLUID_MECHANICS:
        return (
            "We are sizing piping for a building water supply and need the pipe friction "
            f"losses. The pipe is {fmt_number(p.diameter)} meters in diameter, its wall "
            f"roughness is {fmt_number(p.roughness)} meters, and the flow runs at a "
            f"Reynolds number of {fmt_number(p.reynolds)}. Find the Darcy friction factor "
            "for this turbulent flow."
        )
    if domain is DomainId.ORBITAL_MECHANICS:
        return (
            f"A spacecraft follows an elliptical orbit with an eccentricity of "
            f"{fmt_number(p.eccentricity)}. At the epoch of interest its mean anomaly equals "
            f"{fmt_number(p.mean_anomaly)} radians. Determine the eccentric anomaly, in radians, "
            "that fixes the spacecraft's position on the orbit."
        )
    if domain is DomainId.ELECTRONICS:
        return (
            f"A {fmt_number(p.source_voltage, group=False)}-volt DC source drives a "
            f"{fmt_number(p.resistance, group=False)}-ohm resistor in series with a silicon "
            f"diode. The diode saturation current is {fmt_power10(p.saturation_current)} "
            f"amperes and the thermal voltage is {fmt_number(p.thermal_voltage)} volts. "
            "Find the voltage across the diode in volts."
        )
    if domain is DomainId.THERMODYNAMICS:
        return (
            f"A tank holds {p.gas} gas at {fmt_number(p.pressure)} atm and "
            f"{fmt_number(p.temperature)} K. Treating it as a van der Waals gas with "
            f"a = {fmt_number(p.a)} L^2·atm/mol^2 and b = {fmt_number(p.b)} L/mol, and "
            f"R = {fmt_number(R_GAS)} L·atm/(mol·K), what is its molar volume in liters per mole?"
        )
    if domain is DomainId.HEAT_TRANSFER:
        microns = fmt_number(p.peak_wavelength_um)
        return (
            "An infrared sensor sees a hot body radiating like a blackbody whose spectral "
            f"radiance peaks at a wavelength of {microns} micrometers. Using Planck's law, "
            "what is the body's temperature in kelvin?"
        )
    if domain is DomainId.STRUCTURAL:
        return (
            "A stability analysis reduces to finding the positive value x for which x times "
            f"e raised to the power x equals {fmt_number(p.k)}. Find x."
        )
    return (
        "A nitrogen adsorption measurement on a porous catalyst is analysed with the BET "
        f"isotherm. The BET constant is {fmt_number(p.bet_constant)}, and at a relative "
        f"pressure P/P0 of {fmt_number(p.relative_pressure)} the adsorbed volume is "
        f"{fmt_number(p.adsorbed_volume)} cm^3(STP)/g. Determine the monolayer capacity V_m "
        "in cm^3(STP)/g."
    )


def query_numbers(domain: DomainId | str, params) -> list[str]:
    """The literal strings under which each parameter appears in the query."""
    domain, p = _coerce(domain, params)
    if domain is DomainId.FLUID_MECHANICS:
        return [fmt_number(p.diameter), fmt_number(p.roughness), fmt_number(p.reynolds)]
    if domain is DomainId.ORBITAL_MECHANICS:
        return [fmt_number(p.eccentricity), fmt_number(p.mean_anomaly)]
    if domain is DomainId.ELECTRONICS:
        return [fmt_number(p.source_voltage, group=False), fmt_number(p.resistance, group=False),
                fmt_power10(p.saturation_current), fmt_number(p.thermal_voltage)]
    if domain is DomainId.THERMODYNAMICS:
        return [p.gas, fmt_number(p.pressure), fmt_number(p.temperature),
                fmt_number(p.a), fmt_number(p.b)]
    if domain is DomainId.HEAT_TRANSFER:
        return [fmt_number(p.peak_wavelength_um)]
    if domain is DomainId.STRUCTURAL:
        return [fmt_number(p.k)]
    return [fmt_number(p.bet_constant), fmt_number(p.relative_pressure),
            fmt_number(p.adsorbed_volume)]


# ---------------------------------------------------------------------------
# datasets

@dataclass(frozen=True)
class DomainProblem:
    id: int
    domain: DomainId
    params: object
    query: str
    ground_truth: float

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain.value,
            "query": self.query,
            "ground_truth": self.ground_truth,
            "params": dataclasses.asdict(self.params),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DomainProblem":
        domain = DomainId(data["domain"])
        return cls(
            id=int(data["id"]),
            domain=domain,
            params=params_from_dict(domain, data["params"]),
            query=str(data["query"]),
            ground_truth=float(data["ground_truth"]),
        )


def make_problem(id: int, domain: DomainId | str, params) -> DomainProblem:
    domain, params = _coerce(domain, params)
    return DomainProblem(id, domain, params, render_query(domain, params), ground_truth(domain, params))


def _sig(value: float, digits: int = 3) -> float:
    return float(f"{value:.{digits}g}")


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(10.0 ** rng.uniform(math.log10(lo), math.log10(hi)))


def sample_params(domain: DomainId, rng: np.random.Generator):
    """Draw one in-range parameter set, rounded to what the query prints."""
    if domain is DomainId.FLUID_MECHANICS:
        reynolds = min(max(_sig(_log_uniform(rng, 1e4, 1e7)), 1e4), 1e7)
        diameter = round(float(rng.uniform(0.025, 1.0)), 3)
        rel = _log_uniform(rng, 1e-6, 1e-2)
        roughness = _sig(rel * diameter, 2)
        roughness = min(max(roughness, 1e-6 * diameter), 1e-2 * diameter)
        return FluidParams(reynolds, roughness, diameter)
    if domain is DomainId.ORBITAL_MECHANICS:
        return OrbitalParams(round(float(rng.uniform(0.1, 0.9)), 2),
                             round(float(rng.uniform(0.0, math.pi)), 3))
    if domain is DomainId.ELECTRONICS:
        return ElectronicsParams(
            source_voltage=round(float(rng.uniform(1.0, 10.0)), 1),
            resistance=float(round(float(rng.uniform(100.0, 10000.0)), -1)),
            saturation_current=min(max(_sig(_log_uniform(rng, 1e-15, 1e-12), 2), 1e-15), 1e-12),
            thermal_voltage=0.026,
        )
    if domain is DomainId.THERMODYNAMICS:
        gas = sorted(VDW_GASES)[int(rng.integers(len(VDW_GASES)))]
        return ThermoParams(gas, round(float(rng.uniform(10.0, 100.0)), 1),
                            round(float(rng.uniform(200.0, 500.0)), 1))
    if domain is DomainId.HEAT_TRANSFER:
        return HeatParams(round(float(rng.uniform(0.5, 10.0)), 3))
    if domain is DomainId.STRUCTURAL:
        return StructuralParams(min(max(_sig(float(rng.uniform(0.1, 100.0))), 0.1), 100.0))
    return ChemicalParams(
        bet_constant=round(float(rng.uniform(10.0, 1000.0)), 1),
        relative_pressure=round(float(rng.uniform(0.05, 0.35)), 3),
        adsorbed_volume=round(float(rng.uniform(10.0, 200.0)), 2),
    )


def generate_dataset(seed: int, counts: Mapping[DomainId | str, int] | None = None) -> list[DomainProblem]:
    """Seeded problem set; defaults to the 100-problem domain mix.

    Each domain draws from its own stream keyed on ``seed``, so changing one
    domain's count leaves the other domains' problems untouched.
    """
    if counts is None:
        counts = DEFAULT_COUNTS
    counts = {DomainId(k): int(v) for k, v in counts.items()}
    for d, n in counts.items():
        if n < 0:
            raise ValueError(f"count for {d} must be non-negative, got {n}")

    problems = []
    next_id = 1
    for index, domain in enumerate(DOMAINS):
        n = counts.get(domain, 0)
        if not n:
            continue
        rng = np.random.default_rng([seed, index])
        for _ in range(n):
            problems.append(make_problem(next_id, domain, sample_params(domain, rng)))
            next_id += 1
    return problems


def dumps_dataset(problems: Iterable[DomainProblem]) -> str:
    return "".join(json.dumps(p.to_dict(), sort_keys=True) + "\n" for p in problems)


def write_dataset(problems: Iterable[DomainProblem], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_dataset(problems))


def read_dataset(path) -> list[DomainProblem]:
    with open(path, encoding="utf-8") as fh:
        return [DomainProblem.from_dict(json.loads(line)) for line in fh if line.strip()]


def dataset_fingerprint(problems: Iterable[DomainProblem]) -> str:
    return hashlib.sha256(dumps_dataset(problems).encode("utf-8")).hexdigest()
