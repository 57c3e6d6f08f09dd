"""Model parameters, structural validation, and derived scalar constants.

All rates are continuous-compounding annual rates and the time unit is years.
Wealth is measured in multiples of the time-0 average salary (W0 normalizes
the currency unit).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Optional

from .errors import (
    DegenerateDrift,
    OrderingViolation,
    ParseError,
    SchemaError,
    UtilityExplosion,
)

#: Hard tolerance for the drift non-degeneracy hypotheses epsilon != 0 and
#: epsilon_tilde != epsilon.  No limiting formulas exist, so violation is fatal.
DRIFT_TOL = 1e-12


@dataclass(frozen=True)
class MarketParams:
    """Financial market, salary, and EET-fund dynamics."""

    r: float        # risk-free rate (1/year)
    mu: float       # risky-asset drift (1/year)
    sigma: float    # risky-asset volatility (1/sqrt-year)
    gamma: float    # average-salary drift (1/year)
    xi: float       # average-salary volatility (1/sqrt-year)
    alpha: float    # EET-fund drift (1/year)
    beta: float     # EET-fund volatility (1/sqrt-year)
    W0: float = 1.0  # initial average salary; normalizes the currency unit


@dataclass(frozen=True)
class BabyBoomParams:
    """One-off logistic shock to the entrant flow on (t1, t2]."""

    t1: float      # boom start (years)
    t2: float      # boom end (years)
    n1: float      # entrant density at t1 (persons/year)
    nm: float      # logistic carrying capacity (> n1)
    kappa: float   # logistic growth rate (1/year)
    rho1: float    # exponential growth rate before t1 (1/year)
    rho2: float    # exponential growth rate after t2 (1/year)


@dataclass(frozen=True)
class DemographyParams:
    """Entry/retirement/maximal ages, entrant flow, and Makeham mortality."""

    a: float       # entry age (years)
    tau: float     # retirement age (years)
    omega: float   # maximal survival age (years)
    rho: float     # entrant growth rate (1/year)
    A: float       # Makeham constant hazard
    B: float       # Makeham senescent scale
    c: float       # Makeham senescent base (> 1)
    n0: float = 10.0  # entrant density at time 0 (persons/year)
    babyboom: Optional[BabyBoomParams] = None


@dataclass(frozen=True)
class PolicyParams:
    """Contribution rates, tax rates, cap, and the re-selection time."""

    theta0: float  # initial PAYGO contribution rate
    k0: float      # initial EET contribution rate
    m: float       # cap on theta + k
    tau1: float    # marginal tax rate on salary while working
    tau2: float    # marginal tax rate on EET benefits in retirement
    t0: float = 0.0  # government re-selection time (years)


@dataclass(frozen=True)
class PreferenceParams:
    """CRRA exponents per cohort class and the retirement-utility weight."""

    lam: float     # weight on post-retirement utility (JSON key "lambda")
    delta0: float  # CRRA exponent, cohorts not yet employed at t0
    delta1: float  # CRRA exponent, working cohorts at t0
    delta2: float  # CRRA exponent, retired cohorts at t0


@dataclass(frozen=True)
class Scenario:
    """Full parameter bundle. Immutable; safe to share across threads."""

    market: MarketParams
    demo: DemographyParams
    policy: PolicyParams
    pref: PreferenceParams


@dataclass(frozen=True)
class DerivedConstants:
    """Scalar constants computed once per scenario.

    L0, M01, M02, M03 are the entrant-time coefficients (independent of the
    entry time); L0 is evaluated with the future-entrant exponent delta0.
    """

    nu: float             # market price of risk (mu - r) / sigma
    epsilon: float        # gamma - r - xi * nu
    epsilon_tilde: float  # alpha - r - beta * nu
    Lambda: float         # support ratio (workers per retiree mass)
    a_tau: float          # annuity factor at retirement (years)
    L0: float
    M01: float
    M02: float
    M03: float


# --------------------------------------------------------------------------
# structural checks shared by load_scenario (SchemaError) and validate
# --------------------------------------------------------------------------

def _structural_violations(s: Scenario) -> list[str]:
    v = []
    d, p, f = s.demo, s.policy, s.pref
    if not d.a < d.tau < d.omega:
        v.append(f"ages must satisfy a < tau < omega (got {d.a}, {d.tau}, {d.omega})")
    if d.c <= 1:
        v.append(f"Makeham base c must exceed 1 (got {d.c})")
    if d.A < 0 or d.B < 0:
        v.append("Makeham constants A, B must be nonnegative")
    if d.n0 <= 0:
        v.append("entrant density n0 must be positive")
    if d.babyboom is not None:
        bb = d.babyboom
        if not bb.t1 < bb.t2:
            v.append(f"babyboom interval requires t1 < t2 (got {bb.t1}, {bb.t2})")
        if not 0 < bb.n1 < bb.nm:
            v.append(f"babyboom requires 0 < n1 < nm (got {bb.n1}, {bb.nm})")
        if bb.kappa <= 0:
            v.append("babyboom logistic rate kappa must be positive")
    for name, val in (("theta0", p.theta0), ("k0", p.k0)):
        if not 0 <= val <= 1:
            v.append(f"{name} must lie in [0, 1] (got {val})")
    if not 0 <= p.m <= 1:
        v.append(f"cap m must lie in [0, 1] (got {p.m})")
    if p.theta0 + p.k0 > p.m + 1e-15:
        v.append(f"theta0 + k0 = {p.theta0 + p.k0} exceeds the cap m = {p.m}")
    for name, val in (("tau1", p.tau1), ("tau2", p.tau2)):
        if not 0 <= val < 1:
            v.append(f"{name} must lie in [0, 1) (got {val})")
    for name, val in (("delta0", f.delta0), ("delta1", f.delta1), ("delta2", f.delta2)):
        if not (val < 1 and val != 0):
            v.append(f"{name} must be < 1 and nonzero (got {val})")
    return v


def delta_for_entry(z: float, s: Scenario) -> float:
    """CRRA exponent assigned to the cohort entering at z, by age at t0.

    A cohort keeps this exponent for all of its own computations.
    """
    zeta = s.demo.a + s.policy.t0 - z
    if zeta < s.demo.a:
        return s.pref.delta0
    if zeta < s.demo.tau:
        return s.pref.delta1
    return s.pref.delta2


def validate(s: Scenario) -> DerivedConstants:
    """Check every standing assumption and return the derived constants.

    Raises OrderingViolation / DegenerateDrift / UtilityExplosion on failure.
    Pure: identical scenarios give bit-identical results (cached).
    """
    return _validate_cached(s)


@lru_cache(maxsize=64)
def _validate_cached(s: Scenario) -> DerivedConstants:
    from . import demography, lifecycle

    mk, d, p, f = s.market, s.demo, s.policy, s.pref
    problems = _structural_violations(s)
    if problems:
        raise OrderingViolation("; ".join(problems))

    if not (mk.mu > mk.r > 0):
        raise OrderingViolation(f"need mu > r > 0 (got mu={mk.mu}, r={mk.r})")
    if mk.sigma <= 0 or mk.xi < 0 or mk.beta < 0:
        raise OrderingViolation("volatilities must be positive (sigma) / nonnegative")
    if mk.W0 <= 0:
        raise OrderingViolation("W0 must be positive")

    nu = (mk.mu - mk.r) / mk.sigma
    if (mk.alpha - mk.r) / mk.beta <= nu:
        raise OrderingViolation(
            "EET Sharpe ratio (alpha-r)/beta must exceed the risky Sharpe ratio "
            f"(got {(mk.alpha - mk.r) / mk.beta:.6f} vs {nu:.6f})")

    epsilon = mk.gamma - mk.r - mk.xi * nu
    epsilon_tilde = mk.alpha - mk.r - mk.beta * nu
    if abs(epsilon) < DRIFT_TOL:
        raise DegenerateDrift(f"epsilon = gamma - r - xi*nu = {epsilon} is degenerate")
    if abs(epsilon_tilde - epsilon) < DRIFT_TOL:
        raise DegenerateDrift(
            f"epsilon_tilde = {epsilon_tilde} coincides with epsilon = {epsilon}")

    margin = mk.r - d.rho - f.delta0 * (mk.gamma + 0.5 * (f.delta0 - 1) * mk.xi**2)
    if margin <= 0:
        raise UtilityExplosion(
            "finiteness condition fails: r - rho - delta0*[gamma + (delta0-1)*xi^2/2]"
            f" = {margin} <= 0")

    if p.tau1 <= p.tau2:
        warnings.warn(
            f"tau1 = {p.tau1} <= tau2 = {p.tau2}: the EET tax-saving effect is "
            "absent or reversed", stacklevel=3)

    Lambda = demography.support_ratio(d)
    a_tau = demography.annuity_factor(d, mk.r)
    L0 = lifecycle.entry_L(f.delta0, s)
    M01, M02, M03 = lifecycle.entry_coefficients(s)
    return DerivedConstants(nu=nu, epsilon=epsilon, epsilon_tilde=epsilon_tilde,
                            Lambda=Lambda, a_tau=a_tau, L0=L0,
                            M01=M01, M02=M02, M03=M03)


# --------------------------------------------------------------------------
# JSON round trip
# --------------------------------------------------------------------------

_SECTIONS = {
    "market": (MarketParams, ("r", "mu", "sigma", "gamma", "xi", "alpha", "beta")),
    "demography": (DemographyParams, ("a", "tau", "omega", "rho", "A", "B", "c")),
    "policy": (PolicyParams, ("theta0", "k0", "m", "tau1", "tau2")),
    "preference": (PreferenceParams, ("delta0", "delta1", "delta2")),
}
_BB_FIELDS = ("t1", "t2", "n1", "nm", "kappa", "rho1", "rho2")


def _require(section: dict, section_name: str, names) -> dict:
    out = {}
    for name in names:
        if name not in section:
            raise SchemaError(f"missing required field {section_name}.{name}")
        out[name] = float(section[name])
    return out


def scenario_from_dict(doc: dict) -> Scenario:
    for key in _SECTIONS:
        if key not in doc:
            raise SchemaError(f"missing required section '{key}'")

    mkt = _require(doc["market"], "market", _SECTIONS["market"][1])
    mkt["W0"] = float(doc["market"].get("W0", 1.0))

    dem = _require(doc["demography"], "demography", _SECTIONS["demography"][1])
    dem["n0"] = float(doc["demography"].get("n0", 10.0))
    bb_doc = doc["demography"].get("babyboom")
    if bb_doc is not None:
        dem["babyboom"] = BabyBoomParams(**_require(bb_doc, "demography.babyboom", _BB_FIELDS))

    pol = _require(doc["policy"], "policy", _SECTIONS["policy"][1])
    pol["t0"] = float(doc["policy"].get("t0", 0.0))

    pref_doc = doc["preference"]
    if "lambda" not in pref_doc:
        raise SchemaError("missing required field preference.lambda")
    prf = _require(pref_doc, "preference", _SECTIONS["preference"][1])
    prf["lam"] = float(pref_doc["lambda"])

    s = Scenario(market=MarketParams(**mkt), demo=DemographyParams(**dem),
                 policy=PolicyParams(**pol), pref=PreferenceParams(**prf))
    problems = _structural_violations(s)
    if problems:
        raise SchemaError("; ".join(problems))
    return s


def scenario_to_dict(s: Scenario) -> dict:
    demography = {
        "a": s.demo.a, "tau": s.demo.tau, "omega": s.demo.omega, "n0": s.demo.n0,
        "rho": s.demo.rho, "A": s.demo.A, "B": s.demo.B, "c": s.demo.c,
    }
    if s.demo.babyboom is not None:
        bb = s.demo.babyboom
        demography["babyboom"] = {name: getattr(bb, name) for name in _BB_FIELDS}
    return {
        "market": {name: getattr(s.market, name)
                   for name in ("r", "mu", "sigma", "gamma", "xi", "alpha", "beta", "W0")},
        "demography": demography,
        "policy": {name: getattr(s.policy, name)
                   for name in ("theta0", "k0", "m", "tau1", "tau2", "t0")},
        "preference": {"lambda": s.pref.lam, "delta0": s.pref.delta0,
                       "delta1": s.pref.delta1, "delta2": s.pref.delta2},
    }


def load_scenario(path) -> Scenario:
    """Parse a scenario JSON file. Raises ParseError / SchemaError."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be a JSON object")
    return scenario_from_dict(doc)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")


def with_params(s: Scenario, **dotted) -> Scenario:
    """Return a copy with dotted-path overrides, e.g. with_params(s, **{"demo.rho": -0.01})."""
    sections = {"market": s.market, "demo": s.demo, "demography": s.demo,
                "policy": s.policy, "pref": s.pref, "preference": s.pref}
    attr_of = {"market": "market", "demo": "demo", "demography": "demo",
               "policy": "policy", "pref": "pref", "preference": "pref"}
    updates: dict[str, dict] = {}
    for path, value in dotted.items():
        section, _, name = path.partition(".")
        if section not in sections or not name:
            raise SchemaError(f"unknown parameter path '{path}'")
        obj = sections[section]
        if not hasattr(obj, name):
            raise SchemaError(f"unknown parameter path '{path}'")
        updates.setdefault(attr_of[section], {})[name] = value
    out = s
    for attr, kwargs in updates.items():
        out = replace(out, **{attr: replace(getattr(out, attr), **kwargs)})
    return out
