"""Survival probabilities, cohort-mass integrals, support ratio, annuity factor.

Mortality follows Makeham's law: force of mortality A + B*c^x, giving the
survival function s(x) = exp(-A(x-a) - (B/ln c)(c^x - c^a)) conditional on
being alive at the entry age a.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import DomainError
from .scenario import BabyBoomParams, DemographyParams

#: absolute quadrature tolerance for the demographic integrals
QUAD_ABS_TOL = 1e-10
#: absolute tolerance for the time-varying support-ratio integrals
BB_QUAD_ABS_TOL = 1e-9
#: grid step (years) of the cached Lambda(t) table
BB_GRID_STEP = 0.1


def survival(x, demo: DemographyParams):
    """Probability that a participant alive at age a is still alive at age x."""
    x = np.asarray(x, dtype=float)
    if np.any(x < demo.a - 1e-12):
        raise DomainError(f"survival undefined below the entry age {demo.a}")
    lnc = math.log(demo.c)
    out = np.exp(-demo.A * (x - demo.a)
                 - (demo.B / lnc) * (np.exp(x * lnc) - demo.c**demo.a))
    return float(out) if out.ndim == 0 else out


def _mass_integrand(demo: DemographyParams):
    lnc = math.log(demo.c)
    ca = demo.c**demo.a
    rhoA = demo.rho + demo.A
    a = demo.a

    def f(u):
        return math.exp(-rhoA * (u - a) - (demo.B / lnc) * (math.exp(u * lnc) - ca))

    return f


def lambda_segment(lo: float, hi: float, demo: DemographyParams) -> float:
    """Entrant-discounted survivor mass integral over ages [lo, hi]."""
    if not (demo.a - 1e-12 <= lo <= hi <= demo.omega + 1e-12):
        raise DomainError(
            f"segment [{lo}, {hi}] must satisfy a <= lo <= hi <= omega")
    if hi - lo <= 0:
        return 0.0
    val, _ = quad(_mass_integrand(demo), lo, hi,
                  epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)
    return val


def support_ratio(demo: DemographyParams) -> float:
    """Workers per retiree mass; its inverse is the dependency ratio."""
    return (lambda_segment(demo.a, demo.tau, demo)
            / lambda_segment(demo.tau, demo.omega, demo))


def annuity_factor(demo: DemographyParams, r: float) -> float:
    """Expected present value at retirement of one unit of lifetime income.

    Integrates exp(-(r+A)t - (B/ln c) c^tau (c^t - 1)) over t in [0, inf),
    truncated where the integrand falls below 1e-16 (the senescent mortality
    term forces super-exponential decay).
    """
    if r <= 0:
        raise DomainError(f"annuity factor requires r > 0 (got {r})")
    lnc = math.log(demo.c)
    scale = (demo.B / lnc) * demo.c**demo.tau

    def exponent(t):
        return -(r + demo.A) * t - scale * math.expm1(t * lnc)

    upper = 1.0
    while exponent(upper) > math.log(1e-16):
        upper *= 2.0
        if upper > 1e9:  # B = 0: pure exponential, integral is 1/(r+A)
            break
    val, _ = quad(lambda t: math.exp(exponent(t)), 0.0, upper,
                  epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)
    if upper > 1e9:
        val += math.exp(exponent(upper)) / (r + demo.A)
    return val


# --------------------------------------------------------------------------
# baby-boom entrant flow and time-varying support ratio
# --------------------------------------------------------------------------

def bb_entrants(t, bb: BabyBoomParams):
    """Entrant density n(t): exponential / logistic / exponential, continuous."""
    t = np.asarray(t, dtype=float)
    n_t2 = bb.nm / (1.0 + (bb.nm / bb.n1 - 1.0) * math.exp(-bb.kappa * (bb.t2 - bb.t1)))
    pre = bb.n1 * np.exp(bb.rho1 * (t - bb.t1))
    mid = bb.nm / (1.0 + (bb.nm / bb.n1 - 1.0) * np.exp(-bb.kappa * np.clip(t - bb.t1, 0.0, None)))
    post = n_t2 * np.exp(bb.rho2 * (t - bb.t2))
    out = np.where(t <= bb.t1, pre, np.where(t <= bb.t2, mid, post))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SupportRatioFn:
    """Support ratio as a function of time.

    In constant mode the value is t-independent. In babyboom mode the ratio is
    tabulated on a uniform grid over [t_lo, t_hi] (step `grid_step`) with
    monotone-cubic interpolation between nodes and constant extension outside.
    """

    mode: str                    # "constant" | "babyboom"
    value: float                 # constant-mode value (babyboom: left-plateau value)
    t_lo: float = -math.inf
    t_hi: float = math.inf
    grid_step: float = 0.0
    _interp: Optional[PchipInterpolator] = None
    _right_value: float = 0.0

    def __call__(self, t):
        if self.mode == "constant":
            t = np.asarray(t, dtype=float)
            out = np.full_like(t, self.value)
            return float(out) if out.ndim == 0 else out
        t = np.asarray(t, dtype=float)
        clipped = np.clip(t, self.t_lo, self.t_hi)
        out = np.where(t <= self.t_lo, self.value,
                       np.where(t >= self.t_hi, self._right_value, self._interp(clipped)))
        return float(out) if out.ndim == 0 else out


def _bb_mass(t: float, lo: float, hi: float, demo: DemographyParams) -> float:
    """integral over ages [lo, hi] of n(t - u + a) s(u), split at the regime kinks."""
    bb = demo.babyboom
    a = demo.a
    lnc = math.log(demo.c)
    ca = demo.c**demo.a

    def f(u):
        n = bb_entrants(t - u + a, bb)
        return n * math.exp(-demo.A * (u - a) - (demo.B / lnc) * (math.exp(u * lnc) - ca))

    kinks = sorted(v for v in (t - bb.t1 + a, t - bb.t2 + a) if lo < v < hi)
    edges = [lo, *kinks, hi]
    return sum(quad(f, e0, e1, epsabs=BB_QUAD_ABS_TOL, epsrel=1e-11, limit=200)[0]
               for e0, e1 in zip(edges, edges[1:]))


@lru_cache(maxsize=16)
def support_ratio_fn(demo: DemographyParams) -> SupportRatioFn:
    """Build (and cache) the support-ratio function for this demography."""
    if demo.babyboom is None:
        return SupportRatioFn(mode="constant", value=support_ratio(demo))

    bb = demo.babyboom
    # Lambda(t) is constant outside [t1, t2 + omega - a]: before t1 every living
    # cohort entered in the rho1 regime, after t2 + omega - a in the rho2 regime.
    t_lo, t_hi = bb.t1, bb.t2 + demo.omega - demo.a
    ts = np.arange(t_lo, t_hi + BB_GRID_STEP / 2, BB_GRID_STEP)
    table = np.array([
        _bb_mass(t, demo.a, demo.tau, demo) / _bb_mass(t, demo.tau, demo.omega, demo)
        for t in ts])
    return SupportRatioFn(mode="babyboom", value=float(table[0]),
                          t_lo=float(ts[0]), t_hi=float(ts[-1]),
                          grid_step=BB_GRID_STEP,
                          _interp=PchipInterpolator(ts, table),
                          _right_value=float(table[-1]))


def bb_support_ratio(t, demo: DemographyParams):
    """Time-varying support ratio under the baby-boom entrant flow."""
    if demo.babyboom is None:
        raise DomainError("scenario has no babyboom parameters")
    return support_ratio_fn(demo)(t)
