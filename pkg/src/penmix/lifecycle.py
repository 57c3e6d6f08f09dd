"""Participant-side closed forms: coefficient functions, value function,
optimal feedback controls, initial-state estimation, and expected paths.

The value function has the form V = (1/delta) L(t) [x + M(t) w + N(t) y]^delta
with M(t) = M1(t) theta + M2(t) k + M3(t).  All coefficient functions vanish
at the terminal time t = z + omega - a and are continuous across the
retirement boundary t = z + tau - a.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import quad

from . import demography
from .errors import DomainError, InsolventCohort
from .scenario import Scenario, delta_for_entry, validate

#: absolute quadrature tolerance for the L integrals
L_QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class CohortCoefficients:
    """Closed-form multipliers at evaluation time t for the cohort entering at z."""

    t: float
    z: float
    M1: float   # PAYGO-rate multiplier on salary
    M2: float   # EET-rate multiplier on salary
    M3: float   # baseline salary multiplier
    N: float    # EET-balance multiplier
    L: Optional[float] = None      # utility scale; requires a CRRA exponent
    delta: Optional[float] = None  # exponent used for L


@dataclass(frozen=True)
class CohortState:
    """Government-side estimate of a cohort's state at the re-selection time."""

    z: float       # entry time
    zeta: float    # age at t0
    x0: float      # estimated private wealth
    y0: float      # estimated EET balance
    delta: float   # CRRA exponent assigned to the cohort


def _life_end(z: float, s: Scenario) -> float:
    return z + s.demo.omega - s.demo.a


def discount_weight(u: float, z: float, s: Scenario) -> float:
    """Utility discount b(u; z): interest discount, survival, retirement weight.

    The retirement weight applies from u = z + tau - a onward (the boundary
    instant counts as retired).
    """
    age_time = u - z
    if not -1e-12 <= age_time <= s.demo.omega - s.demo.a + 1e-12:
        raise DomainError(f"u = {u} outside the life window of cohort z = {z}")
    w = math.exp(-s.market.r * age_time) * demography.survival(age_time + s.demo.a, s.demo)
    if age_time >= s.demo.tau - s.demo.a:
        w *= s.pref.lam
    return w


# --------------------------------------------------------------------------
# L coefficient (utility scale)
# --------------------------------------------------------------------------

def _growth_exponent(delta: float, s: Scenario) -> float:
    mk = s.market
    return (delta / (1 - delta)) * (mk.r + (mk.mu - mk.r) ** 2 / (2 * mk.sigma**2 * (1 - delta)))


@lru_cache(maxsize=16384)
def _L_of_age(u0: float, delta: float, s: Scenario) -> float:
    """L at life-time u0 = t - z in [0, omega - a]; independent of z otherwise.

    Arguments and result are coerced to Python floats: numpy scalars hash
    equal to floats, so one cache entry serves both and must not leak
    numpy types into scalar code paths.
    """
    u0, delta = float(u0), float(delta)
    d = s.demo
    life = d.omega - d.a
    if u0 >= life - 1e-14:
        return 0.0
    cexp = _growth_exponent(delta, s)
    p = 1.0 / (1.0 - delta)
    r = s.market.r
    lam_p = s.pref.lam**p

    def g(u, lam_fac):
        return (math.exp(-r * u) * demography.survival(u + d.a, d)) ** p \
            * lam_fac * math.exp(cexp * (u - u0))

    ret = d.tau - d.a
    if u0 < ret:
        val = quad(lambda u: g(u, 1.0), u0, ret,
                   epsabs=L_QUAD_ABS_TOL, epsrel=1e-12, limit=200)[0]
        val += quad(lambda u: g(u, lam_p), ret, life,
                    epsabs=L_QUAD_ABS_TOL, epsrel=1e-12, limit=200)[0]
    else:
        val = quad(lambda u: g(u, lam_p), u0, life,
                   epsabs=L_QUAD_ABS_TOL, epsrel=1e-12, limit=200)[0]
    return float(val ** (1.0 - delta))


def coeff_L(t: float, z: float, delta: float, s: Scenario) -> float:
    """Utility-scale coefficient L(t; z) for a cohort with CRRA exponent delta."""
    if not z - 1e-12 <= t <= _life_end(z, s) + 1e-12:
        raise DomainError(f"t = {t} outside [z, z + omega - a] for z = {z}")
    return _L_of_age(min(max(t - z, 0.0), s.demo.omega - s.demo.a), delta, s)


def entry_L(delta: float, s: Scenario) -> float:
    """L at the entry time (same for every cohort)."""
    return _L_of_age(0.0, delta, s)


# --------------------------------------------------------------------------
# M1, M2, M3, N
# --------------------------------------------------------------------------

def _coef_arrays(t, z: float, s: Scenario):
    """Vectorized (M1, M2, M3, N) over evaluation times t for entry time z."""
    dc = validate(s)
    d, p = s.demo, s.policy
    r = s.market.r
    eps, epst = dc.epsilon, dc.epsilon_tilde
    Lam, a_tau = dc.Lambda, dc.a_tau
    t = np.asarray(t, dtype=float)
    q = z - t + d.tau - d.a              # time to retirement (positive while working)
    life = np.maximum(z - t + d.omega - d.a, 0.0)
    ret = q <= 0
    qp = np.maximum(q, 0.0)

    eq = np.exp(eps * qp)
    if d.babyboom is None:
        M1 = np.where(
            ret,
            (Lam / eps) * (np.exp(eps * life) - 1.0),
            (1.0 / eps) * ((1 - p.tau1)
                           + (Lam * math.exp(eps * (d.omega - d.tau)) - Lam - (1 - p.tau1)) * eq))
    else:
        M1 = _bb_m1(t, z, s, eps)
    ann = (1 - p.tau2) / (r * a_tau) * (1 - math.exp(-r * (d.omega - d.tau)))
    M2 = np.where(ret, 0.0,
                  ann / (eps - epst) * (eq - np.exp(epst * qp))
                  - (1 - p.tau1) / eps * (eq - 1.0))
    M3 = np.where(ret, 0.0, (1 - p.tau1) / eps * (eq - 1.0))
    N = np.where(ret,
                 (1 - p.tau2) / (r * a_tau) * (1.0 - np.exp(-r * life)),
                 ann * np.exp(epst * qp))
    return M1, M2, M3, N


def _bb_m1(t, z: float, s: Scenario, eps: float):
    """Time-varying-support-ratio M1: numeric benefit leg minus closed contribution leg."""
    d, p = s.demo, s.policy
    lam_fn = demography.support_ratio_fn(d)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    T = _life_end(z, s)
    t_ret = z + d.tau - d.a
    out = np.empty_like(t)
    for i, ti in enumerate(t):
        if ti >= T - 1e-14:
            out[i] = 0.0
            continue
        plus = quad(lambda u: lam_fn(u) * math.exp(eps * (u - ti)),
                    max(ti, t_ret), T,
                    epsabs=demography.BB_QUAD_ABS_TOL, limit=400)[0]
        minus = 0.0
        if ti < t_ret:
            minus = (1 - p.tau1) / eps * (math.exp(eps * (t_ret - ti)) - 1.0)
        out[i] = plus - minus
    return out if out.size > 1 else out.reshape(())


def coefficients(t: float, z: float, s: Scenario) -> CohortCoefficients:
    """Salary and EET-balance multipliers (M1, M2, M3, N) at time t."""
    if not z - 1e-12 <= t <= _life_end(z, s) + 1e-12:
        raise DomainError(f"t = {t} outside [z, z + omega - a] for z = {z}")
    M1, M2, M3, N = (float(v) for v in _coef_arrays(t, z, s))
    return CohortCoefficients(t=t, z=z, M1=M1, M2=M2, M3=M3, N=N)


def entry_coefficients(s: Scenario):
    """(M01, M02, M03): the coefficient values at entry, independent of z."""
    d, p = s.demo, s.policy
    mk = s.market
    nu = (mk.mu - mk.r) / mk.sigma
    eps = mk.gamma - mk.r - mk.xi * nu
    epst = mk.alpha - mk.r - mk.beta * nu
    Lam = demography.support_ratio(d)
    a_tau = demography.annuity_factor(d, mk.r)
    ea = math.exp(eps * (d.tau - d.a))
    M01 = (1.0 / eps) * (Lam * math.exp(eps * (d.omega - d.a))
                         - (Lam + 1 - p.tau1) * ea + (1 - p.tau1))
    M02 = ((1 - p.tau2) / (mk.r * a_tau * (eps - epst))
           * (1 - math.exp(-mk.r * (d.omega - d.tau)))
           * (ea - math.exp(epst * (d.tau - d.a)))
           - (1 - p.tau1) / eps * (ea - 1.0))
    M03 = (1 - p.tau1) / eps * (ea - 1.0)
    return M01, M02, M03


# --------------------------------------------------------------------------
# value function and controls
# --------------------------------------------------------------------------

def total_resource(x: float, w: float, y: float, coefs: CohortCoefficients,
                   theta: float, k: float) -> float:
    """Equivalent disposable wealth G = x + (M1 theta + M2 k + M3) w + N y."""
    return x + (coefs.M1 * theta + coefs.M2 * k + coefs.M3) * w + coefs.N * y


def annuity_income(y_at_retirement: float, s: Scenario) -> float:
    """Annual after-tax life-annuity income bought by the EET balance at
    retirement: Y(retirement) (1 - tau2) / a_tau."""
    dc = validate(s)
    return y_at_retirement * (1 - s.policy.tau2) / dc.a_tau


def value_function(t: float, x: float, w: float, y: float, z: float,
                   theta: float, k: float, s: Scenario, delta: float) -> float:
    """Maximal expected remaining lifetime utility from state (x, w, y) at t."""
    if w <= 0:
        raise DomainError(f"average salary must be positive (got {w})")
    coefs = coefficients(t, z, s)
    G = total_resource(x, w, y, coefs, theta, k)
    if G <= 0:
        raise InsolventCohort(
            f"total resource G = {G} <= 0 at t = {t} for cohort z = {z}")
    return (1.0 / delta) * coeff_L(t, z, delta, s) * G**delta


def optimal_controls(t: float, x: float, w: float, y: float, z: float,
                     theta: float, k: float, s: Scenario, delta: float):
    """Optimal risky allocation and consumption rate (pi_star, C_star) at t."""
    coefs = coefficients(t, z, s)
    G = total_resource(x, w, y, coefs, theta, k)
    if G <= 0:
        raise InsolventCohort(
            f"total resource G = {G} <= 0 at t = {t} for cohort z = {z}")
    L = coeff_L(t, z, delta, s)
    if L <= 0:
        raise DomainError("controls undefined at the terminal age (L = 0)")
    dc = validate(s)
    mk = s.market
    working = (t - z) < s.demo.tau - s.demo.a
    M = coefs.M1 * theta + coefs.M2 * k + coefs.M3
    pi = (dc.nu * G / (mk.sigma * (1 - delta))
          - (mk.xi * w * M + mk.beta * y * coefs.N * working) / mk.sigma)
    b = discount_weight(t, z, s)
    C = (L / b) ** (1.0 / (delta - 1.0)) * G
    return pi, C


# --------------------------------------------------------------------------
# state estimation and expected optimal paths
# --------------------------------------------------------------------------

def _salary_accum(lo: float, hi: float, s: Scenario) -> float:
    """integral of e^{(gamma - alpha) u} du over [lo, hi]."""
    g = s.market.gamma - s.market.alpha
    if abs(g) < 1e-14:
        return hi - lo
    return (math.exp(g * hi) - math.exp(g * lo)) / g


def expected_eet_balance(t: float, z: float, s: Scenario, k: float,
                         k_initial: Optional[float] = None) -> float:
    """E[Y(t)] for a cohort entering at z.

    Contributions accrue at rate `k_initial` up to t0 and `k` afterwards
    (pass k_initial=None for a single fixed rate); the balance freezes at
    retirement.
    """
    d, p, mk = s.demo, s.policy, s.market
    te = min(t, z + d.tau - d.a)
    if te <= z:
        return 0.0
    if k_initial is None or te <= p.t0:
        rate_te = k if k_initial is None else k_initial
        return rate_te * mk.W0 * math.exp(mk.alpha * te) * _salary_accum(z, te, s)
    acc = k_initial * _salary_accum(z, min(p.t0, te), s)
    if te > p.t0:
        acc += k * _salary_accum(p.t0, te, s)
    return mk.W0 * math.exp(mk.alpha * te) * acc


def estimate_initial_states(z: float, s: Scenario,
                            delta: Optional[float] = None) -> CohortState:
    """Expectation-based estimate of (x0, y0) at t0 for the cohort entering at z.

    Assumes the initial rates (theta0, k0) prevailed over the cohort's whole
    past; the private-wealth estimate follows the martingale representation of
    the optimally controlled wealth.  `delta` overrides the class exponent
    (used by quadrature callers at the class boundary).
    """
    d, p, mk = s.demo, s.policy, s.market
    t0 = p.t0
    if not t0 - (d.omega - d.a) - 1e-9 <= z <= t0 + 1e-9:
        raise DomainError(f"cohort z = {z} is not alive-and-entered at t0 = {t0}")
    dc = validate(s)
    if delta is None:
        delta = delta_for_entry(z, s)
    y0 = expected_eet_balance(t0, z, s, p.k0)
    c_t0 = coefficients(t0, z, s)
    M_t0 = c_t0.M1 * p.theta0 + c_t0.M2 * p.k0 + c_t0.M3
    c_z = coefficients(z, z, s)
    M_z = c_z.M1 * p.theta0 + c_z.M2 * p.k0 + c_z.M3
    L_t0 = coeff_L(t0, z, delta, s)
    L_z = coeff_L(z, z, delta, s)
    w0 = mk.W0 * math.exp(mk.gamma * t0)
    drift = math.exp((-mk.gamma + mk.r / (1 - delta)
                      + (2 - delta) * dc.nu**2 / (2 * (1 - delta) ** 2)) * (t0 - z))
    x0 = -M_t0 * w0 - c_t0.N * y0 + (L_t0 / L_z) ** (1.0 / (1 - delta)) * M_z * w0 * drift
    return CohortState(z=float(z), zeta=float(d.a + t0 - z), x0=float(x0),
                       y0=float(y0), delta=float(delta))


def expected_wealth(t: float, z: float, s: Scenario, theta: float, k: float,
                    switch_at_t0: bool = True) -> float:
    """E[X*(t)] for the cohort entering at z under rates (theta, k).

    With switch_at_t0 (and z <= t0) the cohort ran (theta0, k0) until t0 and
    (theta, k) afterwards, starting from the estimated (x0, y0); otherwise the
    rates (theta, k) apply for the whole life.
    """
    d, p, mk = s.demo, s.policy, s.market
    dc = validate(s)
    delta = delta_for_entry(z, s)
    T = _life_end(z, s)
    if not min(z, p.t0) - 1e-9 <= t <= T + 1e-9:
        raise DomainError(f"t = {t} outside the cohort's path domain")
    grow = mk.r / (1 - delta) + (2 - delta) * dc.nu**2 / (2 * (1 - delta) ** 2)
    c_t = coefficients(t, z, s)
    M_t = c_t.M1 * theta + c_t.M2 * k + c_t.M3
    L_t = coeff_L(t, z, delta, s)
    if switch_at_t0 and z <= p.t0:
        st = estimate_initial_states(z, s)
        EY = expected_eet_balance(t, z, s, k, k_initial=p.k0)
        c0 = coefficients(p.t0, z, s)
        G0 = st.x0 + c0.N * st.y0 + (c0.M1 * theta + c0.M2 * k + c0.M3) \
            * mk.W0 * math.exp(mk.gamma * p.t0)
        L0 = coeff_L(p.t0, z, delta, s)
        if L_t <= 0.0:
            return 0.0
        fac = (L0 / L_t) ** (1.0 / (delta - 1.0)) * G0 * math.exp(grow * (t - p.t0))
    else:
        EY = expected_eet_balance(t, z, s, k)
        c_z = coefficients(z, z, s)
        M_z = c_z.M1 * theta + c_z.M2 * k + c_z.M3
        L_z = coeff_L(z, z, delta, s)
        if L_t <= 0.0:
            return 0.0
        fac = (L_t / L_z) ** (1.0 / (1 - delta)) * M_z * mk.W0 \
            * math.exp(mk.gamma * t) * math.exp((-mk.gamma + grow) * (t - z))
    return -M_t * mk.W0 * math.exp(mk.gamma * t) - c_t.N * EY + fac


def expected_paths(z: float, s: Scenario, theta_star: float, k_star: float,
                   grid: float):
    """Expected optimal states and controls on a time grid.

    Returns a dict of equal-length arrays t, EX, EY, Epi, EC covering
    [max(z, t0), z + omega - a].  Controls are obtained by applying their
    linearity in (X, W, Y) to the expected states; at the terminal instant
    they are evaluated just inside the boundary.
    """
    if grid <= 0:
        raise DomainError(f"grid step must be positive (got {grid})")
    d, p, mk = s.demo, s.policy, s.market
    dc = validate(s)
    delta = delta_for_entry(z, s)
    start = max(z, p.t0)
    T = _life_end(z, s)
    n = int(math.ceil((T - start) / grid - 1e-9))
    ts = np.minimum(start + grid * np.arange(n + 1), T)
    if ts[-1] < T - 1e-12:
        ts = np.append(ts, T)
    # evaluate just inside the terminal boundary: the consumption rate
    # diverges while the resource vanishes, and only the product has a limit
    t_eff = np.minimum(ts, T - 1e-8)
    EX = np.array([expected_wealth(t, z, s, theta_star, k_star) for t in t_eff])
    EY = np.array([expected_eet_balance(t, z, s, k_star,
                                        k_initial=p.k0 if z <= p.t0 else None)
                   for t in t_eff])
    EW = mk.W0 * np.exp(mk.gamma * t_eff)
    M1, M2, M3, N = _coef_arrays(t_eff, z, s)
    M = M1 * theta_star + M2 * k_star + M3
    EG = EX + M * EW + N * EY
    working = (t_eff - z) < d.tau - d.a
    Epi = dc.nu * EG / (mk.sigma * (1 - delta)) \
        - (mk.xi * EW * M + mk.beta * EY * N * working) / mk.sigma
    rate = np.array([(coeff_L(t, z, delta, s) / discount_weight(t, z, s))
                     ** (1.0 / (delta - 1.0)) for t in t_eff])
    EC = rate * EG
    return {"t": ts, "EX": EX, "EY": EY, "Epi": Epi, "EC": EC}
