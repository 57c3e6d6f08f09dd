"""Independent numeric oracles used by the test suite.

Everything here is computed without going through the code paths under test:
brute-force quadrature, finite differences, and direct formula evaluation.
"""
import math

import numpy as np

from penmix import lifecycle, validate
from penmix.scenario import Scenario


def trapezoid_annuity(demo, r: float, hi: float = 60.0, dt: float = 1e-4) -> float:
    """Brute-force trapezoid-rule annuity factor on [0, hi]."""
    t = np.arange(0.0, hi + dt / 2, dt)
    lnc = math.log(demo.c)
    vals = np.exp(-(r + demo.A) * t - (demo.B / lnc) * demo.c**demo.tau
                  * np.expm1(t * lnc))
    return float(np.trapezoid(vals, dx=dt))


def hjb_residual(t, x, w, y, z, theta, k, s: Scenario, delta, h=1e-2):
    """Residual of the dynamic-programming PDE at one interior state.

    State partials come from exact differentiation of the closed form at
    fixed t; the time derivative is a 4th-order central difference, so the
    check is honest about whether the coefficient functions solve their
    backward equations.  Returns (residual, V_t) for relative comparison.
    """
    mk = s.market
    dc = validate(s)
    d = s.demo
    working = (t - z) < d.tau - d.a

    def V(tt):
        c = lifecycle.coefficients(tt, z, s)
        G = x + (c.M1 * theta + c.M2 * k + c.M3) * w + c.N * y
        return (1.0 / delta) * lifecycle.coeff_L(tt, z, delta, s) * G**delta

    c = lifecycle.coefficients(t, z, s)
    M = c.M1 * theta + c.M2 * k + c.M3
    L = lifecycle.coeff_L(t, z, delta, s)
    G = x + M * w + c.N * y
    Vx = L * G ** (delta - 1)
    Vxx = (delta - 1) * L * G ** (delta - 2)
    Vxw = Vxx * M
    Vxy = Vxx * c.N
    Vw = Vx * M
    Vww = Vxx * M * M
    Vwy = Vxx * M * c.N
    Vy = Vx * c.N
    Vyy = Vxx * c.N * c.N
    Vt = (-V(t + 2 * h) + 8 * V(t + h) - 8 * V(t - h) + V(t - 2 * h)) / (12 * h)

    b = lifecycle.discount_weight(t, z, s)
    pi = (dc.nu * G / (mk.sigma * (1 - delta))
          - (mk.xi * w * M + mk.beta * y * c.N * working) / mk.sigma)
    C = (L / b) ** (1.0 / (delta - 1.0)) * G
    a_t = (1 - theta - k) * (1 - s.policy.tau1) if working else theta * dc.Lambda
    ann = 0.0 if working else (1 - s.policy.tau2) / dc.a_tau * y
    res = (Vt + 0.5 * mk.sigma**2 * pi**2 * Vxx + mk.sigma * mk.xi * pi * w * Vxw
           + mk.sigma * mk.beta * pi * y * working * Vxy
           + 0.5 * mk.xi**2 * w**2 * Vww
           + mk.xi * mk.beta * w * y * working * Vwy
           + 0.5 * mk.beta**2 * y**2 * working * Vyy
           + (mk.r * x + pi * (mk.mu - mk.r) + a_t * w + ann - C) * Vx
           + mk.gamma * w * Vw + (mk.alpha * y + k * w) * working * Vy
           + b * C**delta / delta)
    return res, Vt


def random_interior_states(s: Scenario, n: int, seed: int, z: float = None):
    """Interior (t, x, w, y) states with positive resource, clear of the
    retirement and terminal boundaries."""
    d = s.demo
    z = s.policy.t0 if z is None else z
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        t = z + rng.uniform(0.5, d.omega - d.a - 0.5)
        if abs((t - z) - (d.tau - d.a)) < 0.1:
            continue
        w = rng.uniform(0.5, 3.0)
        y = rng.uniform(0.0, 2.0)
        c = lifecycle.coefficients(t, z, s)
        base = (c.M1 * s.policy.theta0 + c.M2 * s.policy.k0 + c.M3) * w + c.N * y
        x = rng.uniform(-0.5 * base, 3.0)
        if x + base > 1e-6:
            out.append((t, x, w, y))
    return out
