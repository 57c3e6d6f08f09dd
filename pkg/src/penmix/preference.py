"""Age-dependent preference orderings among PAYGO, EET, and individual savings.

A cohort aged zeta at the re-selection time compares the three vehicles via
the signs of three coefficients: Mt1 (PAYGO vs savings), Mt2 (EET vs savings),
and Mt1 - Mt2 (PAYGO vs EET).  Each sign flips at most once on [a, tau), at
the critical ages zeta_hat, zeta_bar, zeta_tilde respectively.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AssumptionError, DomainError
from .scenario import Scenario, validate

#: half-width of the indifference band: coefficient magnitudes below this are
#: reported as ties (exact zeros occur only at analytically constructed cases)
TIE_TOL = 1e-12

#: scan step (years) used to bracket roots when no closed form exists
BB_SCAN_STEP = 0.25


def tilde_coefficients(zeta: float, s: Scenario):
    """(Mt1, Mt2, Mt1 - Mt2) at age zeta.

    With a time-varying support ratio Mt1 (and hence the difference) is
    computed by quadrature; Mt2 never depends on the entrant flow.
    """
    d, p = s.demo, s.policy
    if not d.a - 1e-12 <= zeta <= d.omega + 1e-12:
        raise DomainError(f"age {zeta} outside [a, omega]")
    dc = validate(s)
    eps, epst, r = dc.epsilon, dc.epsilon_tilde, s.market.r
    Lam, a_tau = dc.Lambda, dc.a_tau
    ann = (1 - p.tau2) * (1 - math.exp(-r * (d.omega - d.tau))) / (r * a_tau)

    if zeta >= d.tau:
        mt2 = 0.0
    else:
        eq = math.exp(eps * (d.tau - zeta))
        eqt = math.exp(epst * (d.tau - zeta))
        mt2 = ann / (eps - epst) * (eq - eqt) - (1 - p.tau1) / eps * (eq - 1.0)

    if d.babyboom is not None:
        from .lifecycle import _bb_m1
        mt1 = float(_bb_m1(np.array([p.t0]), d.a + p.t0 - zeta, s, eps))
        return mt1, mt2, mt1 - mt2

    if zeta >= d.tau:
        mt1 = Lam / eps * (math.exp(eps * (d.omega - zeta)) - 1.0)
        return mt1, 0.0, mt1
    eq = math.exp(eps * (d.tau - zeta))
    mt1 = (1.0 / eps) * ((1 - p.tau1)
                         + (Lam * math.exp(eps * (d.omega - d.tau)) - Lam - (1 - p.tau1)) * eq)
    diff = (Lam / eps * (math.exp(eps * (d.omega - d.tau)) - 1.0)
            - ann / (eps - epst) * (1.0 - math.exp((epst - eps) * (d.tau - zeta)))) * eq
    return mt1, mt2, diff


def thresholds(s: Scenario):
    """(Lambda_FP, Lambda_EP): support-ratio levels below which the
    PAYGO-vs-savings and PAYGO-vs-EET critical ages exist."""
    d, p = s.demo, s.policy
    dc = validate(s)
    eps, epst, r, a_tau = dc.epsilon, dc.epsilon_tilde, s.market.r, dc.a_tau
    lam_fp = (1 - p.tau1) * (1 - math.exp(-eps * (d.tau - d.a))) \
        / (math.exp(eps * (d.omega - d.tau)) - 1.0)
    lam_ep = (eps * (1 - p.tau2) * (1 - math.exp(-r * (d.omega - d.tau)))
              * (math.exp((epst - eps) * (d.tau - d.a)) - 1.0)
              / (r * a_tau * (math.exp(eps * (d.omega - d.tau)) - 1.0) * (epst - eps)))
    return lam_fp, lam_ep


def m2_boundary_diagnostics(s: Scenario):
    """(Mt2(a), Mt2'(tau)): the boundary values deciding the EET-vs-savings case."""
    d, p = s.demo, s.policy
    dc = validate(s)
    m2a = tilde_coefficients(d.a, s)[1]
    dm2_tau = (1 - p.tau1) - (1 - p.tau2) * (1 - math.exp(-s.market.r * (d.omega - d.tau))) \
        / (s.market.r * dc.a_tau)
    return m2a, dm2_tau


def _scan_root(f, lo: float, hi: float, step: float = BB_SCAN_STEP,
               xtol: float = 1e-8):
    """Bracket-scan then bisect; returns (first root or None, crossing count)."""
    xs = np.arange(lo, hi, step)
    xs = np.append(xs, hi)
    vals = np.array([f(x) for x in xs])
    roots = []
    for i in range(len(xs) - 1):
        va, vb = vals[i], vals[i + 1]
        if va == 0.0:
            roots.append(xs[i])
            continue
        if va * vb < 0:
            a_, b_ = xs[i], xs[i + 1]
            fa = va
            while b_ - a_ > xtol:
                mid = 0.5 * (a_ + b_)
                fm = f(mid)
                if fa * fm <= 0:
                    b_ = mid
                else:
                    a_, fa = mid, fm
            roots.append(0.5 * (a_ + b_))
    if vals[-1] == 0.0:
        roots.append(xs[-1])
    return (roots[0] if roots else None), len(roots)


def critical_age_paygo_savings(s: Scenario) -> Optional[float]:
    """Age above which PAYGO is preferred to individual savings; None when
    every age prefers PAYGO."""
    age, _ = _critical_age_paygo_savings_diag(s)
    return age


def _critical_age_paygo_savings_diag(s: Scenario):
    d, p = s.demo, s.policy
    dc = validate(s)
    if d.babyboom is not None:
        mt1 = lambda zeta: tilde_coefficients(zeta, s)[0]
        if mt1(d.a) > 0:
            return None, 0
        return _scan_root(mt1, d.a, d.tau - 1e-9)
    lam_fp, _ = thresholds(s)
    if dc.Lambda > lam_fp:
        return None, 0
    eps = dc.epsilon
    zh = d.tau + (1.0 / eps) * math.log(
        1.0 + (dc.Lambda - dc.Lambda * math.exp(eps * (d.omega - d.tau))) / (1 - p.tau1))
    return zh, 1


def critical_age_paygo_eet(s: Scenario) -> Optional[float]:
    """Age above which PAYGO is preferred to EET; None when every age prefers
    PAYGO."""
    age, _ = _critical_age_paygo_eet_diag(s)
    return age


def _critical_age_paygo_eet_diag(s: Scenario):
    d, p = s.demo, s.policy
    dc = validate(s)
    if d.babyboom is not None:
        diff = lambda zeta: tilde_coefficients(zeta, s)[2]
        if diff(d.a) > 0:
            return None, 0
        return _scan_root(diff, d.a, d.tau - 1e-9)
    _, lam_ep = thresholds(s)
    if dc.Lambda > lam_ep:
        return None, 0
    eps, epst, r, a_tau = dc.epsilon, dc.epsilon_tilde, s.market.r, dc.a_tau
    zt = d.tau + (1.0 / (eps - epst)) * math.log(
        1.0 - dc.Lambda * (math.exp(eps * (d.omega - d.tau)) - 1.0) * r * (eps - epst)
        * a_tau / (eps * (1 - p.tau2) * (1 - math.exp(-r * (d.omega - d.tau)))))
    return zt, 1


@dataclass(frozen=True)
class EetSavingsCase:
    """Outcome of the EET-vs-savings comparison."""

    zeta_bar: Optional[float]     # interior flip age, if any
    flag: str                     # "interior" | "all_prefer_eet" | "all_prefer_savings"
    m2_at_entry: float            # Mt2(a)
    dm2_at_retirement: float      # Mt2'(tau)


def critical_age_eet_savings(s: Scenario) -> EetSavingsCase:
    """EET-vs-savings case split; requires epsilon_tilde > 0."""
    dc = validate(s)
    if dc.epsilon_tilde <= 0:
        raise AssumptionError(
            f"EET-vs-savings comparison requires epsilon_tilde > 0 "
            f"(got {dc.epsilon_tilde})")
    d = s.demo
    m2a, dm2 = m2_boundary_diagnostics(s)
    if m2a < 0:
        return EetSavingsCase(None, "all_prefer_savings", m2a, dm2)
    if dm2 <= 0:
        return EetSavingsCase(None, "all_prefer_eet", m2a, dm2)
    # unique sign change + -> - on [a, tau) guaranteed by the case conditions
    f = lambda zeta: tilde_coefficients(zeta, s)[1]
    lo, hi = d.a, d.tau - 1e-9
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return EetSavingsCase(0.5 * (lo + hi), "interior", m2a, dm2)


def _ordering_string(mt1: float, mt2: float) -> str:
    """Total order over {P, E, I} from the vehicle scores (savings scores 0)."""
    scored = sorted((("P", mt1), ("E", mt2), ("I", 0.0)),
                    key=lambda kv: -kv[1])
    out = scored[0][0]
    for (_, prev), (name, val) in zip(scored, scored[1:]):
        out += "~" if abs(prev - val) <= TIE_TOL else ">"
        out += name
    return out


def _case_label(zh_exists: bool, zt_exists: bool, eet_flag: str) -> str:
    """Terminal outcome of the preference flowchart.

    Cases 1-3 cover the combinations where at least one of the PAYGO critical
    ages is absent (PAYGO tops the missing comparison at every age); cases 4-6
    split the both-ages-exist family by the EET-vs-savings regime (all prefer
    EET / interior flip / all prefer savings).
    """
    if not zh_exists and not zt_exists:
        return "case_1"
    if zh_exists and not zt_exists:
        return "case_2"
    if not zh_exists and zt_exists:
        return "case_3"
    return {"all_prefer_eet": "case_4",
            "interior": "case_5",
            "all_prefer_savings": "case_6"}[eet_flag]


@dataclass(frozen=True)
class Classification:
    zeta: float
    mt1: float
    mt2: float
    mt1_minus_mt2: float
    ordering: str
    case_label: str


def classify(zeta: float, s: Scenario) -> Classification:
    """Preference ordering of the cohort aged zeta, plus the scenario case."""
    mt1, mt2, _diff = tilde_coefficients(zeta, s)
    zh, _ = _critical_age_paygo_savings_diag(s)
    zt, _ = _critical_age_paygo_eet_diag(s)
    eet = critical_age_eet_savings(s)
    return Classification(
        zeta=zeta, mt1=mt1, mt2=mt2, mt1_minus_mt2=_diff,
        ordering=_ordering_string(mt1, mt2),
        case_label=_case_label(zh is not None, zt is not None, eet.flag))


@dataclass(frozen=True)
class PreferenceReport:
    """Thresholds, critical ages, and per-age orderings for one scenario."""

    lambda_fp: float
    lambda_ep: float
    zeta_hat: Optional[float]
    zeta_tilde: Optional[float]
    zeta_bar: Optional[float]
    eet_flag: str
    case_label: str
    orderings: tuple = field(default=())      # rows (zeta, mt1, mt2, diff, ordering)
    diagnostics: tuple = field(default=())    # (name, crossing count) pairs

    def to_dict(self) -> dict:
        return {
            "lambda_fp": self.lambda_fp,
            "lambda_ep": self.lambda_ep,
            "zeta_hat": self.zeta_hat,
            "zeta_tilde": self.zeta_tilde,
            "zeta_bar": self.zeta_bar,
            "eet_flag": self.eet_flag,
            "case_label": self.case_label,
            "diagnostics": {name: count for name, count in self.diagnostics},
        }


def preference_map(s: Scenario, step: float = 1.0) -> PreferenceReport:
    """Full preference report with per-age orderings on a grid over [a, omega]."""
    if step <= 0:
        raise DomainError(f"age step must be positive (got {step})")
    d = s.demo
    lam_fp, lam_ep = thresholds(s)
    zh, zh_n = _critical_age_paygo_savings_diag(s)
    zt, zt_n = _critical_age_paygo_eet_diag(s)
    eet = critical_age_eet_savings(s)
    label = _case_label(zh is not None, zt is not None, eet.flag)
    ages = np.arange(d.a, d.omega + step / 2, step)
    rows = []
    for zeta in ages:
        mt1, mt2, diff = tilde_coefficients(float(zeta), s)
        rows.append((float(zeta), mt1, mt2, diff, _ordering_string(mt1, mt2)))
    return PreferenceReport(
        lambda_fp=lam_fp, lambda_ep=lam_ep, zeta_hat=zh, zeta_tilde=zt,
        zeta_bar=eet.zeta_bar, eet_flag=eet.flag, case_label=label,
        orderings=tuple(rows),
        diagnostics=(("zeta_hat_crossings", zh_n), ("zeta_tilde_crossings", zt_n)))
