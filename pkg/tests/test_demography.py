import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penmix import DomainError, demography
from penmix.scenario import BabyBoomParams

from _oracles import trapezoid_annuity

# 50-digit evaluations of the survival formula at the US Makeham constants
SURVIVAL_US_65 = 0.9549788295793718
SURVIVAL_US_100 = 0.06352701557526895


def test_survival_at_entry_is_one(us):
    assert demography.survival(us.demo.a, us.demo) == pytest.approx(1.0, abs=1e-15)


def test_survival_highprecision_value(us):
    assert demography.survival(65.0, us.demo) == pytest.approx(SURVIVAL_US_65, rel=1e-14)
    assert demography.survival(100.0, us.demo) == pytest.approx(SURVIVAL_US_100, rel=1e-14)


def test_survival_below_entry_age_rejected(us):
    with pytest.raises(DomainError):
        demography.survival(us.demo.a - 1.0, us.demo)


@settings(max_examples=40)
@given(x1=st.floats(30.0, 100.0), x2=st.floats(30.0, 100.0))
def test_survival_nonincreasing(us, x1, x2):
    lo, hi = sorted((x1, x2))
    assert demography.survival(hi, us.demo) <= demography.survival(lo, us.demo) + 1e-15


def test_segment_empty_interval(us):
    assert demography.lambda_segment(50.0, 50.0, us.demo) == 0.0


@settings(max_examples=20, deadline=None)
@given(mid=st.floats(30.0, 100.0))
def test_segment_additivity(us, mid):
    d = us.demo
    total = demography.lambda_segment(d.a, d.omega, d)
    split = (demography.lambda_segment(d.a, mid, d)
             + demography.lambda_segment(mid, d.omega, d))
    assert split == pytest.approx(total, abs=1e-9)


def test_segment_bounds_checked(us):
    with pytest.raises(DomainError):
        demography.lambda_segment(65.0, 40.0, us.demo)
    with pytest.raises(DomainError):
        demography.lambda_segment(10.0, 40.0, us.demo)


def test_us_dependency_ratio(us):
    lam = demography.support_ratio(us.demo)
    assert 1.0 / lam == pytest.approx(0.7271, abs=5e-4)
    ratio = (demography.lambda_segment(30.0, 65.0, us.demo)
             / demography.lambda_segment(65.0, 100.0, us.demo))
    assert ratio == pytest.approx(lam, rel=1e-12)


def test_support_ratio_monotone_in_growth(us):
    grow = dataclasses.replace(us.demo, rho=0.05)
    assert demography.support_ratio(grow) > demography.support_ratio(us.demo)


def test_support_ratio_ignores_entrant_scale(us):
    doubled = dataclasses.replace(us.demo, n0=2 * us.demo.n0)
    assert demography.support_ratio(doubled) == pytest.approx(
        demography.support_ratio(us.demo), rel=1e-15)


def test_annuity_pure_discount_limit(us):
    flat = dataclasses.replace(us.demo, A=0.0, B=0.0)
    assert demography.annuity_factor(flat, 0.02) == pytest.approx(50.0, rel=1e-9)


def test_annuity_below_riskless_perpetuity(us):
    a_tau = demography.annuity_factor(us.demo, us.market.r)
    assert 0.0 < a_tau < 1.0 / us.market.r


def test_annuity_against_trapezoid_oracle(us):
    a_tau = demography.annuity_factor(us.demo, us.market.r)
    oracle = trapezoid_annuity(us.demo, us.market.r)
    assert a_tau == pytest.approx(oracle, abs=1e-6)


def test_annuity_decreasing_in_mortality(us):
    base = demography.annuity_factor(us.demo, us.market.r)
    for field, factor in (("A", 10.0), ("B", 10.0), ("c", 1.01)):
        heavier = dataclasses.replace(
            us.demo, **{field: getattr(us.demo, field) * factor})
        assert demography.annuity_factor(heavier, us.market.r) < base


def test_annuity_requires_positive_rate(us):
    with pytest.raises(DomainError):
        demography.annuity_factor(us.demo, 0.0)


# --------------------------------------------------------------------------
# baby boom
# --------------------------------------------------------------------------

def test_bb_entrants_boundary_values(us_bb):
    bb = us_bb.demo.babyboom
    assert demography.bb_entrants(bb.t1, bb) == pytest.approx(bb.n1, rel=1e-14)
    expected_t2 = bb.nm / (1 + (bb.nm / bb.n1 - 1) * math.exp(-bb.kappa * (bb.t2 - bb.t1)))
    assert demography.bb_entrants(bb.t2, bb) == pytest.approx(expected_t2, rel=1e-14)


def test_bb_entrants_continuity(us_bb):
    bb = us_bb.demo.babyboom
    for t in (bb.t1, bb.t2):
        left = demography.bb_entrants(t - 1e-9, bb)
        right = demography.bb_entrants(t + 1e-9, bb)
        assert abs(right - left) < 1e-6 * left
    # the regime formulas agree exactly at the joins
    assert demography.bb_entrants(np.array([bb.t1]), bb)[0] == pytest.approx(
        bb.n1, abs=1e-12)


def test_bb_requires_parameters(us):
    with pytest.raises(DomainError):
        demography.bb_support_ratio(0.0, us.demo)


def test_bb_pre_boom_plateau_matches_constant_model(us_bb):
    d = us_bb.demo
    bb = d.babyboom
    flat = dataclasses.replace(d, babyboom=None, rho=bb.rho1)
    expect = demography.support_ratio(flat)
    assert demography.bb_support_ratio(bb.t1 - 5.0, d) == pytest.approx(expect, rel=1e-6)


def test_bb_post_boom_plateau_matches_constant_model(us_bb):
    d = us_bb.demo
    bb = d.babyboom
    flat = dataclasses.replace(d, babyboom=None, rho=bb.rho2)
    expect = demography.support_ratio(flat)
    far = bb.t2 + (d.omega - d.a) + 1.0
    assert demography.bb_support_ratio(far, d) == pytest.approx(expect, rel=1e-6)


def test_bb_support_ratio_continuous(us_bb):
    d = us_bb.demo
    bb = d.babyboom
    # no jumps across the regime joins: dense grid, adjacent steps < 1e-3
    for t_join in (bb.t1, bb.t2, bb.t2 + d.omega - d.a):
        ts = t_join + np.arange(-0.05, 0.05, 1e-3)
        vals = demography.bb_support_ratio(ts, d)
        assert np.max(np.abs(np.diff(vals))) < 1e-3
    # bounded variation over the whole affected window
    ts = np.arange(bb.t1 - 2.0, bb.t2 + (d.omega - d.a) + 2.0, 0.1)
    vals = demography.bb_support_ratio(ts, d)
    assert np.max(np.abs(np.diff(vals))) < 0.05


def test_bb_degenerate_boom_reduces_to_constant(us):
    d = us.demo
    bb = BabyBoomParams(t1=-30.0, t2=-30.0 + 1e-6, n1=d.n0 * math.exp(d.rho * -30.0),
                        nm=1e6, kappa=0.05, rho1=d.rho, rho2=d.rho)
    degen = dataclasses.replace(d, babyboom=bb)
    expect = demography.support_ratio(d)
    far = bb.t2 + (d.omega - d.a) + 1.0
    assert demography.bb_support_ratio(far, degen) == pytest.approx(expect, rel=1e-6)
    assert demography.bb_support_ratio(0.0, degen) == pytest.approx(expect, rel=1e-6)
