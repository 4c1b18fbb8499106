import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from shockpolar import (
    MINUS,
    PLUS,
    DetachmentError,
    EntropyError,
    GasConstants,
    InvalidStateError,
    PolarDomainError,
    UpstreamState,
    bernoulli,
    critical_points,
    downstream_state,
    entropy_measure,
    mach,
    normal_shock,
    normal_shock_pressure,
    oblique_solutions,
    polar_w,
    rh_residual,
    sample_polar,
)
from shockpolar.gas import FlowState
from shockpolar.polar import (
    KIND_SONIC,
    KIND_SUPERSONIC,
    KIND_TRANSONIC,
    deflected_polar_w,
    entropy_rise,
    sample_pressures,
    shock_limit,
    shock_residual,
)

machs = st.floats(min_value=1.05, max_value=8.0)
gammas = st.sampled_from([1.2, 1.4, 5.0 / 3.0])
fracs = st.floats(min_value=1e-6, max_value=1.0 - 1e-9)


def up_of(m, g=1.4, theta0=0.0):
    return UpstreamState.from_mach(m, GasConstants(gamma=g), theta0=theta0)


# --- values -------------------------------------------------------------------


def test_normal_shock_pressure_values(up2):
    assert normal_shock_pressure(up2) == 4.5
    assert normal_shock_pressure(up_of(3.0)) == pytest.approx(1.0 + 2.8 / 2.4 * 8.0, abs=1e-13)
    assert normal_shock_pressure(up_of(1.0 + 1e-9)) == pytest.approx(1.0, abs=1e-8)


def test_normal_shock_state_matches_textbook(up2):
    sol = normal_shock(up2)
    d = sol.downstream
    p_ratio, rho_ratio, m2 = oracles.normal_shock_ratios(2.0, 1.4)
    assert d.p == pytest.approx(p_ratio, abs=1e-12)
    assert d.rho == pytest.approx(rho_ratio, abs=1e-12)
    assert d.u == pytest.approx(up2.u0 - 3.5 / up2.u0, abs=1e-13)
    assert d.u / up2.u0 == pytest.approx(3.0 / 8.0, abs=1e-13)
    assert mach(d) == pytest.approx(m2, abs=1e-12)
    assert sol.w == 0.0
    assert sol.alpha == pytest.approx(math.pi / 2, abs=1e-12)
    assert sol.kind == KIND_TRANSONIC


def test_polar_endpoints(up2):
    assert polar_w(1.0, up2) == 0.0
    assert polar_w(4.5, up2) == 0.0
    assert polar_w(4.5, up2, MINUS) == 0.0


def test_polar_domain_errors(up2):
    with pytest.raises(PolarDomainError):
        polar_w(0.99, up2)
    with pytest.raises(PolarDomainError):
        polar_w(4.6, up2)


def test_entropy_violating_pressure_rejected(up2):
    with pytest.raises(EntropyError):
        downstream_state(1.0, up2)
    with pytest.raises((EntropyError, PolarDomainError)):
        downstream_state(0.8, up2)


def test_zero_strength_limit(up2):
    sol = shock_limit(1.0, up2)
    assert sol.downstream.p == 1.0
    assert sol.downstream.u == pytest.approx(up2.u0, abs=1e-15)
    assert sol.alpha == pytest.approx(math.asin(0.5), abs=1e-12)


def test_upstream_must_be_supersonic():
    with pytest.raises(InvalidStateError):
        UpstreamState.from_mach(0.9)


def test_critical_point_values(up2):
    cp = critical_points(up2)
    assert math.degrees(math.atan(cp.w_star)) == pytest.approx(22.9735, abs=1e-3)
    assert cp.p_star == pytest.approx(3.6457513110645863, rel=1e-12)
    assert cp.p_sonic == pytest.approx(3.4364916731037107, rel=1e-12)
    assert 1.0 < cp.p_sonic < cp.p_star < cp.p_plus
    assert cp.w_star > cp.w_sonic > 0.0


def test_w_star_matches_brute_force(up2):
    cp = critical_points(up2)
    w_bf, p_bf = oracles.brute_force_wstar(2.0, 1.4)
    assert abs(cp.w_star - w_bf) <= 1e-6 * cp.w_star
    assert cp.w_star >= w_bf


def test_w_star_vanishes_as_mach_tends_to_one():
    ws = [critical_points(up_of(m)).w_star for m in (1.2, 1.05, 1.01)]
    assert ws[0] > ws[1] > ws[2] and ws[2] < 2e-3


def test_oblique_ten_degrees(up2):
    t = math.tan(math.radians(10.0))
    sols = oblique_solutions(math.radians(10.0), up2)
    assert sols.weak.p < sols.strong.p
    for s in sols:
        assert abs(s.w - t) < 1e-10
        assert np.max(np.abs(shock_residual(s))) < 1e-10
    assert sols.weak.kind == KIND_SUPERSONIC
    assert sols.strong.kind == KIND_TRANSONIC
    assert sols.weak.p == pytest.approx(1.706578604, abs=1e-8)
    assert sols.strong.p == pytest.approx(4.4438072059, abs=1e-8)


def test_oblique_matches_theta_beta_mach_sweep(up2):
    for deg in (2.0, 10.0, 20.0, 22.5):
        theta = math.radians(deg)
        betas = oracles.oblique_by_wave_angle(theta, 2.0, 1.4)
        assert len(betas) == 2
        sols = oblique_solutions(theta, up2)
        assert sols.weak.alpha == pytest.approx(betas[0], abs=1e-9)
        assert sols.strong.alpha == pytest.approx(betas[1], abs=1e-9)
        assert sols.weak.p == pytest.approx(oracles.pressure_from_beta(betas[0], 2.0, 1.4), rel=1e-10)


def test_oblique_states_match_decomposition(up2):
    for s in oblique_solutions(math.radians(15.0), up2):
        p, u, v, rho = oracles.shock_by_decomposition(2.0, s.alpha, 1.4)
        d = s.downstream
        assert (d.p, d.u, d.v, d.rho) == pytest.approx((p, u, v, rho), abs=1e-12)


def test_detachment(up2):
    with pytest.raises(DetachmentError):
        oblique_solutions(math.radians(30.0), up2)


def test_coincident_roots_at_w_star(up2):
    cp = critical_points(up2)
    sols = oblique_solutions(math.atan(cp.w_star), up2)
    assert sols.weak.p == pytest.approx(cp.p_star, abs=1e-8)
    assert sols.strong.p == pytest.approx(cp.p_star, abs=1e-8)


def test_small_wedge_degeneration(up2):
    sols = oblique_solutions(1e-7, up2)
    assert sols.weak.p == pytest.approx(1.0, abs=1e-5)
    assert sols.strong.p == pytest.approx(4.5, abs=1e-5)


def test_weak_root_classification_between_sonic_and_star(up2):
    cp = critical_points(up2)
    theta = math.atan(0.5 * (cp.w_sonic + cp.w_star))
    sols = oblique_solutions(theta, up2)
    assert sols.weak.kind == KIND_TRANSONIC and sols.strong.kind == KIND_TRANSONIC


def test_sonic_weak_root_is_flagged(up2):
    cp = critical_points(up2)
    sols = oblique_solutions(math.atan(cp.w_sonic), up2)
    assert sols.weak.kind == KIND_SONIC


def test_invalid_wedge_angle(up2):
    with pytest.raises(InvalidStateError):
        oblique_solutions(0.0, up2)


def test_rh_residual_identities(up2):
    s = up2.as_flow_state()
    assert np.all(rh_residual(s, s, 0.7) == 0.0)
    sol = downstream_state(3.0, up2)
    d = sol.downstream
    bad = FlowState(d.p * (1.0 + 1e-3), d.u, d.v, d.rho)
    assert np.max(np.abs(rh_residual(s, bad, sol.front_slope))) > 1e-5


def test_sample_polar_shapes(up2):
    pts = sample_polar(up2, 2)
    assert [(p.w, p.p) for p in pts] == [(0.0, 1.0), (0.0, 4.5), (0.0, 1.0), (0.0, 4.5)]
    pts = sample_polar(up2, 50)
    plus = [p for p in pts if p.branch == PLUS]
    minus = [p for p in pts if p.branch == MINUS]
    assert [p.w for p in plus] == [-p.w for p in minus]
    with pytest.raises(InvalidStateError):
        sample_polar(up2, 1)


def test_sampled_max_agrees_with_w_star(up2):
    w = max(p.w for p in sample_polar(up2, 10**4))
    cp = critical_points(up2)
    assert abs(w - cp.w_star) <= 1e-6 * cp.w_star


def test_grid_unimodality_and_single_sonic_crossing(up2):
    cp = critical_points(up2)
    p = np.linspace(1.0, 4.5, 10**4)
    w = np.array([polar_w(float(q), up2) for q in p])
    dw = np.diff(w)
    changes = np.nonzero(np.sign(dw[:-1]) != np.sign(dw[1:]))[0]
    assert changes.size == 1
    assert abs(p[changes[0] + 1] - cp.p_star) <= 2 * (p[1] - p[0])
    m = np.array([mach(shock_limit(float(q), up2).downstream) for q in p]) - 1.0
    cross = np.nonzero(np.sign(m[:-1]) != np.sign(m[1:]))[0]
    assert cross.size == 1
    assert p[cross[0]] <= cp.p_sonic <= p[cross[0] + 1]


def test_deflected_polar_frame_identities(up2):
    for p in (1.3, 2.5, 4.0):
        assert deflected_polar_w(p, up2) == polar_w(p, up2)
    tilted = up2.rotated(math.radians(7.0))
    assert deflected_polar_w(1.0, tilted) == pytest.approx(math.tan(math.radians(7.0)), abs=1e-15)


@given(st.floats(min_value=-0.6, max_value=0.6), st.floats(min_value=0.01, max_value=0.99))
def test_deflection_independent_of_frame(phi, frac):
    up = up_of(2.0)
    p = 1.0 + frac * 3.5
    base = math.atan(polar_w(p, up))
    tilted = up.rotated(phi)
    assert math.atan(deflected_polar_w(p, tilted)) - phi == pytest.approx(base, abs=1e-12)
    sol = downstream_state(p, tilted)
    assert np.max(np.abs(shock_residual(sol))) < 1e-10


# --- properties over the whole polar family ------------------------------------


@given(machs, gammas, fracs, st.sampled_from([PLUS, MINUS]))
def test_every_shock_satisfies_jump_conditions(m, g, frac, branch):
    up = up_of(m, g)
    p = up.p0 + frac * (normal_shock_pressure(up) - up.p0)
    if not p > up.p0:
        return
    sol = downstream_state(p, up, branch)
    scale = max(1.0, up.rho0 * up.u0 ** 2)
    assert np.max(np.abs(shock_residual(sol))) < 1e-10 * scale
    assert bernoulli(sol.downstream, up.gas) == pytest.approx(bernoulli(up.as_flow_state(), up.gas), abs=1e-10 * scale)
    assert sol.downstream.p > up.p0
    assert sol.downstream.u > 0.0


@given(machs, gammas, fracs)
def test_polar_branches_are_mirror_images(m, g, frac):
    up = up_of(m, g)
    p = up.p0 + frac * (normal_shock_pressure(up) - up.p0)
    assert polar_w(p, up, MINUS) == -polar_w(p, up, PLUS)


@given(machs, gammas)
def test_entropy_increases_along_polar(m, g):
    up = up_of(m, g)
    p = sample_pressures(up, 400)[1:]
    rise = np.array([entropy_rise(float(q), up) for q in p])
    assert np.all(rise > 0.0) and np.all(np.diff(rise) > 0.0)
    a = [entropy_measure(downstream_state(float(q), up).downstream, up.gas) for q in p[::40]]
    assert np.all(np.diff(a) > 0.0)


@given(machs, gammas)
def test_critical_point_ordering(m, g):
    up = up_of(m, g)
    cp = critical_points(up)
    assert up.p0 < cp.p_sonic < cp.p_star < cp.p_plus
    assert cp.w_star > cp.w_sonic > 0.0
    assert abs(mach(downstream_state(cp.p_sonic, up).downstream, up.gas) - 1.0) < 1e-10


@given(machs, gammas, st.floats(min_value=0.01, max_value=0.99))
def test_oblique_ordering_and_classification(m, g, frac):
    up = up_of(m, g)
    cp = critical_points(up)
    theta = math.atan(frac * cp.w_star)
    sols = oblique_solutions(theta, up, cp)
    assert up.p0 < sols.weak.p <= cp.p_star <= sols.strong.p < cp.p_plus
    assert sols.strong.kind == KIND_TRANSONIC
    expected = KIND_SUPERSONIC if sols.weak.p < cp.p_sonic else KIND_TRANSONIC
    if abs(sols.weak.p - cp.p_sonic) > 1e-8 * cp.p_plus:
        assert sols.weak.kind == expected


@given(machs, gammas, fracs)
def test_polar_matches_independent_formula(m, g, frac):
    up = up_of(m, g)
    p = up.p0 + frac * (normal_shock_pressure(up) - up.p0)
    assert polar_w(p, up) == pytest.approx(float(oracles.polar_w_vec(np.array(p), m, g)), rel=1e-12, abs=1e-15)


@given(machs, gammas, fracs)
def test_polar_denominator_positive_on_admissible_pressures(m, g, frac):
    up = up_of(m, g)
    p = up.p0 + frac * (normal_shock_pressure(up) - up.p0)
    assert g * m * m - (p / up.p0 - 1.0) > 0.0


def test_nonpositive_denominator_is_rejected(monkeypatch):
    up = up_of(2.0, 1.4)
    # push p+ past gamma*M0^2 + p0 so the guard is reachable
    monkeypatch.setattr("shockpolar.polar.normal_shock_pressure", lambda u: 100.0)
    with pytest.raises(PolarDomainError):
        polar_w(1.0 + 1.4 * 4.0 + 1.0, up)
