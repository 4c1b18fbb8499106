"""Flat Mach configuration: incident shock, Mach stem, reflected shock and contact line.

The construction intersects the polar rooted at the free stream with the polar
rooted at the state behind the incident shock. Both crossings are searched on
the subsonic (transonic-shock) arcs only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import gas as gc
from ._numerics import bisect_root
from .errors import EntropyError, NoIntersectionError, NotSupersonicShockError
from .gas import FlowState
from .polar import (
    MINUS,
    PLUS,
    UpstreamState,
    critical_points,
    deflected_polar_angle,
    deflected_polar_w,
    downstream_state,
    normal_shock_pressure,
    rh_residual,
    shock_limit,
)

_BRACKET_SAMPLES = 2000


class PolarIntersection(NamedTuple):
    w_m: float
    p_m: float
    base_branch: int
    reflected_branch: int
    roots: tuple  # every bracketed crossing as (w, p, base_branch, reflected_branch)


@dataclass(frozen=True)
class MachConfiguration:
    upstream: UpstreamState
    p1: float
    state0: FlowState
    state1: FlowState
    state2: FlowState
    state3: FlowState
    slope_s1: float  # dx/dy of the incident shock
    slope_s2: float  # dx/dy of the Mach stem
    slope_s3: float  # dx/dy of the reflected shock
    slope_d: float  # dy/dx of the contact line
    wm_pm: tuple
    origin: tuple = (0.0, 0.0)
    degenerate: bool = False
    multiplicity: int = 1


@dataclass
class Check:
    name: str
    passed: bool
    residual: float


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, residual, tol):
        residual = float(residual)
        self.checks.append(Check(name, bool(residual <= tol), residual))

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "residual": c.residual} for c in self.checks],
        }


def incident_downstream(up0: UpstreamState, p1: float, allow_limit: bool = False) -> FlowState:
    """State behind the incident shock; it deflects the flow toward negative w.

    With ``allow_limit`` the zero-strength case p1 = p0 returns the free stream.
    """
    if allow_limit and p1 == up0.p0:
        return shock_limit(p1, up0, MINUS).downstream
    if not p1 > up0.p0:
        raise EntropyError(f"incident shock needs p1 > p0 = {up0.p0}, got {p1}")
    cp = critical_points(up0)
    if p1 >= cp.p_sonic:
        raise NotSupersonicShockError(
            f"p1 = {p1} is not below p_sonic = {cp.p_sonic}; the incident shock must stay supersonic"
        )
    down = downstream_state(p1, up0, MINUS).downstream
    if gc.classify(down, up0.gas) != gc.SUPERSONIC:
        raise NotSupersonicShockError(f"state behind the incident shock is not supersonic: M = {gc.mach(down, up0.gas)}")
    return down


def _crossings(f, lo, hi, n):
    ps = np.linspace(lo, hi, n)
    vals = np.array([f(p) for p in ps])
    brackets = []
    for k in range(n - 1):
        a, b = vals[k], vals[k + 1]
        if a == 0.0:
            brackets.append((ps[k], ps[k]))
        elif a * b < 0.0:
            brackets.append((ps[k], ps[k + 1]))
    if vals[-1] == 0.0:
        brackets.append((ps[-1], ps[-1]))
    return brackets


def intersect_polars(up0: UpstreamState, state1: FlowState, samples: int = _BRACKET_SAMPLES) -> PolarIntersection:
    """Crossing of the free-stream polar with the polar rooted at ``state1``, on the subsonic arcs.

    All four branch pairings are scanned. When more than one crossing is
    bracketed the one with smallest |w| is returned and the others are kept
    in ``roots``.
    """
    up1 = UpstreamState.from_flow(state1, up0.gas)
    if up1.p0 == up0.p0 and up1.u0 == up0.u0 and up1.rho0 == up0.rho0:
        p_plus = normal_shock_pressure(up0)
        w = math.tan(up0.theta0)
        return PolarIntersection(w, p_plus, PLUS, PLUS, ((w, p_plus, PLUS, PLUS),))
    cp0, cp1 = critical_points(up0), critical_points(up1)
    lo = max(cp0.p_sonic, cp1.p_sonic)
    hi = min(cp0.p_plus, cp1.p_plus)
    if not lo < hi:
        raise NoIntersectionError(f"subsonic arcs do not overlap in pressure: [{lo}, {hi}]")
    roots = []
    for bb in (PLUS, MINUS):
        for br in (PLUS, MINUS):

            def gap(p, bb=bb, br=br):
                return deflected_polar_angle(p, up0, bb) - deflected_polar_angle(p, up1, br)

            for a, b in _crossings(gap, lo, hi, samples):
                p = a if a == b else bisect_root(gap, a, b, xtol=1e-15 * hi, what="polar crossing")
                roots.append((deflected_polar_w(p, up0, bb), p, bb, br))
    if not roots:
        raise NoIntersectionError("the two polars do not cross on their subsonic arcs")
    # tangency at a pressure endpoint can register once per branch pairing
    unique = []
    for r in sorted(roots, key=lambda r: (abs(r[0]), r[1])):
        if not any(abs(r[1] - q[1]) <= 1e-12 * hi and abs(r[0] - q[0]) <= 1e-12 for q in unique):
            unique.append(r)
    w_m, p_m, bb, br = unique[0]
    return PolarIntersection(w_m, p_m, bb, br, tuple(unique))


def build_configuration(up0: UpstreamState, p1: float) -> MachConfiguration:
    """Assemble all four regions and the wave slopes for incident-shock pressure ``p1``.

    p1 = p0 gives the degenerate configuration: a single normal shock.
    """
    degenerate = p1 == up0.p0
    state0 = up0.as_flow_state()
    s1 = shock_limit(p1, up0, MINUS) if degenerate else None
    state1 = incident_downstream(up0, p1, allow_limit=degenerate)
    if s1 is None:
        s1 = downstream_state(p1, up0, MINUS)
    hit = intersect_polars(up0, state1)
    up1 = UpstreamState.from_flow(state1, up0.gas)
    s2 = downstream_state(hit.p_m, up0, hit.base_branch)
    s3 = downstream_state(hit.p_m, up1, hit.reflected_branch)
    return MachConfiguration(
        upstream=up0,
        p1=p1,
        state0=state0,
        state1=state1,
        state2=s2.downstream,
        state3=s3.downstream,
        slope_s1=s1.front_slope,
        slope_s2=s2.front_slope,
        slope_s3=s3.front_slope,
        slope_d=hit.w_m,
        wm_pm=(hit.w_m, hit.p_m),
        degenerate=degenerate,
        multiplicity=len(hit.roots),
    )


def validate_configuration(cfg: MachConfiguration, gas=None) -> ValidationReport:
    """Check every configuration invariant and report residuals; never raises on a bad value."""
    gas = gas or cfg.upstream.gas
    tol = gas.tol_alg
    rep = ValidationReport()
    s0, s1, s2, s3 = cfg.state0, cfg.state1, cfg.state2, cfg.state3
    w_m, p_m = cfg.wm_pm

    def margin_super(s):
        return max(0.0, 1.0 + gas.tol_state - gc.mach(s, gas))

    def margin_sub(s):
        return max(0.0, gc.mach(s, gas) - (1.0 - gas.tol_state))

    rep.add("region0_supersonic", margin_super(s0), 0.0)
    rep.add("region1_supersonic", margin_super(s1), 0.0)
    rep.add("region2_subsonic", margin_sub(s2), 0.0)
    rep.add("region3_subsonic", margin_sub(s3), 0.0)
    rep.add("contact_pressure_continuity", abs(s2.p - s3.p), tol)
    rep.add("contact_slope_continuity", abs(s2.w - s3.w), tol)
    rep.add("contact_matches_intersection", max(abs(s2.p - p_m), abs(s2.w - w_m)), tol)
    rep.add("contact_line_is_streamline", abs(cfg.slope_d - s2.w), tol)
    rep.add("rh_s1", np.max(np.abs(rh_residual(s0, s1, cfg.slope_s1, gas))), tol)
    rep.add("rh_s2", np.max(np.abs(rh_residual(s0, s2, cfg.slope_s2, gas))), tol)
    rep.add("rh_s3", np.max(np.abs(rh_residual(s1, s3, cfg.slope_s3, gas))), tol)
    b = [gc.bernoulli(s, gas) for s in (s0, s1, s2, s3)]
    rep.add("bernoulli_uniform", max(b) - min(b), tol)
    jumps = [s1.p - s0.p, s2.p - s0.p, s3.p - s1.p]
    if cfg.degenerate:
        jumps = jumps[1:]
    # a zero jump fails as well, so report 1 + deficit rather than the bare deficit
    rep.add("entropy_condition", 0.0 if min(jumps) > 0.0 else 1.0 - min(jumps), 0.0)
    return rep
