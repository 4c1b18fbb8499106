"""The pressure / flow-slope shock polar and the states behind an oblique shock.

All pressures are absolute. A polar is rooted at an :class:`UpstreamState`,
whose flow may be inclined by ``theta0``; deflections are measured from that
direction and rotated back into the fixed frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import gas as gc
from ._numerics import bisect_root, golden_section_max
from .errors import (
    DetachmentError,
    EntropyError,
    InvalidStateError,
    NumericalError,
    PolarDomainError,
)
from .gas import AIR, FlowState, GasConstants

PLUS = 1
MINUS = -1

KIND_SUPERSONIC = "supersonic-downstream"
KIND_TRANSONIC = "transonic"
KIND_SONIC = "sonic"

# relative slack allowed above p_plus before a pressure counts as off the polar
_P_PLUS_SLACK = 1e-12
# tan(theta_w) within this relative distance of w_star is treated as the coincident root
_COINCIDENT_RTOL = 1e-13


def branch_sign(branch) -> int:
    if branch in (PLUS, "plus", "+"):
        return PLUS
    if branch in (MINUS, "minus", "-"):
        return MINUS
    raise InvalidStateError(f"unknown polar branch {branch!r}")


def branch_name(branch) -> str:
    return "plus" if branch_sign(branch) == PLUS else "minus"


@dataclass(frozen=True)
class UpstreamState:
    """Uniform supersonic state a polar is rooted at.

    ``u0`` is the flow speed; ``theta0`` the flow angle in radians.
    """

    p0: float
    u0: float
    rho0: float
    theta0: float = 0.0
    gas: GasConstants = AIR

    def __post_init__(self):
        if not (self.p0 > 0 and self.u0 > 0 and self.rho0 > 0):
            raise InvalidStateError("upstream p0, u0, rho0 must be positive")
        if not math.isfinite(self.theta0):
            raise InvalidStateError("theta0 must be finite")
        if not self.mach0 > 1.0:
            raise InvalidStateError(f"upstream must be supersonic, M0 = {self.mach0}")

    @classmethod
    def from_mach(cls, mach0, gas=AIR, p0=1.0, rho0=1.0, theta0=0.0):
        c0 = math.sqrt(gas.gamma * p0 / rho0)
        return cls(p0=p0, u0=mach0 * c0, rho0=rho0, theta0=theta0, gas=gas)

    @classmethod
    def from_flow(cls, state: FlowState, gas=AIR):
        return cls(p0=state.p, u0=state.speed, rho0=state.rho, theta0=state.angle, gas=gas)

    @property
    def gamma(self) -> float:
        return self.gas.gamma

    @property
    def c0(self) -> float:
        return math.sqrt(self.gas.gamma * self.p0 / self.rho0)

    @property
    def mach0(self) -> float:
        return self.u0 / self.c0

    def as_flow_state(self) -> FlowState:
        return FlowState(
            p=self.p0,
            u=self.u0 * math.cos(self.theta0),
            v=self.u0 * math.sin(self.theta0),
            rho=self.rho0,
        )

    def rotated(self, phi: float) -> "UpstreamState":
        return UpstreamState(self.p0, self.u0, self.rho0, self.theta0 + phi, self.gas)


@dataclass(frozen=True)
class PolarPoint:
    w: float
    p: float
    branch: int


@dataclass(frozen=True)
class ShockSolution:
    point: PolarPoint
    upstream: UpstreamState
    downstream: FlowState
    alpha: float
    front_slope: float
    kind: str

    @property
    def p(self) -> float:
        return self.point.p

    @property
    def w(self) -> float:
        return self.point.w


@dataclass(frozen=True)
class CriticalPoints:
    p_plus: float
    p_star: float
    w_star: float
    p_sonic: float
    w_sonic: float


class ObliqueSolutions(NamedTuple):
    weak: ShockSolution
    strong: ShockSolution


def normal_shock_pressure(up: UpstreamState) -> float:
    """Pressure behind the normal shock, where the polar radicand vanishes."""
    g, m2 = up.gamma, up.mach0 ** 2
    return up.p0 * (1.0 + 2.0 * g / (g + 1.0) * (m2 - 1.0))


def pressure_from_shock_angle(sin2_alpha: float, up: UpstreamState) -> float:
    """Invert the shock-angle relation: downstream pressure for a given sin^2 of the shock angle."""
    g, m2 = up.gamma, up.mach0 ** 2
    return up.p0 * (1.0 + 2.0 * g / (g + 1.0) * (m2 * sin2_alpha - 1.0))


def _check_pressure(p: float, up: UpstreamState, p_plus: float) -> float:
    if not math.isfinite(p):
        raise PolarDomainError(f"pressure {p} is not finite")
    if p < up.p0:
        raise PolarDomainError(f"p = {p} lies below the polar root p0 = {up.p0}")
    if p > p_plus:
        if p > p_plus * (1.0 + _P_PLUS_SLACK):
            raise PolarDomainError(f"p = {p} exceeds the normal-shock pressure {p_plus}")
        p = p_plus
    return p


def polar_magnitude(p: float, up: UpstreamState) -> float:
    """|w| on the polar at pressure ``p``, measured from the upstream direction."""
    p_plus = normal_shock_pressure(up)
    p = _check_pressure(p, up, p_plus)
    g, m2 = up.gamma, up.mach0 ** 2
    x = p / up.p0 - 1.0
    if p == p_plus:
        return 0.0
    denom = g * m2 - x
    if denom <= 0.0:
        raise PolarDomainError("degenerate polar: gamma*M0^2 <= p/p0 - 1")
    radicand = (2.0 * g / (g + 1.0) * (m2 - 1.0) - x) / (x + 1.0 + (g - 1.0) / (g + 1.0))
    return x / denom * math.sqrt(max(radicand, 0.0))


def polar_w(p: float, up: UpstreamState, branch=PLUS) -> float:
    """Flow slope behind the shock on the chosen branch, relative to the upstream direction."""
    return branch_sign(branch) * polar_magnitude(p, up)


def deflected_polar_w(p: float, up: UpstreamState, branch=PLUS) -> float:
    """Flow slope behind the shock in the fixed frame for an inclined upstream flow."""
    if up.theta0 == 0.0:
        return polar_w(p, up, branch)
    delta = math.atan(polar_magnitude(p, up))
    return math.tan(up.theta0 + branch_sign(branch) * delta)


def deflected_polar_angle(p: float, up: UpstreamState, branch=PLUS) -> float:
    """Flow angle (radians, fixed frame) behind the shock."""
    return up.theta0 + branch_sign(branch) * math.atan(polar_magnitude(p, up))


def entropy_rise(p: float, up: UpstreamState) -> float:
    """log(A/A0) across the shock, written to stay accurate for weak shocks."""
    g = up.gamma
    x = p / up.p0 - 1.0
    log_p = math.log1p(x)
    log_rho = math.log1p(2.0 * x / ((g - 1.0) * (1.0 + x) + g + 1.0))
    return log_p - g * log_rho


def _shock(p: float, up: UpstreamState, branch) -> ShockSolution:
    sgn = branch_sign(branch)
    p_plus = normal_shock_pressure(up)
    p = _check_pressure(p, up, p_plus)
    g = up.gamma
    mag = polar_magnitude(p, up)
    # upstream-aligned frame first
    u_loc = up.u0 - (p - up.p0) / (up.rho0 * up.u0)
    v_loc = sgn * mag * u_loc
    rho = up.rho0 * ((g + 1.0) * p + (g - 1.0) * up.p0) / ((g - 1.0) * p + (g + 1.0) * up.p0)
    sin_alpha = math.sqrt((g + 1.0) / (2.0 * g) * (p / up.p0 + (g - 1.0) / (g + 1.0))) / up.mach0
    alpha = math.asin(min(sin_alpha, 1.0))
    if sgn == MINUS:
        alpha = math.pi - alpha
    down = FlowState(p, u_loc, v_loc, rho)
    if up.theta0 != 0.0:
        down = down.rotated(up.theta0)
        alpha += up.theta0
    front_slope = math.cos(alpha) / math.sin(alpha)
    kind = {
        gc.SUPERSONIC: KIND_SUPERSONIC,
        gc.SUBSONIC: KIND_TRANSONIC,
        gc.SONIC: KIND_SONIC,
    }[gc.classify(down, up.gas)]
    w = down.v / down.u if down.u != 0.0 else math.copysign(math.inf, down.v)
    return ShockSolution(PolarPoint(w, p, sgn), up, down, alpha, front_slope, kind)


def downstream_state(p: float, up: UpstreamState, branch=PLUS) -> ShockSolution:
    """Full state behind the shock of strength ``p`` on the given branch.

    Raises EntropyError unless p > p0.
    """
    if not p > up.p0:
        raise EntropyError(f"entropy condition needs p > p0; got p = {p}, p0 = {up.p0}")
    return _shock(p, up, branch)


def shock_limit(p: float, up: UpstreamState, branch=PLUS) -> ShockSolution:
    """Like :func:`downstream_state` but accepts the zero-strength limit p = p0."""
    return _shock(p, up, branch)


def normal_shock(up: UpstreamState) -> ShockSolution:
    return downstream_state(normal_shock_pressure(up), up, PLUS)


def _dlogw_dp(p: float, up: UpstreamState) -> float:
    g, m2 = up.gamma, up.mach0 ** 2
    x = p / up.p0 - 1.0
    a = g * m2
    b = 2.0 * g / (g + 1.0) * (m2 - 1.0)
    k = 1.0 + (g - 1.0) / (g + 1.0)
    return 1.0 / x + 1.0 / (a - x) - 0.5 / (b - x) - 0.5 / (x + k)


def critical_points(up: UpstreamState) -> CriticalPoints:
    """Normal-shock, maximum-deflection and sonic points of the polar."""
    p0 = up.p0
    p_plus = normal_shock_pressure(up)
    # golden section brackets the maximum; the log-derivative root then pins it to rounding
    p_gs = golden_section_max(lambda q: polar_magnitude(q, up), p0, p_plus, rtol=1e-12)
    lo, hi = p0 + 1e-15 * (p_plus - p0), p_plus * (1.0 - 1e-15)
    half = 1e-4 * (p_plus - p0)
    a, b = max(lo, p_gs - half), min(hi, p_gs + half)
    if _dlogw_dp(a, up) > 0.0 > _dlogw_dp(b, up):
        p_star = bisect_root(lambda q: _dlogw_dp(q, up), a, b, xtol=1e-15 * p_plus, what="p_star")
    else:
        p_star = p_gs
    w_star = polar_magnitude(p_star, up)

    def sonic_gap(q):
        return gc.mach(shock_limit(q, up).downstream, up.gas) - 1.0

    p_sonic = bisect_root(sonic_gap, p0, p_plus, xtol=1e-15 * p_plus, what="p_sonic")
    w_sonic = polar_magnitude(p_sonic, up)
    if not (p0 < p_sonic < p_star < p_plus):
        raise NumericalError(
            f"critical-point ordering violated: p0={p0} p_sonic={p_sonic} p_star={p_star} p_plus={p_plus}"
        )
    return CriticalPoints(p_plus, p_star, w_star, p_sonic, w_sonic)


def oblique_solutions(theta_w: float, up: UpstreamState, cp: CriticalPoints | None = None) -> ObliqueSolutions:
    """Weak and strong attached shocks for a wedge of half-angle ``theta_w`` (radians)."""
    t = math.tan(theta_w)
    if not (theta_w > 0.0 and t > 0.0 and math.isfinite(t)):
        raise InvalidStateError(f"wedge angle must lie in (0, pi/2), got {theta_w}")
    cp = cp or critical_points(up)
    if abs(t - cp.w_star) <= _COINCIDENT_RTOL * cp.w_star:
        sol = downstream_state(cp.p_star, up, PLUS)
        return ObliqueSolutions(sol, sol)
    if t > cp.w_star:
        raise DetachmentError(
            f"tan(theta_w) = {t:.12g} exceeds w_star = {cp.w_star:.12g}; a detached bow shock forms"
        )

    def gap(q):
        return polar_magnitude(q, up) - t

    xtol = 1e-15 * cp.p_plus
    p_weak = bisect_root(gap, up.p0, cp.p_star, xtol=xtol, what="weak shock")
    p_strong = bisect_root(gap, cp.p_star, cp.p_plus, xtol=xtol, what="strong shock")
    return ObliqueSolutions(downstream_state(p_weak, up, PLUS), downstream_state(p_strong, up, PLUS))


def rh_residual(up: FlowState, down: FlowState, front_slope: float, gas: GasConstants = AIR) -> np.ndarray:
    """Jumps of the three conservation laws across x = f(y), plus the Bernoulli mismatch.

    ``front_slope`` is f'(y) = dx/dy. All four entries vanish for a genuine shock.
    """
    f = front_slope

    def fluxes(s):
        return (
            s.rho * s.u,
            s.rho * s.v,
            s.rho * s.u * s.u + s.p,
            s.rho * s.u * s.v,
            s.rho * s.v * s.v + s.p,
        )

    a, b = fluxes(up), fluxes(down)
    j = [b[k] - a[k] for k in range(5)]
    return np.array(
        [
            j[0] - f * j[1],
            j[2] - f * j[3],
            j[3] - f * j[4],
            gc.bernoulli(down, gas) - gc.bernoulli(up, gas),
        ]
    )


def shock_residual(sol: ShockSolution) -> np.ndarray:
    """R-H residual of a computed shock in the fixed frame."""
    return rh_residual(sol.upstream.as_flow_state(), sol.downstream, sol.front_slope, sol.upstream.gas)


def sample_pressures(up: UpstreamState, n: int) -> np.ndarray:
    """``n`` pressures over [p0, p_plus], cosine-clustered toward both ends."""
    if n < 2:
        raise InvalidStateError("need at least two polar samples")
    p0, p_plus = up.p0, normal_shock_pressure(up)
    k = np.arange(n)
    p = p0 + (p_plus - p0) * 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))
    p[0], p[-1] = p0, p_plus
    return p


def sample_polar(up: UpstreamState, n: int) -> list[PolarPoint]:
    """``n`` points per branch, plus branch first, each ordered by increasing pressure."""
    pts = []
    for sgn in (PLUS, MINUS):
        for p in sample_pressures(up, n):
            pts.append(PolarPoint(polar_w(float(p), up, sgn), float(p), sgn))
    return pts
