"""Polytropic gas states and the pointwise relations of steady 2-D Euler flow."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidStateError

SUBSONIC = "subsonic"
SONIC = "sonic"
SUPERSONIC = "supersonic"


@dataclass(frozen=True)
class GasConstants:
    """Adiabatic exponent plus the tolerances used for classification."""

    gamma: float = 1.4
    tol_state: float = 1e-9
    tol_alg: float = 1e-10

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise InvalidStateError(f"gamma must exceed 1, got {self.gamma}")
        if not 0.0 < self.tol_state < 1e-3:
            raise InvalidStateError(f"tol_state out of range: {self.tol_state}")
        if not 0.0 < self.tol_alg < 1e-6:
            raise InvalidStateError(f"tol_alg out of range: {self.tol_alg}")


AIR = GasConstants()


@dataclass(frozen=True)
class FlowState:
    """Primitive state (p, u, v, rho) of one uniform region."""

    p: float
    u: float
    v: float
    rho: float

    def __post_init__(self):
        for name in ("p", "u", "v", "rho"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidStateError(f"{name} is not finite")
        if self.p <= 0.0 or self.rho <= 0.0:
            raise InvalidStateError(f"need p > 0 and rho > 0, got p={self.p}, rho={self.rho}")

    @property
    def speed(self) -> float:
        return math.hypot(self.u, self.v)

    @property
    def w(self) -> float:
        """Slope v/u of the flow direction."""
        if self.u == 0.0:
            raise InvalidStateError("w = v/u is undefined for u = 0")
        return self.v / self.u

    @property
    def angle(self) -> float:
        return math.atan2(self.v, self.u)

    def rotated(self, phi: float) -> "FlowState":
        """The same state with its velocity turned counter-clockwise by ``phi``."""
        c, s = math.cos(phi), math.sin(phi)
        return FlowState(self.p, c * self.u - s * self.v, s * self.u + c * self.v, self.rho)


def sound_speed(state: FlowState, gas: GasConstants = AIR) -> float:
    c = math.sqrt(gas.gamma * state.p / state.rho)
    if not (math.isfinite(c) and c > 0.0):
        raise InvalidStateError(f"sound speed not finite for {state}")
    return c


def mach(state: FlowState, gas: GasConstants = AIR) -> float:
    return state.speed / sound_speed(state, gas)


def classify(state: FlowState, gas: GasConstants = AIR) -> str:
    """Subsonic, sonic or supersonic, with a symmetric band of width tol_state around M = 1."""
    m = mach(state, gas)
    if m < 1.0 - gas.tol_state:
        return SUBSONIC
    if m > 1.0 + gas.tol_state:
        return SUPERSONIC
    return SONIC


def bernoulli(state: FlowState, gas: GasConstants = AIR) -> float:
    """Bernoulli constant 0.5*|q|^2 + c^2/(gamma-1)."""
    c2 = gas.gamma * state.p / state.rho
    return 0.5 * (state.u * state.u + state.v * state.v) + c2 / (gas.gamma - 1.0)


def entropy_measure(state: FlowState, gas: GasConstants = AIR) -> float:
    """Entropy function A = p / rho**gamma."""
    return state.p / state.rho ** gas.gamma
