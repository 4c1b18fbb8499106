"""Elliptic structure of subsonic flow written in mass-flux (Lagrangian) coordinates.

In coordinates (xi, eta) with xi = x and eta the stream function, the pair
(p, w) satisfies Dw = W Dp. Everything here is a pointwise function of one
subsonic state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gas as gc
from .errors import EllipticityError, InvalidStateError
from .gas import AIR, FlowState, GasConstants
from .polar import UpstreamState


@dataclass(frozen=True)
class EllipticCoefficients:
    lambda_r: float
    beta1: float
    beta2: float


@dataclass(frozen=True)
class MatrixW:
    w11: float
    w12: float
    w21: float
    w22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.w11, self.w12], [self.w21, self.w22]])

    @property
    def det(self) -> float:
        return self.w11 * self.w22 - self.w12 * self.w21


def coefficients(state: FlowState, gas: GasConstants = AIR) -> EllipticCoefficients:
    """lambda_R, beta_1, beta_2 of a subsonic state with u > 0."""
    if not state.u > 0.0:
        raise InvalidStateError(f"coefficients need u > 0, got u = {state.u}")
    m = gc.mach(state, gas)
    if not m < 1.0 - gas.tol_state:
        raise EllipticityError(f"state is not subsonic (M = {m}); the system is not elliptic")
    rho, u = state.rho, state.u
    w = state.v / u
    c2 = gas.gamma * state.p / rho
    d = u * u - c2
    lam = rho * c2 * u * w / d
    beta1 = -rho * rho * c2 * u ** 3 / d
    beta2 = (m * m - 1.0) * c2 / (u * d)
    if not (beta1 > 0.0 and beta2 > 0.0):
        raise EllipticityError(f"coefficient sign violated: beta1={beta1}, beta2={beta2}")
    return EllipticCoefficients(lam, beta1, beta2)


def matrix_w(co: EllipticCoefficients) -> MatrixW:
    lam, b1, b2 = co.lambda_r, co.beta1, co.beta2
    s = -1.0 / b1
    return MatrixW(s * lam, s * (b1 * b2 + lam * lam), -s, -s * lam)


def matrix_w_inverse(co: EllipticCoefficients) -> np.ndarray:
    """W is traceless, so its inverse is a scalar multiple of itself."""
    return -(co.beta1 / co.beta2) * matrix_w(co).as_array()


def boundary_sign(co: EllipticCoefficients, psi_prime: float) -> float:
    """tau W n^T for the front tangent tau = (psi', 1) and inner normal n = (1, -psi')."""
    lam, b1, b2 = co.lambda_r, co.beta1, co.beta2
    return ((lam * psi_prime - 1.0) ** 2 + b1 * b2 * psi_prime ** 2) / b1


def boundary_sign_direct(co: EllipticCoefficients, psi_prime: float) -> float:
    """Same quantity by explicit matrix products; used to cross-check the closed form."""
    tau = np.array([psi_prime, 1.0])
    n = np.array([1.0, -psi_prime])
    return float(tau @ matrix_w(co).as_array() @ n)


def ellipticity(state: FlowState, gas: GasConstants = AIR) -> float:
    """4 beta_2 / beta_1, which equals 4 (1 - M^2) / (rho^2 u^4)."""
    co = coefficients(state, gas)
    return 4.0 * co.beta2 / co.beta1


def ellipticity_closed_form(state: FlowState, gas: GasConstants = AIR) -> float:
    m = gc.mach(state, gas)
    return 4.0 * (1.0 - m * m) / (state.rho ** 2 * state.u ** 4)


def divergence_coefficients(co: EllipticCoefficients) -> np.ndarray:
    """Symmetric 2x2 coefficient matrix of the second-order equation for p."""
    lam, b1, b2 = co.lambda_r, co.beta1, co.beta2
    return np.array([[1.0 / b1, lam / b1], [lam / b1, b2 + lam * lam / b1]])


def duct_mass_flux(up: UpstreamState) -> float:
    """Height eta_0 = rho0 * u0 of the duct in mass-flux coordinates."""
    return up.rho0 * up.u0
