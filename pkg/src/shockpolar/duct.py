"""Free-boundary iteration for a normal shock in a straight duct.

Works in mass-flux coordinates on the rectangle -1 < xi < 1, 0 < eta < eta0.
The subsonic region between the front xi = psi(eta) and the exit is mapped to
s in [0, 1] along each stream line, xi = psi + s (1 - psi). Pressure solves
the divergence-form elliptic equation with a five-point finite-volume stencil;
cross-derivative fluxes are lagged one iteration so the matrix stays an
M-matrix. w is then the stream function of the pressure flux.

The front law integrates psi' = u w / [p] from the anchor. With the anchor
pinned, an exit pressure other than the normal-shock value leaves the front
stalled with a non-zero w on the upper wall. When that happens the anchor is
moved against the wall mismatch, which is how the missing solution shows up:
the front runs out of the duct.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.integrate import cumulative_trapezoid
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from .errors import DuctSolverError, EntropyError, InvalidStateError
from .gas import FlowState, bernoulli
from .lagrangian import duct_mass_flux
from .polar import (
    UpstreamState,
    critical_points,
    normal_shock_pressure,
    pressure_from_shock_angle,
    rh_residual,
)


CONVERGED = "converged"
FRONT_EXITED = "front-exited-domain"
MAX_ITERS = "max-iters"


@dataclass(frozen=True)
class DuctProblem:
    up: UpstreamState
    p_exit: float
    front_anchor_xi: float = 0.0
    nx: int = 64
    ny: int = 64
    omega_relax: float = 0.5
    max_iters: int = 500
    tol_front: float = 1e-8
    tol_field: float = 1e-8
    tol_wall: float = 1e-6
    perturb_amplitude: float = 0.0
    perturb_mode: int = 1
    drift_gain: float = 10.0
    stall_front: float = 1e-5

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise InvalidStateError("duct grid must be at least 8 x 8")
        if not 0.0 < self.omega_relax <= 1.0:
            raise InvalidStateError("omega_relax must lie in (0, 1]")
        if not -1.0 < self.front_anchor_xi < 1.0:
            raise InvalidStateError("front anchor must lie inside the duct, -1 < t < 1")
        if self.max_iters < 1:
            raise InvalidStateError("max_iters must be positive")
        if not (self.tol_front > 0 and self.tol_field > 0 and self.tol_wall > 0):
            raise InvalidStateError("tolerances must be positive")
        p_sonic = critical_points(self.up).p_sonic
        if not self.p_exit > p_sonic:
            raise InvalidStateError(f"exit pressure {self.p_exit} is not subsonic (p_sonic = {p_sonic})")

    @property
    def eta0(self) -> float:
        return duct_mass_flux(self.up)

    @property
    def p_plus(self) -> float:
        return normal_shock_pressure(self.up)

    def grid(self):
        s = np.linspace(0.0, 1.0, self.nx + 1)
        eta = np.linspace(0.0, self.eta0, self.ny + 1)
        return s, eta


@dataclass
class DuctState:
    """Iterate of the free-boundary problem; arrays are indexed [i (s), j (eta)]."""

    anchor: float
    psi: np.ndarray
    slope: np.ndarray  # d psi / d eta
    p: np.ndarray
    w: np.ndarray
    rho: np.ndarray
    u: np.ndarray

    def copy(self):
        return DuctState(self.anchor, *(a.copy() for a in (self.psi, self.slope, self.p, self.w, self.rho, self.u)))


@dataclass
class DuctResult:
    status: str
    state: DuctState
    s: np.ndarray
    eta: np.ndarray
    iters: int
    history: list = field(default_factory=list)
    message: str = ""

    @property
    def p_field(self):
        return self.state.p

    @property
    def w_field(self):
        return self.state.w

    @property
    def front(self):
        return self.state.psi

    @property
    def xi(self):
        psi = self.state.psi
        return psi[None, :] + self.s[:, None] * (1.0 - psi[None, :])

    @property
    def anchor_drift(self) -> float:
        return self.state.anchor - (self.history[0]["anchor"] if self.history else self.state.anchor)


@dataclass
class CoefficientFields:
    """Mapped-grid flux coefficients: G_s = a11 p_s + a12 p_eta, G_eta = a12 p_s + a22 p_eta."""

    a11: np.ndarray
    a22: np.ndarray
    a12: np.ndarray
    ds: float
    deta: float


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    shape: tuple
    dirichlet: np.ndarray  # bool mask
    is_m_matrix: bool
    coeffs: CoefficientFields
    bcs: np.ndarray
    p_lagged: np.ndarray

    def residual(self, p) -> np.ndarray:
        """A p - rhs, evaluated face by face so a uniform field gives exactly zero."""
        p = np.asarray(p, float).reshape(self.shape)
        r = -flux_balance(p, self.coeffs, cross_from=self.p_lagged)
        return np.where(self.dirichlet, p - np.nan_to_num(self.bcs), r)

    def solve(self, guess=None) -> np.ndarray:
        """Solve in correction form so an exact fixed point stays bit-exact."""
        n0, n1 = self.shape
        x0 = np.zeros(n0 * n1) if guess is None else np.asarray(guess, float).ravel()
        r = -self.residual(x0).ravel()
        if not np.any(r):
            return x0.reshape(self.shape).copy()
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            try:
                dx = spsolve(self.matrix.tocsc(), r)
            except MatrixRankWarning as exc:
                raise DuctSolverError("pressure system is singular") from exc
        x = x0 + dx
        if not np.all(np.isfinite(x)):
            raise DuctSolverError("pressure solve produced non-finite values")
        return x.reshape(self.shape)


class FrontUpdate(NamedTuple):
    psi: np.ndarray
    slope: np.ndarray


# --- geometry and coefficients ------------------------------------------------


def _cell_widths(n, h):
    wdt = np.full(n + 1, h)
    wdt[0] = wdt[-1] = 0.5 * h
    return wdt


def mapped_coefficients(state: DuctState, problem: DuctProblem, s: np.ndarray, deta: float) -> CoefficientFields:
    """Freeze lambda_R, beta_1, beta_2 node-wise and map them onto the (s, eta) grid."""
    g = problem.up.gamma
    p, w, rho, u = state.p, state.w, state.rho, state.u
    c2 = g * p / rho
    q2 = u * u * (1.0 + w * w)
    d = u * u - c2
    if np.any(q2 >= c2) or np.any(u <= 0.0):
        raise DuctSolverError("subsonic region lost ellipticity (M >= 1 or u <= 0)")
    lam = rho * c2 * u * w / d
    beta1 = -rho * rho * c2 * u ** 3 / d
    beta2 = (q2 / c2 - 1.0) * c2 / (u * d)
    a = 1.0 / beta1
    b = lam / beta1
    c = beta2 + lam * lam / beta1
    length = 1.0 - state.psi
    if np.any(length <= 0.0):
        raise DuctSolverError("front reached the exit")
    x = (1.0 - s)[:, None] * state.slope[None, :]
    a11 = (a - 2.0 * b * x + c * x * x) / length[None, :]
    a22 = c * length[None, :]
    a12 = b - c * x
    return CoefficientFields(a11, a22, a12, s[1] - s[0], deta)


def _nodal_gradients(p, ds, deta):
    ps = np.gradient(p, ds, axis=0, edge_order=2)
    pt = np.gradient(p, deta, axis=1, edge_order=2)
    return ps, pt


def _cross_fluxes(p, co: CoefficientFields):
    """Face-integrated lagged cross fluxes: (east faces, north faces)."""
    n0, n1 = p.shape
    ps, pt = _nodal_gradients(p, co.ds, co.deta)
    he = _cell_widths(n1 - 1, co.deta)
    hs = _cell_widths(n0 - 1, co.ds)
    xe = 0.5 * (co.a12[1:, :] * pt[1:, :] + co.a12[:-1, :] * pt[:-1, :]) * he[None, :]
    xn = 0.5 * (co.a12[:, 1:] * ps[:, 1:] + co.a12[:, :-1] * ps[:, :-1]) * hs[:, None]
    return xe, xn


def _implicit_face_coefficients(co: CoefficientFields):
    n0, n1 = co.a11.shape
    he = _cell_widths(n1 - 1, co.deta)
    hs = _cell_widths(n0 - 1, co.ds)
    ce = 0.5 * (co.a11[1:, :] + co.a11[:-1, :]) / co.ds * he[None, :]
    cn = 0.5 * (co.a22[:, 1:] + co.a22[:, :-1]) / co.deta * hs[:, None]
    return ce, cn


def flux_balance(p, co: CoefficientFields, cross_from=None) -> np.ndarray:
    """Net outward-minus-inward flux per control volume (the discrete operator applied to p).

    Cross fluxes are taken from ``cross_from`` (defaults to ``p`` itself).
    Boundary faces carry no flux, which is the natural wall condition.
    """
    ce, cn = _implicit_face_coefficients(co)
    xe, xn = _cross_fluxes(p if cross_from is None else cross_from, co)
    fe = ce * (p[1:, :] - p[:-1, :]) + xe
    fn = cn * (p[:, 1:] - p[:, :-1]) + xn
    out = np.zeros_like(p)
    out[:-1, :] += fe
    out[1:, :] -= fe
    out[:, :-1] += fn
    out[:, 1:] -= fn
    return out


def assemble_linear_system(p_field, coeffs: CoefficientFields, bcs) -> LinearSystem:
    """Five-point system for the pressure.

    ``bcs`` is an array shaped like the grid holding Dirichlet values and NaN
    at free nodes; free boundary nodes get the natural zero-flux condition.
    Cross-derivative fluxes are evaluated on ``p_field`` and moved to the
    right-hand side.
    """
    p_field = np.asarray(p_field, float)
    bcs = np.asarray(bcs, float)
    n0, n1 = p_field.shape
    idx = np.arange(n0 * n1).reshape(n0, n1)
    dirichlet = ~np.isnan(bcs)
    if not dirichlet.any():
        raise DuctSolverError("pressure system needs at least one Dirichlet node")
    ce, cn = _implicit_face_coefficients(coeffs)
    xe, xn = _cross_fluxes(p_field, coeffs)
    cross = np.zeros_like(p_field)
    cross[:-1, :] += xe
    cross[1:, :] -= xe
    cross[:, :-1] += xn
    cross[:, 1:] -= xn

    rows, cols, vals = [], [], []
    diag = np.zeros((n0, n1))

    def couple(k_a, k_b, c):
        # flux c (p_b - p_a) enters the balance of a with +, of b with -
        rows.extend([k_a.ravel(), k_b.ravel()])
        cols.extend([k_b.ravel(), k_a.ravel()])
        vals.extend([-c.ravel(), -c.ravel()])

    couple(idx[:-1, :], idx[1:, :], ce)
    couple(idx[:, :-1], idx[:, 1:], cn)
    diag[:-1, :] += ce
    diag[1:, :] += ce
    diag[:, :-1] += cn
    diag[:, 1:] += cn

    rows = np.concatenate(rows + [idx.ravel()])
    cols = np.concatenate(cols + [idx.ravel()])
    vals = np.concatenate(vals + [diag.ravel()])
    keep = ~dirichlet.ravel()[rows]
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    d_idx = idx[dirichlet]
    rows = np.concatenate([rows, d_idx])
    cols = np.concatenate([cols, d_idx])
    vals = np.concatenate([vals, np.ones(d_idx.size)])
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n0 * n1, n0 * n1))
    rhs = np.where(dirichlet, bcs, cross).ravel()
    return LinearSystem(mat, rhs, (n0, n1), dirichlet, is_m_matrix(mat), coeffs, bcs, p_field)


def is_m_matrix(mat) -> bool:
    """Positive diagonal, non-positive off-diagonal, weakly diagonally dominant rows."""
    mat = sp.csr_matrix(mat)
    d = mat.diagonal()
    off = mat - sp.diags(d)
    if np.any(d <= 0.0) or (off.nnz and off.data.max() > 0.0):
        return False
    row_sums = np.asarray(mat.sum(axis=1)).ravel()
    return bool(np.all(row_sums >= -1e-12 * d))


# --- front and hyperbolic part -----------------------------------------------


def front_pressure(slope, problem: DuctProblem) -> np.ndarray:
    """Pressure behind the front for its local slope d psi / d eta."""
    f = problem.eta0 * np.asarray(slope, float)
    sin2 = 1.0 / (1.0 + f * f)
    return np.array([pressure_from_shock_angle(s2, problem.up) for s2 in np.atleast_1d(sin2)])


def _rh_density(p, up: UpstreamState):
    g = up.gamma
    return up.rho0 * ((g + 1.0) * p + (g - 1.0) * up.p0) / ((g - 1.0) * p + (g + 1.0) * up.p0)


def recover_density_velocity(p, w, p_front, up: UpstreamState):
    """rho and u from entropy frozen along each stream line and the Bernoulli law."""
    g = up.gamma
    entropy = p_front / _rh_density(p_front, up) ** g
    b0 = bernoulli(up.as_flow_state(), up.gas)
    rho = (p / entropy[None, :]) ** (1.0 / g)
    c2 = g * p / rho
    q2 = 2.0 * (b0 - c2 / (g - 1.0))
    if np.any(q2 <= 0.0) or np.any(q2 >= c2):
        raise DuctSolverError("Bernoulli recovery left the subsonic range")
    u = np.sqrt(q2 / (1.0 + w * w))
    return rho, u


def recover_w(p, co: CoefficientFields) -> np.ndarray:
    """Integrate dw/deta = a11 p_s + a12 p_eta up each s-line from the lower wall, where w = 0."""
    ps, pt = _nodal_gradients(p, co.ds, co.deta)
    g1 = co.a11 * ps + co.a12 * pt
    return cumulative_trapezoid(g1, dx=co.deta, axis=1, initial=0.0)


def front_update(front_p, front_u, front_w, up: UpstreamState, anchor: float, omega: float,
                 eta: np.ndarray, previous: FrontUpdate | None = None) -> FrontUpdate:
    """New front from psi' = u w / [p], integrated from psi(0) = anchor and blended with ``previous``."""
    jump = np.asarray(front_p, float) - up.p0
    if np.any(jump <= 0.0):
        raise EntropyError("pressure jump across the front is not positive")
    slope = np.asarray(front_u, float) * np.asarray(front_w, float) / jump
    psi = anchor + cumulative_trapezoid(slope, eta, initial=0.0)
    if previous is None or omega == 1.0:
        return FrontUpdate(psi, slope)
    return FrontUpdate((1.0 - omega) * previous.psi + omega * psi, (1.0 - omega) * previous.slope + omega * slope)


# --- driver ------------------------------------------------------------------


def initial_state(problem: DuctProblem) -> DuctState:
    """U_b fields behind a (possibly perturbed) front through the anchor."""
    s, eta = problem.grid()
    t = problem.front_anchor_xi
    k = problem.perturb_mode * math.pi / problem.eta0
    amp = problem.perturb_amplitude
    psi = t + amp * np.sin(k * eta)
    slope = amp * k * np.cos(k * eta)
    p_plus = problem.p_plus
    p = p_plus + (problem.p_exit - p_plus) * np.repeat(s[:, None], eta.size, axis=1)
    p[0, :] = front_pressure(slope, problem)
    w = np.zeros_like(p)
    rho, u = recover_density_velocity(p, w, p[0, :], problem.up)
    return DuctState(t, psi, slope, p, w, rho, u)


class StepInfo(NamedTuple):
    field_change: float
    front_change: float
    wall_residual: float
    pde_residual: float
    m_matrix: bool


def picard_step(state: DuctState, problem: DuctProblem) -> tuple[DuctState, StepInfo]:
    """One full iteration: coefficients, pressure solve, w, rho and u, front."""
    s, eta = problem.grid()
    deta = eta[1] - eta[0]
    co = mapped_coefficients(state, problem, s, deta)
    bcs = np.full(state.p.shape, np.nan)
    bcs[0, :] = front_pressure(state.slope, problem)
    bcs[-1, :] = problem.p_exit
    system = assemble_linear_system(state.p, co, bcs)
    if not system.is_m_matrix:
        raise DuctSolverError("assembled pressure operator is not an M-matrix")
    p = system.solve(state.p)
    w = recover_w(p, co)
    rho, u = recover_density_velocity(p, w, p[0, :], problem.up)
    new_front = front_update(p[0, :], u[0, :], w[0, :], problem.up, state.anchor, problem.omega_relax, eta,
                             FrontUpdate(state.psi, state.slope))
    new = DuctState(state.anchor, new_front.psi, new_front.slope, p, w, rho, u)
    interior = flux_balance(p, co)[1:-1, :]
    info = StepInfo(
        field_change=float(np.max(np.abs(p - state.p)) / problem.p_plus),
        front_change=float(np.max(np.abs(new_front.psi - state.psi))),
        wall_residual=float(w[0, -1]),
        pde_residual=float(np.max(np.abs(interior))) if interior.size else 0.0,
        m_matrix=system.is_m_matrix,
    )
    return new, info


def _exited(psi) -> bool:
    return bool(np.any(psi <= -1.0) or np.any(psi >= 1.0))


def solve_duct(problem: DuctProblem, initial: DuctState | None = None) -> DuctResult:
    """Iterate until the front and pressure settle, the front leaves the duct, or max_iters."""
    s, eta = problem.grid()
    state = initial.copy() if initial is not None else initial_state(problem)
    history = []
    status, message = MAX_ITERS, ""
    it = 0
    try:
        for it in range(1, problem.max_iters + 1):
            state, info = picard_step(state, problem)
            record = {
                "iteration": it,
                "field_change": info.field_change,
                "front_change": info.front_change,
                "pde_residual": info.pde_residual,
                "wall_residual": info.wall_residual,
                "anchor": state.anchor,
                "shifted": False,
            }
            history.append(record)
            if _exited(state.psi):
                status, message = FRONT_EXITED, "front left the duct"
                break
            settled = info.front_change <= problem.tol_front and info.field_change <= problem.tol_field
            # the front has to meet both walls at right angles as well
            settled = settled and max(abs(state.slope[0]), abs(state.slope[-1])) <= problem.tol_front
            if settled and abs(info.wall_residual) <= problem.tol_wall:
                status = CONVERGED
                break
            if info.front_change <= problem.stall_front and abs(info.wall_residual) > problem.tol_wall:
                # stalled with w != 0 on the upper wall: move the anchor against the mismatch
                top = -1
                demand = state.u[0, top] * info.wall_residual / (state.p[0, top] - problem.up.p0)
                shift = float(-problem.drift_gain * demand * problem.eta0)
                state.anchor += shift
                state.psi = state.psi + shift
                record["shifted"] = True
                record["anchor"] = state.anchor
                record["front_change"] = max(info.front_change, abs(shift))
                if _exited(state.psi):
                    status, message = FRONT_EXITED, "front left the duct while the anchor drifted"
                    break
    except DuctSolverError as exc:
        exc.history = history
        exc.iteration = it
        raise
    if status == MAX_ITERS:
        message = f"no convergence within {problem.max_iters} iterations"
    if status == FRONT_EXITED:
        direction = "upstream" if np.mean(state.psi) < problem.front_anchor_xi else "downstream"
        message = f"{message}; drift direction {direction}"
    return DuctResult(status, state, s, eta, it, history, message)


def uniform_state(problem: DuctProblem) -> DuctState:
    """The exact normal-shock solution U_b on the problem grid."""
    return initial_state(replace(problem, perturb_amplitude=0.0, p_exit=problem.p_plus))


def residual_report(result: DuctResult, problem: DuctProblem) -> dict:
    """Discrete residuals of the final iterate; never raises on a bad field."""
    s, eta = result.s, result.eta
    st = result.state
    deta = eta[1] - eta[0]
    nan = float("nan")
    pde = pde_l2 = wall = nan
    try:
        co = mapped_coefficients(st, problem, s, deta)
    except DuctSolverError:
        co = None  # front outside the duct or field no longer subsonic
    if co is not None:
        bal = flux_balance(st.p, co)
        hs = _cell_widths(s.size - 1, co.ds)
        he = _cell_widths(eta.size - 1, deta)
        area = hs[:, None] * he[None, :]
        interior = (bal / area)[1:-1, :]
        pde = float(np.max(np.abs(interior)))
        pde_l2 = float(np.sqrt(np.sum(interior ** 2 * area[1:-1, :])))
        ps, pt = _nodal_gradients(st.p, co.ds, deta)
        g2 = co.a12 * ps + co.a22 * pt
        wall = float(max(np.max(np.abs(g2[:, 0])), np.max(np.abs(g2[:, -1]))))
    up = problem.up
    rh = []
    for j in range(eta.size):
        down = FlowState(st.p[0, j], st.u[0, j], st.u[0, j] * st.w[0, j], st.rho[0, j])
        rh.append(np.max(np.abs(rh_residual(up.as_flow_state(), down, problem.eta0 * st.slope[j], up.gas))))
    return {
        "pde_residual": pde,
        "pde_residual_l2": pde_l2,
        "wall_neumann_residual": wall,
        "exit_dirichlet_residual": float(np.max(np.abs(st.p[-1, :] - problem.p_exit))),
        "front_rh_residual": float(max(rh)),
        "upper_wall_w": float(np.max(np.abs(st.w[:, -1]))),
        "front_perpendicularity": float(max(abs(st.slope[0]), abs(st.slope[-1]))),
        "max_pressure_deviation": float(np.max(np.abs(st.p - problem.p_plus)) / problem.p_plus),
        "max_front_deviation": float(np.max(np.abs(st.psi - problem.front_anchor_xi))),
    }
