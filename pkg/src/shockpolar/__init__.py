"""Steady transonic shocks for the 2-D compressible Euler equations.

Shock polars, oblique and normal shocks, flat Mach configurations, the
elliptic structure of the subsonic region in mass-flux coordinates, and a
free-boundary solver for a normal shock in a straight duct.
"""

__version__ = "0.1.0"

from .errors import (
    DetachmentError,
    DuctSolverError,
    EllipticityError,
    EntropyError,
    InvalidStateError,
    NoIntersectionError,
    NotSupersonicShockError,
    NumericalError,
    PhysicalDomainError,
    PolarDomainError,
    ShockPolarError,
)
from .gas import AIR, FlowState, GasConstants, bernoulli, classify, entropy_measure, mach, sound_speed
from .polar import (
    MINUS,
    PLUS,
    CriticalPoints,
    ObliqueSolutions,
    PolarPoint,
    ShockSolution,
    UpstreamState,
    critical_points,
    downstream_state,
    normal_shock,
    normal_shock_pressure,
    oblique_solutions,
    polar_w,
    rh_residual,
    sample_polar,
)
from .mach_config import MachConfiguration, ValidationReport, build_configuration, intersect_polars, validate_configuration
from .lagrangian import EllipticCoefficients, MatrixW, boundary_sign, coefficients, ellipticity, matrix_w
from .duct import DuctProblem, DuctResult, assemble_linear_system, front_update, residual_report, solve_duct
