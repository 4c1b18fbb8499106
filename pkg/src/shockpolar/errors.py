"""Exception hierarchy.

Physical-domain failures (no shock of the requested kind exists) are kept
apart from numerical failures so the CLI can map them to distinct exit codes.
"""


class ShockPolarError(Exception):
    """Base class for all package errors."""


class InvalidStateError(ShockPolarError, ValueError):
    """A thermodynamic state or parameter violates its invariants."""


class PhysicalDomainError(ShockPolarError, ValueError):
    """The requested configuration does not exist physically."""


class PolarDomainError(PhysicalDomainError):
    """Pressure outside [p0, p_plus]: the polar radicand is negative."""


class EntropyError(PhysicalDomainError):
    """The pressure jump is not positive."""


class DetachmentError(PhysicalDomainError):
    """Wedge angle beyond the maximum deflection; the shock detaches."""


class NotSupersonicShockError(PhysicalDomainError):
    """Downstream state is not supersonic where it has to be."""


class NoIntersectionError(PhysicalDomainError):
    """Two polars have no crossing on their transonic arcs."""


class EllipticityError(PhysicalDomainError):
    """A sonic or supersonic state was passed where a subsonic one is required."""


class NumericalError(ShockPolarError, RuntimeError):
    """Iteration or root bracketing failed."""


class DuctSolverError(NumericalError):
    """The duct free-boundary iteration broke down.

    ``history`` holds the per-iteration records collected before the failure.
    """

    def __init__(self, message, history=None, iteration=None):
        super().__init__(message)
        self.history = list(history or [])
        self.iteration = iteration
