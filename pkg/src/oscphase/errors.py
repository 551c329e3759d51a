"""Exception types shared across the toolkit."""


class OscphaseError(Exception):
    """Base class for all toolkit errors."""


class ParameterDomainError(OscphaseError, ValueError):
    """Model or config parameters outside their admissible domain."""


class GridError(OscphaseError, ValueError):
    """Invalid annulus-grid geometry or resolution."""


class DivergenceError(OscphaseError, RuntimeError):
    """A simulated trajectory left the blow-up guard radius."""


class ReturnTimeoutError(OscphaseError, RuntimeError):
    """A trajectory failed to return to the section within the horizon."""


class SingularOperatorError(OscphaseError, RuntimeError):
    """Linear solve or null-space extraction failed (wrong multiplicity,
    inconsistent right-hand side, degenerate diffusion)."""


class NonOscillatoryError(OscphaseError, RuntimeError):
    """Stationary angular flux non-positive or inconsistent across sections."""


class PhaselessRegionError(OscphaseError, RuntimeError):
    """Eigenfunction amplitude vanishes on unmasked nodes; the phase is
    undefined there."""


class InterpolationError(OscphaseError, ValueError):
    """Evaluation point outside the grid's coverage."""
