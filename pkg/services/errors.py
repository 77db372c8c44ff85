"""
Collective Scattering Errors
Exception hierarchy shared by the numerical services, the CLI and the API
"""

from typing import Optional


class CollectiveError(Exception):
    """Base class for every failure raised by the services package."""


class DomainError(CollectiveError, ValueError):
    """Argument outside the domain of a special function or operator."""


class CoincidenceError(CollectiveError):
    """Two points that must be distinct coincide (Green tensor divergence)."""


class PoleError(CollectiveError):
    """Permittivity sits on the Clausius-Mossotti pole (eps = -2)."""


class SingularityError(CollectiveError):
    """Radiative-reaction denominator or a mode evaluation is singular."""


class ResonanceError(CollectiveError):
    """
    I - X is numerically singular at this frequency (collective resonance).

    Carries the condition number so scans can report it in their diagnostics.
    """

    def __init__(self, message: str, condition_number: Optional[float] = None):
        super().__init__(message)
        self.condition_number = condition_number


class DecompositionError(CollectiveError):
    """Radial function of the decomposition sphere is too close to a zero."""

    def __init__(self, message: str, ell: int):
        super().__init__(message)
        self.ell = ell


class IntegrandSignError(CollectiveError):
    """det[I - X(i xi)] is not positive, the energy integrand is not real."""


class OverlapError(CollectiveError):
    """Spheres of a geometry overlap or touch."""


class ConfigError(CollectiveError):
    """Run configuration is invalid or does not fit the requested task."""
