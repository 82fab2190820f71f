"""Exception types shared across the package."""


class GarnnError(Exception):
    """Base class for all package errors."""


class DomainError(GarnnError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SupportError(DomainError):
    """An observation lies outside the support of the chosen distribution."""


class DataError(GarnnError, ValueError):
    """Input data violates a structural requirement (gaps, missing values)."""


class ConfigError(GarnnError, ValueError):
    """A run configuration is malformed or inconsistent."""


class FitError(GarnnError, RuntimeError):
    """Model fitting failed; carries diagnostics in the message."""


class SimulationError(GarnnError, RuntimeError):
    """The simulated mean path left the distribution's mean domain."""


class DispersionOverflowError(GarnnError, ArithmeticError):
    """A dispersion estimate is unbounded (e.g. zero deviance)."""
