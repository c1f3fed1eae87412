"""Exception and warning types raised by :mod:`rgwalk`."""


class RGWalkError(Exception):
    """Base class for all library errors."""


class ConfigurationError(RGWalkError, ValueError):
    """Invalid user configuration.

    ``field`` names the offending configuration entry when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ContractViolation(RGWalkError, ValueError):
    """An operation was called on an input it does not accept
    (for instance a u-basis field passed to a v-basis kernel)."""


class NumericalValidityError(RGWalkError, ArithmeticError):
    """A numerical result falls outside its mathematically valid range."""


class SingularParameterError(NumericalValidityError):
    """A closed-form expression is singular at the requested parameters."""


class DomainError(NumericalValidityError):
    """A parameter lies outside the domain of a closed-form expression."""


class DegeneracyError(NumericalValidityError):
    """Two eigenvalues are too close to tell the leading branch apart."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class CrossCheckError(RGWalkError):
    """Two independent computation routes disagree beyond tolerance."""


class WrapAroundWarning(UserWarning):
    """The walk front reached the edge of the periodic circle."""


class ValidityWarning(UserWarning):
    """An approximation is used outside its documented validity regime."""
