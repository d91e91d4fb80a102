"""Exception taxonomy shared by all modules."""


class FeynpathError(Exception):
    """Base class for all library errors."""


class DomainMismatch(FeynpathError):
    """A function, interval, or grid does not live on the expected [0, T]."""


class NonPositiveVariance(FeynpathError):
    """The variance profile b fails to be strictly increasing where required."""


class ProfileMismatch(FeynpathError):
    """Two objects built over different (a, b) profiles were combined."""


class GridMismatch(FeynpathError):
    """A density's breakpoints are not contained in the time grid."""


class SupportViolation(FeynpathError):
    """A density vanishes identically on a piece of positive length."""


class UnsupportedFunctional(FeynpathError):
    """The functional is outside the supported class, or needs an explicit
    opt-in flag (unbounded exponentials)."""


class TooLargeDegree(FeynpathError):
    """Monomial degree beyond the enumeration/memoization cap."""


class ZeroParameter(FeynpathError):
    """The Feynman parameter q must be a non-zero real number."""


class BadDomain(FeynpathError):
    """A scalar parameter lies outside its admissible domain."""


class ConfigError(FeynpathError):
    """Experiment configuration failed to parse or validate."""
