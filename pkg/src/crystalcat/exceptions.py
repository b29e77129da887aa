"""Exception hierarchy shared by the numerical modules."""


class CrystalCatError(Exception):
    """Base class for all package errors."""


class DomainError(CrystalCatError, ValueError):
    """Input lies outside the real domain of a formula (coincident ions,
    negative radicands, poles)."""


class UnsupportedError(CrystalCatError, NotImplementedError):
    """Requested structure has no closed form for the given spin pattern."""


class PreconditionError(CrystalCatError, ValueError):
    """A documented precondition of an operation is violated."""


class ConvergenceError(CrystalCatError, RuntimeError):
    """An iterative solver did not reach its tolerance."""


class SearchExhausted(CrystalCatError):
    """A stochastic search ended without producing a stable structure.

    This is an expected outcome inside regions where the sought structure
    does not exist, and is kept separate from :class:`ConvergenceError`.
    """


class UnstableModelError(CrystalCatError, ValueError):
    """A harmonic model was requested around an unstable or near-critical
    equilibrium."""


class ConfigError(CrystalCatError, ValueError):
    """Run configuration failed schema validation."""
