"""Semantic exception hierarchy shared by all cogaccess modules."""


class CogAccessError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CogAccessError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class InfeasibleError(CogAccessError):
    """The requested optimization problem has an empty feasible set."""


class PrimaryUnstableError(InfeasibleError):
    """The primary queue cannot be stabilized under the given load."""


class ConfigError(CogAccessError):
    """A run configuration document is malformed or inconsistent."""
