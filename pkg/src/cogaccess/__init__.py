"""cogaccess: stable-throughput optimization and Monte Carlo validation of
sensing-based random spectrum access for a primary/secondary user pair."""

from . import cli, estimator, mathcore, optimizer, phy, schemes, sim
from .errors import (
    CogAccessError,
    ConfigError,
    DomainError,
    InfeasibleError,
    PrimaryUnstableError,
)

__version__ = "0.1.0"

__all__ = [
    "cli",
    "estimator",
    "mathcore",
    "optimizer",
    "phy",
    "schemes",
    "sim",
    "CogAccessError",
    "ConfigError",
    "DomainError",
    "InfeasibleError",
    "PrimaryUnstableError",
    "__version__",
]
