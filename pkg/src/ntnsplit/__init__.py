"""Planning and simulation toolkit for RAN functional splits over LEO feeder links."""

from .errors import (
    ConfigError,
    DomainError,
    InfeasibleEpochError,
    InfeasibleGeometryError,
    NtnSplitError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "InfeasibleEpochError",
    "InfeasibleGeometryError",
    "NtnSplitError",
]
