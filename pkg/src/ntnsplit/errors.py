"""Exception types shared across the toolkit."""


class NtnSplitError(Exception):
    """Base class for all errors raised by ntnsplit."""


class DomainError(NtnSplitError, ValueError):
    """An argument lies outside the domain of a formula."""


class InfeasibleGeometryError(NtnSplitError, ValueError):
    """The requested geometry places a point below the horizon."""


class ConfigError(NtnSplitError, ValueError):
    """A configuration value is invalid or inconsistent.

    ``path`` locates the offending field inside a scenario document
    (e.g. ``"harq.n_processes"``) when the error comes from a file.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InfeasibleEpochError(NtnSplitError):
    """No split satisfies the constraints of an optimisation epoch."""

    def __init__(self, epoch_index: int, reasons: dict[str, str]):
        self.epoch_index = epoch_index
        self.reasons = reasons
        detail = "; ".join(f"{k}: {v}" for k, v in reasons.items())
        super().__init__(f"epoch {epoch_index} has no feasible split ({detail})")
