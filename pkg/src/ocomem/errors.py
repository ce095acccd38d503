"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, sign, length)."""


class DomainError(ValueError):
    """A bound formula was evaluated outside the region where it is defined."""


class InconsistentInstanceError(ValueError):
    """Revealed data contradicts an earlier promise, e.g. v_t outside its estimation set."""


class SearchSpaceError(ValueError):
    """An exhaustive search was requested over too many points."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    The partial result is attached as ``report`` so callers can inspect how
    far it got.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoStableControllerError(RuntimeError):
    """The linear-controller search found no gain with spectral radius below one."""


class ConfigError(ContractError):
    """An experiment configuration is malformed; ``line`` points into the source text when known."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line
