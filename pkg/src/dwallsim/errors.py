"""Exception types shared across the package."""


class DwallsimError(Exception):
    """Base class for all package errors."""


class ValidationError(DwallsimError):
    """A config or argument value violates a documented precondition."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class ParseError(DwallsimError):
    """A config file could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class GridTooSmallError(DwallsimError):
    """Grid has too few points (or too little extent) for the operation."""


class RegridOutOfRangeError(DwallsimError):
    """A translation needs samples outside the grid and no analytic source exists."""


class TrajectoryTooShortError(DwallsimError):
    """Time-series diagnostics need at least three snapshots."""


class NanDetectedError(DwallsimError):
    """A NaN appeared during time integration."""


class BlowupError(DwallsimError):
    """Discrete H^1 size exploded during integration; partial data attached."""

    def __init__(self, message: str, trajectory=None, index=None):
        self.trajectory = trajectory
        self.index = index
        super().__init__(message)


class NoConvergenceError(DwallsimError):
    """A modulation solve did not reach tolerance (used when raising is requested)."""


class SeparationTooSmallError(DwallsimError):
    """Initial wall gauges are closer than the contraction separation floor."""


class SolverFailError(DwallsimError):
    """The eigenvalue solver failed to converge."""


class InsufficientDataError(DwallsimError):
    """Not enough usable points for a regression."""


class FormatError(DwallsimError):
    """A data file does not follow the documented format."""


class NormViolationError(FormatError):
    """A snapshot row is not unit norm; carries the offending row index."""

    def __init__(self, row: int, norm: float):
        self.row = row
        self.norm = norm
        super().__init__(f"row {row}: |m| = {norm!r} violates unit norm")


class CflViolationWarning(UserWarning):
    """Explicit time step exceeds the advisory parabolic stability bound."""
