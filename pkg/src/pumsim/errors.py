"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for invariant violations raised by the simulator."""


class CrossSubarrayError(SimulationError):
    """Raised when an operation pairs rows from different subarrays."""


class LatchOverflowError(SimulationError):
    """Raised when a predecoder group would latch more than two selects."""


class RowOutOfRangeError(SimulationError):
    """Raised when a row address falls outside the configured geometry."""


class UnresolvedCellError(SimulationError):
    """Raised when a read touches a cell that holds no full 0/1 charge."""


class UndefinedTimingRegimeError(SimulationError):
    """Raised when command gaps fall in a regime with no defined behavior."""


class BankStateError(SimulationError):
    """Raised when a command is illegal for the current open/closed state."""


class TraceFormatError(SimulationError):
    """Raised when a command trace is malformed."""


class InvalidArityError(SimulationError):
    """Raised for majority arities that the replication scheme rejects."""


class ArityUnavailableError(SimulationError):
    """Raised when a logic network needs a gate wider than the configured max."""


class ZeroSuccessRateError(SimulationError):
    """Raised when a performance scenario divides by a zero success rate."""


class ConfigError(Exception):
    """Raised for unreadable or inconsistent experiment configuration."""
