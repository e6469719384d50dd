from typing import Optional


class VbtError(Exception):
    """Base class for all errors raised by the sampling toolkit."""


class ParameterError(VbtError, ValueError):
    """Invalid encoder, signal or reconstruction parameters."""


class DomainError(VbtError, ValueError):
    """An interval or instant lies outside the signal's observation window."""


class IngestionError(VbtError):
    """A recording could not be turned into a bandlimited signal."""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class EncodingError(VbtError):
    """The encoder could not produce a valid encoding."""


class LowEnergyError(EncodingError):
    """The running energy never left the numerical floor (unshifted mode)."""

    def __init__(self, interval: int, t_start: float):
        super().__init__(
            f"interval {interval} starting at t={t_start:.9g} s never accumulated energy "
            f"above the numerical floor; use the shifted mode (s > c)"
        )
        self.interval = interval
        self.t_start = t_start


class EndOfWindow(VbtError):
    """No firing before the end of the observation window."""


class ReconstructionError(VbtError):
    """The iterative reconstruction could not run."""


class NonContractionError(ReconstructionError):
    """The iterate norm grew instead of contracting."""

    def __init__(self, iteration: int, interval: int, residual: float):
        super().__init__(
            f"iteration {iteration}: iterate norm grew more than 10x over 10 iterations; "
            f"largest residual average {residual:.3e} on interval {interval}"
        )
        self.iteration = iteration
        self.interval = interval


class MetadataMismatchError(VbtError):
    """An encoding does not belong to the signal it was paired with."""


class VerificationError(VbtError):
    """A theorem-backed inequality failed."""


class ReportIOError(VbtError, OSError):
    """A report or data file could not be read or written."""

    def __init__(self, path, error: Exception):
        super().__init__(f"{path}: {error}")
        self.path = str(path)
