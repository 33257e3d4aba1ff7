"""Exception hierarchy.

Every error raised by the package derives from :class:`LoadCnnError`.  The CLI
maps :class:`DataError` to exit code 3 and :class:`NumericError` to exit code 4.
"""
from __future__ import annotations


class LoadCnnError(Exception):
    """Base class for all package errors."""


class DataError(LoadCnnError):
    """Input data is malformed, inconsistent or insufficient."""


class NumericError(LoadCnnError):
    """A numerical computation produced an invalid result."""


class ConfigError(LoadCnnError):
    """An invalid configuration value or file."""


class _LineError(DataError):
    def __init__(self, line: int, detail: str = ""):
        self.line = line
        msg = f"line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class MalformedRow(_LineError):
    pass


class NegativeEnergy(_LineError):
    pass


class BadTimestamp(_LineError):
    pass


class _PositionError(DataError):
    def __init__(self, position, detail: str = ""):
        self.position = position
        msg = f"position {position}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class Gap(_PositionError):
    pass


class GapTooLarge(_PositionError):
    pass


class DuplicateTimestamp(_PositionError):
    pass


class Misaligned(_PositionError):
    pass


class UnsupportedStep(DataError):
    pass


class PoolTooSmall(DataError):
    pass


class ConstantSeries(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class TooFewWindows(DataError):
    pass


class InsufficientData(DataError):
    pass


class ShapeMismatch(LoadCnnError, ValueError):
    pass


class KernelTooLong(ShapeMismatch):
    pass


class TraceMismatch(LoadCnnError, ValueError):
    pass


class ModeMismatch(LoadCnnError, ValueError):
    pass


class InvalidConfig(ConfigError, ValueError):
    pass


class NonFiniteValue(NumericError):
    pass


class NonFiniteGradient(NumericError):
    pass


class NonFiniteLoss(NumericError):
    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, batch {batch}")


class AllFailedRow(NumericError):
    pass
