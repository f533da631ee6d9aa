"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class MeterAggError(Exception):
    """Base class for all package errors."""


class NegativeReading(MeterAggError, ValueError):
    pass


class Overflow(MeterAggError, OverflowError):
    pass


class ConfigInvalid(MeterAggError, ValueError):
    pass


class ParseError(MeterAggError, ValueError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.row = row
        self.column = column


class MissingCell(MeterAggError, LookupError):
    def __init__(self, meter: int, frame: int):
        super().__init__(f"no reading for meter {meter} at frame {frame}")
        self.meter = meter
        self.frame = frame


class IntegrityError(MeterAggError):
    """Raised by protocol entities when a frame must be declined.

    ``kind`` is a short stable label used in run reports and CSV verdicts.
    """

    kind = "integrity"


class TamperDetected(IntegrityError):
    kind = "tamper_detected"


class NonIntegralRecovery(TamperDetected):
    kind = "non_integral"


class PaddingViolation(IntegrityError):
    kind = "padding_violation"


class TamperSuspected(IntegrityError):
    kind = "tamper_suspected"

    def __init__(self, message: str, meter: int | None = None):
        super().__init__(message)
        self.meter = meter


class MissingMeter(IntegrityError):
    kind = "missing"

    def __init__(self, meter: int, frame: int):
        super().__init__(f"no message from meter {meter} for frame {frame}")
        self.meter = meter
        self.frame = frame


class FrameMismatch(IntegrityError):
    kind = "frame_mismatch"

    def __init__(self, expected: int, got: int):
        super().__init__(f"expected frame {expected}, message carries frame {got}")
        self.expected = expected
        self.got = got
