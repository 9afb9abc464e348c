"""Exception hierarchy.

Every error carries the process exit code the CLI reports for it:
2 usage, 3 capacity/domain, 4 extraction failure, 5 I/O or format.
"""


class StegoError(Exception):
    exit_code = 1


class UsageError(StegoError):
    exit_code = 2


# --- capacity / domain (exit 3) -------------------------------------------

class DomainError(StegoError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 3


class EmptyMessage(DomainError):
    pass


class NonAsciiCharacter(DomainError):
    pass


class MessageTooLong(DomainError):
    pass


class UnsupportedCharacter(DomainError):
    pass


class InvalidMorseSequence(DomainError):
    pass


class InvalidProposition(DomainError):
    pass


class CapacityExceeded(DomainError):
    def __init__(self, available: int, required: int, what: str = "carrier"):
        self.available = available
        self.required = required
        super().__init__(
            f"{what} holds {available} bits but the payload needs {required}"
        )


class QuantumTooCoarse(DomainError):
    pass


class NotEnoughUtterances(DomainError):
    pass


class EventOrderViolated(DomainError):
    pass


class CoincidentPositions(DomainError):
    pass


class ScheduleTooLong(DomainError):
    pass


class TooFewSamples(DomainError):
    pass


class IncompatibleSignals(DomainError):
    pass


# --- extraction failures (exit 4) -----------------------------------------

class ExtractionError(StegoError):
    """No valid hidden message could be recovered."""

    exit_code = 4


class MagicNotFound(ExtractionError):
    pass


class ChecksumMismatch(ExtractionError):
    pass


class TruncatedFrame(ExtractionError):
    pass


class CorruptPayload(ExtractionError):
    """Checksum verified but the payload is not printable ASCII."""


class UnknownSymbolGroup(ExtractionError):
    pass


class GapOutOfRange(ExtractionError):
    pass


class NoPulsesFound(ExtractionError):
    pass


# --- I/O and file formats (exit 5) ----------------------------------------

class FormatError(StegoError):
    exit_code = 5


class MalformedWav(FormatError):
    pass


class MalformedImage(FormatError):
    pass


class MalformedCsv(FormatError):
    pass
