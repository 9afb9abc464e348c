"""Message representation shared by every carrier.

Payloads travel as a small self-delimiting frame so that extraction from a
noisy or partially used carrier can tell "nothing here" apart from "something
here but damaged"::

    [0x52][0x53][len_hi][len_lo][payload ...][xor_checksum]

Bits are most-significant-bit first within each byte. Bit sequences are
``numpy`` arrays of dtype ``uint8`` holding 0/1 values.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from operator import xor
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ChecksumMismatch,
    CorruptPayload,
    EmptyMessage,
    ExtractionError,
    InvalidMorseSequence,
    MagicNotFound,
    MessageTooLong,
    NonAsciiCharacter,
    TruncatedFrame,
    UnknownSymbolGroup,
    UnsupportedCharacter,
)

MAGIC = b"\x52\x53"
HEADER_BYTES = 4  # magic + 16-bit length
OVERHEAD_BYTES = 5  # header + checksum
MAX_PAYLOAD = 0xFFFF

_MAGIC_WORD = int.from_bytes(MAGIC, "big")
_BIT_WEIGHTS16 = 1 << np.arange(15, -1, -1, dtype=np.int64)


def _check_text(text: str) -> bytes:
    if not text:
        raise EmptyMessage("message is empty")
    for i, ch in enumerate(text):
        if not 0x20 <= ord(ch) <= 0x7E:
            raise NonAsciiCharacter(
                f"character {ch!r} at index {i} is outside printable ASCII"
            )
    if len(text) > MAX_PAYLOAD:
        raise MessageTooLong(f"{len(text)} bytes exceeds {MAX_PAYLOAD}")
    return text.encode("ascii")


def xor_fold(data: bytes) -> int:
    return reduce(xor, data, 0)


@dataclass(frozen=True)
class BitFrame:
    """A framed ASCII payload."""

    payload: bytes

    def __post_init__(self):
        if len(self.payload) > MAX_PAYLOAD:
            raise MessageTooLong(f"{len(self.payload)} bytes exceeds {MAX_PAYLOAD}")

    @property
    def magic(self) -> bytes:
        return MAGIC

    @property
    def length(self) -> int:
        return len(self.payload)

    @property
    def checksum(self) -> int:
        return xor_fold(self.payload)

    @property
    def bit_count(self) -> int:
        return 8 * (OVERHEAD_BYTES + self.length)

    def to_bytes(self) -> bytes:
        return MAGIC + self.length.to_bytes(2, "big") + self.payload + bytes([self.checksum])

    def to_bits(self) -> np.ndarray:
        return bytes_to_bits(self.to_bytes())

    @property
    def text(self) -> str:
        return self.payload.decode("ascii")


def bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_bytes(bits: Sequence[int] | np.ndarray) -> bytes:
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.size % 8:
        raise ValueError(f"bit count {arr.size} is not a multiple of 8")
    return np.packbits(arr).tobytes()


def as_bits(payload: BitFrame | Iterable[int] | np.ndarray) -> np.ndarray:
    """Normalise a frame or a raw 0/1 sequence to a uint8 bit array."""
    if isinstance(payload, BitFrame):
        return payload.to_bits()
    arr = np.asarray(payload, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit sequences may only contain 0 and 1")
    return arr


def frame_message(text: str) -> BitFrame:
    """Wrap printable ASCII text in a frame.

    Raises:
        EmptyMessage: ``text`` is empty.
        NonAsciiCharacter: a character lies outside 0x20-0x7E.
        MessageTooLong: more than 65535 bytes.
    """
    return BitFrame(_check_text(text))


def _parse_at(bits: np.ndarray, start: int) -> str:
    n = bits.size - start
    if n < 8 * HEADER_BYTES:
        raise TruncatedFrame(f"frame header at bit {start} is cut off")
    header = bits_to_bytes(bits[start:start + 8 * HEADER_BYTES])
    length = int.from_bytes(header[2:4], "big")
    total = 8 * (OVERHEAD_BYTES + length)
    if n < total:
        raise TruncatedFrame(
            f"frame at bit {start} declares {length} payload bytes "
            f"but only {n} bits remain (need {total})"
        )
    body = bits_to_bytes(bits[start + 32:start + total])
    payload, checksum = body[:-1], body[-1]
    if xor_fold(payload) != checksum:
        raise ChecksumMismatch(
            f"frame at bit {start}: checksum 0x{checksum:02x} "
            f"!= computed 0x{xor_fold(payload):02x}"
        )
    if not payload or any(b < 0x20 or b > 0x7E for b in payload):
        raise CorruptPayload(f"frame at bit {start} carries non-printable bytes")
    return payload.decode("ascii")


def find_magic(bits: np.ndarray, max_scan: int | None = None) -> np.ndarray:
    """Bit offsets at which the 16-bit frame magic starts."""
    bits = as_bits(bits)
    if bits.size < 16:
        return np.empty(0, dtype=np.int64)
    limit = bits.size - 15 if max_scan is None else min(max_scan, bits.size - 15)
    windows = np.lib.stride_tricks.sliding_window_view(bits[:limit + 15], 16)
    words = windows.astype(np.int64) @ _BIT_WEIGHTS16
    return np.flatnonzero(words == _MAGIC_WORD)


def unframe_message(bits, max_scan: int | None = None) -> str:
    """Recover the payload of the first valid frame in ``bits``.

    Every occurrence of the magic within the first ``max_scan`` bit offsets
    (all of them by default) is tried in order. Trailing bits after a frame,
    such as salt, are ignored.

    Raises:
        MagicNotFound: no magic in the scan window.
        ChecksumMismatch, TruncatedFrame, CorruptPayload: magic was found but
            no candidate verified; the first candidate's failure is raised.
    """
    bits = as_bits(bits)
    candidates = find_magic(bits, max_scan)
    if candidates.size == 0:
        raise MagicNotFound(f"no frame magic in {bits.size} bits")
    first_error = None
    for start in candidates:
        try:
            return _parse_at(bits, int(start))
        except ExtractionError as exc:
            if first_error is None:
                first_error = exc
    raise first_error


# --- Morse ----------------------------------------------------------------

class Symbol(enum.Enum):
    DOT = "."
    DASH = "-"
    LETTER_GAP = " "
    WORD_GAP = "/"

    @property
    def is_gap(self) -> bool:
        return self in (Symbol.LETTER_GAP, Symbol.WORD_GAP)


MORSE_TABLE = {
    "A": ".-", "B": "-...", "C": "-.-.", "D": "-..", "E": ".", "F": "..-.",
    "G": "--.", "H": "....", "I": "..", "J": ".---", "K": "-.-", "L": ".-..",
    "M": "--", "N": "-.", "O": "---", "P": ".--.", "Q": "--.-", "R": ".-.",
    "S": "...", "T": "-", "U": "..-", "V": "...-", "W": ".--", "X": "-..-",
    "Y": "-.--", "Z": "--..",
    "0": "-----", "1": ".----", "2": "..---", "3": "...--", "4": "....-",
    "5": ".....", "6": "-....", "7": "--...", "8": "---..", "9": "----.",
    ".": ".-.-.-", ",": "--..--", "?": "..--..", "'": ".----.", "!": "-.-.--",
    "/": "-..-.", "(": "-.--.", ")": "-.--.-", "&": ".-...", ":": "---...",
    ";": "-.-.-.", "=": "-...-", "+": ".-.-.", "-": "-....-", "_": "..--.-",
    '"': ".-..-.", "$": "...-..-", "@": ".--.-.",
}
REVERSE_MORSE = {code: ch for ch, code in MORSE_TABLE.items()}


@dataclass(frozen=True)
class MorseSequence:
    symbols: tuple[Symbol, ...] = ()

    def __post_init__(self):
        syms = tuple(self.symbols)
        object.__setattr__(self, "symbols", syms)
        if syms and (syms[0].is_gap or syms[-1].is_gap):
            raise InvalidMorseSequence("sequence may not start or end with a gap")
        for a, b in zip(syms, syms[1:]):
            if a.is_gap and b.is_gap:
                raise InvalidMorseSequence("consecutive gap symbols")

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __str__(self):
        return "".join(s.value for s in self.symbols)

    @classmethod
    def parse(cls, code: str) -> "MorseSequence":
        """Build from the ``.``, ``-``, `` `` (letter gap), ``/`` notation."""
        try:
            return cls(tuple(Symbol(c) for c in code))
        except ValueError:
            raise InvalidMorseSequence(f"bad Morse notation {code!r}") from None

    @property
    def mark_count(self) -> int:
        return sum(1 for s in self.symbols if not s.is_gap)


def text_to_morse(text: str) -> MorseSequence:
    """International Morse for ``text``; runs of whitespace become one word gap."""
    words = text.upper().split()
    symbols: list[Symbol] = []
    for w, word in enumerate(words):
        if w:
            symbols.append(Symbol.WORD_GAP)
        for c, ch in enumerate(word):
            code = MORSE_TABLE.get(ch)
            if code is None:
                raise UnsupportedCharacter(f"{ch!r} has no International Morse code")
            if c:
                symbols.append(Symbol.LETTER_GAP)
            symbols.extend(Symbol(m) for m in code)
    return MorseSequence(tuple(symbols))


def morse_to_text(seq: MorseSequence) -> str:
    out = []
    group = ""
    for sym in list(seq) + [Symbol.LETTER_GAP]:
        if not sym.is_gap:
            group += sym.value
            continue
        if group:
            try:
                out.append(REVERSE_MORSE[group])
            except KeyError:
                raise UnknownSymbolGroup(f"{group!r} is not a Morse character") from None
            group = ""
        if sym is Symbol.WORD_GAP:
            out.append(" ")
    return "".join(out)


# --- salt -----------------------------------------------------------------

def salted_length(n_bits: int, ratio: float) -> int:
    # repr() keeps the decimal the caller wrote, so 90 bits at 0.1 give 100, not 101
    keep = 1 - Fraction(repr(float(ratio)))
    return math.ceil(Fraction(n_bits) / keep)


def add_salt(bits, ratio: float, seed: int) -> np.ndarray:
    """Append seeded random filler so that ``ratio`` of the output is salt."""
    if not 0 <= ratio < 1:
        raise ValueError(f"salt ratio must lie in [0, 1), got {ratio}")
    bits = as_bits(bits)
    n_salt = salted_length(bits.size, ratio) - bits.size
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    salt = rng.integers(0, 2, size=n_salt, dtype=np.uint8)
    return np.concatenate([bits, salt])
