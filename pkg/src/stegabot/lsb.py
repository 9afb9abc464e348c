"""Least-significant-bit embedding for digital carriers.

Three carriers are supported: raster images (the robot's face), 16-bit PCM
audio (its spoken "hello"), and float telemetry such as joint angles. Images
and audio flip the LSB of integer samples. Floats cannot survive decimal
logging with raw mantissa tricks, so each value is snapped to a grid of step
``quantum`` and the parity of the grid index carries the bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import formats
from .core import BitFrame, as_bits, unframe_message
from .errors import CapacityExceeded, DomainError, MalformedCsv, QuantumTooCoarse

DEFAULT_QUANTUM = 1e-4  # rad; far below visible joint motion


def _positions(n: int, offset: int, stride: int) -> np.ndarray:
    if offset < 0:
        raise DomainError(f"offset must be >= 0, got {offset}")
    if stride < 1:
        raise DomainError(f"stride must be >= 1, got {stride}")
    return np.arange(offset, n, stride)


def capacity(n: int, offset: int = 0, stride: int = 1) -> int:
    return _positions(n, offset, stride).size


def embed_lsb(samples: np.ndarray, payload, offset: int = 0, stride: int = 1) -> np.ndarray:
    """Write ``payload`` bits into the LSBs of an integer array (copy)."""
    bits = as_bits(payload)
    flat = np.array(samples, copy=True).ravel()
    pos = _positions(flat.size, offset, stride)
    if pos.size < bits.size:
        raise CapacityExceeded(int(pos.size), int(bits.size))
    pos = pos[:bits.size]
    flat[pos] = (flat[pos] & ~np.array(1, dtype=flat.dtype)) | bits.astype(flat.dtype)
    return flat.reshape(np.shape(samples))


def read_lsb(samples: np.ndarray, offset: int = 0, stride: int = 1) -> np.ndarray:
    flat = np.asarray(samples).ravel()
    pos = _positions(flat.size, offset, stride)
    return (flat[pos] & 1).astype(np.uint8)


def lsb_embed_bytes(carrier, frame: BitFrame, offset: int = 0, stride: int = 1) -> bytes:
    """Hide ``frame`` in the LSBs of ``carrier[offset::stride]``."""
    arr = np.frombuffer(bytes(carrier), dtype=np.uint8)
    return embed_lsb(arr, frame, offset, stride).tobytes()


def lsb_extract_bytes(carrier, offset: int = 0, stride: int = 1) -> str:
    return unframe_message(read_lsb(np.frombuffer(bytes(carrier), dtype=np.uint8), offset, stride))


# --- images -----------------------------------------------------------------

@dataclass(frozen=True)
class RasterImage:
    width: int
    height: int
    channels: int
    samples: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise DomainError(f"channels must be 1 or 3, got {self.channels}")
        s = np.asarray(self.samples, dtype=np.uint8).ravel()
        if s.size != self.width * self.height * self.channels:
            raise DomainError(
                f"{s.size} samples do not fill {self.width}x{self.height}x{self.channels}"
            )
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> "RasterImage":
        pixels = np.asarray(pixels, dtype=np.uint8)
        channels = 1 if pixels.ndim == 2 else pixels.shape[2]
        return cls(pixels.shape[1], pixels.shape[0], channels, pixels.ravel())

    def to_array(self) -> np.ndarray:
        shape = (self.height, self.width) if self.channels == 1 else (self.height, self.width, 3)
        return self.samples.reshape(shape)

    @classmethod
    def from_bytes(cls, data: bytes) -> "RasterImage":
        return cls(*formats.parse_netpbm(data))

    def to_bytes(self) -> bytes:
        return formats.format_netpbm(self.width, self.height, self.channels, self.samples)


def image_embed(img: RasterImage, frame, offset: int = 0, stride: int = 1) -> RasterImage:
    """Embed across all samples in raster order, RGB channels included."""
    return replace(img, samples=embed_lsb(img.samples, frame, offset, stride))


def image_extract(img: RasterImage, offset: int = 0, stride: int = 1) -> str:
    return unframe_message(read_lsb(img.samples, offset, stride))


# --- PCM audio --------------------------------------------------------------

@dataclass(frozen=True)
class PcmClip:
    sample_rate: int
    samples: np.ndarray
    wav: formats.WavFile | None = None  # source container, for chunk round trips

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise DomainError(f"sample_rate must be positive, got {self.sample_rate}")
        s = np.asarray(self.samples)
        if s.size and (s.min() < -32768 or s.max() > 32767):
            raise DomainError("PCM samples must fit in signed 16 bits")
        object.__setattr__(self, "samples", s.astype(np.int16).ravel())

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @classmethod
    def from_bytes(cls, data: bytes) -> "PcmClip":
        wav = formats.parse_wav(data)
        return cls(wav.sample_rate, wav.samples, wav)

    def to_bytes(self) -> bytes:
        wav = self.wav or formats.WavFile(self.sample_rate, self.samples)
        return formats.format_wav(replace(wav, sample_rate=self.sample_rate, samples=self.samples))


def pcm_embed(clip: PcmClip, frame, offset: int = 0, stride: int = 1) -> PcmClip:
    return replace(clip, samples=embed_lsb(clip.samples, frame, offset, stride))


def pcm_extract(clip: PcmClip, offset: int = 0, stride: int = 1) -> str:
    return unframe_message(read_lsb(clip.samples, offset, stride))


# --- float telemetry --------------------------------------------------------

@dataclass(frozen=True)
class FloatSeries:
    timestamps: np.ndarray
    values: np.ndarray  # shape (len(timestamps), arity)
    quantum: float = DEFAULT_QUANTUM
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != t.size:
            raise DomainError(f"values shape {v.shape} does not match {t.size} timestamps")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DomainError("timestamps must be strictly increasing")
        if not self.quantum > 0:
            raise DomainError(f"quantum must be positive, got {self.quantum}")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    @property
    def arity(self) -> int:
        return self.values.shape[1]

    def to_csv(self, precision: int | None = 6) -> str:
        names = list(self.names or [f"v{i + 1}" for i in range(self.arity)])
        rows = np.column_stack([self.timestamps, self.values])
        return formats.format_csv_table(["t", *names], rows, precision)

    @classmethod
    def from_csv(cls, text: str, quantum: float = DEFAULT_QUANTUM) -> "FloatSeries":
        header, table = formats.parse_csv_table(text, min_columns=2)
        names = tuple(header[1:]) if header else None
        try:
            return cls(table[:, 0], table[:, 1:], quantum, names)
        except DomainError as exc:
            raise MalformedCsv(str(exc)) from None


def _grid_index(values: np.ndarray, q: float) -> np.ndarray:
    return np.rint(values / q).astype(np.int64)


def float_embed(
    series: FloatSeries, frame, tolerance: float | None = None, offset: int = 0, stride: int = 1
) -> FloatSeries:
    """Quantise-then-parity embedding into the series values.

    Each selected value ``v`` becomes ``k * q`` where ``k`` is the integer
    nearest ``v / q`` having the parity of the message bit, so ``|v' - v| <= q``.
    Values outside the selected positions are untouched.

    Raises:
        QuantumTooCoarse: ``q`` exceeds the caller's ``tolerance``.
        CapacityExceeded: fewer selected scalars than frame bits.
        DomainError: a value too large for the grid index to stay in int32.
    """
    q = series.quantum
    if tolerance is not None and q > tolerance:
        raise QuantumTooCoarse(f"quantum {q} exceeds tolerated perturbation {tolerance}")
    bits = as_bits(frame)
    flat = series.values.ravel().copy()
    pos = _positions(flat.size, offset, stride)
    if pos.size < bits.size:
        raise CapacityExceeded(int(pos.size), int(bits.size), "series")
    pos = pos[:bits.size]
    chosen = flat[pos]
    if np.any(np.abs(chosen) >= q * 2**31):
        raise DomainError("value magnitude too large for the embedding quantum")
    scaled = chosen / q
    k = _grid_index(chosen, q)
    wrong = (k & 1) != bits
    step = np.where(scaled >= k, 1, -1)
    k = np.where(wrong, k + step, k)
    flat[pos] = k * q
    return replace(series, values=flat.reshape(series.values.shape))


def float_extract(series: FloatSeries, offset: int = 0, stride: int = 1) -> str:
    flat = series.values.ravel()
    pos = _positions(flat.size, offset, stride)
    bits = (_grid_index(flat[pos], series.quantum) & 1).astype(np.uint8)
    return unframe_message(bits)
