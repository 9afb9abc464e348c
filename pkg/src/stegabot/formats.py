"""Byte-level codecs for carrier files: binary Netpbm, RIFF/WAV, CSV series.

These work on ``bytes``/``str`` only; opening files is left to the CLI.
"""

from __future__ import annotations

import csv
import io
import re
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedCsv, MalformedImage, MalformedWav

# --- Netpbm P5/P6 ------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def parse_netpbm(data: bytes):
    """Decode a binary PGM (P5) or PPM (P6) with maxval <= 255.

    Returns ``(width, height, channels, samples)`` with samples a flat uint8
    array in row-major, channel-interleaved order.
    """
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise MalformedImage("truncated Netpbm header")
        fields.append(m.group(1))
        pos = m.end()
    magic = fields[0]
    if magic not in (b"P5", b"P6"):
        raise MalformedImage(f"unsupported Netpbm magic {magic!r}; need P5 or P6")
    try:
        width, height, maxval = (int(x) for x in fields[1:])
    except ValueError:
        raise MalformedImage("non-numeric Netpbm header field") from None
    if width <= 0 or height <= 0 or not 0 < maxval <= 255:
        raise MalformedImage(f"unsupported geometry {width}x{height} maxval {maxval}")
    if pos >= len(data) or data[pos:pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise MalformedImage("missing whitespace after Netpbm header")
    pos += 1
    channels = 1 if magic == b"P5" else 3
    n = width * height * channels
    raster = data[pos:pos + n]
    if len(raster) != n:
        raise MalformedImage(f"raster has {len(raster)} bytes, expected {n}")
    return width, height, channels, np.frombuffer(raster, dtype=np.uint8).copy()


def format_netpbm(width: int, height: int, channels: int, samples) -> bytes:
    magic = {1: b"P5", 3: b"P6"}[channels]
    header = b"%s\n%d %d\n255\n" % (magic, width, height)
    return header + np.asarray(samples, dtype=np.uint8).tobytes()


# --- WAV -------------------------------------------------------------------

@dataclass
class WavFile:
    """A mono 16-bit PCM WAV plus any extra chunks, kept verbatim."""

    sample_rate: int
    samples: np.ndarray
    fmt_chunk: bytes = b""
    # (chunk id, raw body) for everything in original order; "data" marks
    # where the sample data goes on write
    chunks: list[tuple[bytes, bytes]] = field(default_factory=list)


def _iter_chunks(data: bytes, start: int):
    pos = start
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8:pos + 8 + size]
        if len(body) != size:
            raise MalformedWav(f"chunk {cid!r} declares {size} bytes, {len(body)} present")
        yield cid, body
        pos += 8 + size + (size & 1)


def parse_wav(data: bytes) -> WavFile:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWav("not a RIFF/WAVE file")
    fmt = None
    samples = None
    chunks = []
    for cid, body in _iter_chunks(data, 12):
        if cid == b"fmt ":
            if len(body) < 16:
                raise MalformedWav("fmt chunk too short")
            tag, nch, rate, _, align, bits = struct.unpack_from("<HHIIHH", body)
            if tag != 1 or nch != 1 or bits != 16:
                raise MalformedWav(
                    f"need 16-bit mono PCM, got format {tag}, {nch} channels, {bits} bits"
                )
            fmt = (rate, body)
            chunks.append((cid, body))
        elif cid == b"data":
            if fmt is None:
                raise MalformedWav("data chunk precedes fmt chunk")
            if len(body) % 2:
                raise MalformedWav("odd data chunk length for 16-bit samples")
            samples = np.frombuffer(body, dtype="<i2").astype(np.int16)
            chunks.append((cid, b""))
        else:
            chunks.append((cid, body))
    if fmt is None:
        raise MalformedWav("missing fmt chunk")
    if samples is None:
        raise MalformedWav("missing data chunk")
    return WavFile(sample_rate=fmt[0], samples=samples, fmt_chunk=fmt[1], chunks=chunks)


def _fmt_body(rate: int) -> bytes:
    return struct.pack("<HHIIHH", 1, 1, rate, rate * 2, 2, 16)


def format_wav(wav: WavFile) -> bytes:
    chunks = wav.chunks or [(b"fmt ", _fmt_body(wav.sample_rate)), (b"data", b"")]
    out = io.BytesIO()
    for cid, body in chunks:
        if cid == b"data":
            body = np.asarray(wav.samples, dtype="<i2").tobytes()
        elif cid == b"fmt " and not body:
            body = _fmt_body(wav.sample_rate)
        out.write(struct.pack("<4sI", cid, len(body)))
        out.write(body)
        if len(body) & 1:
            out.write(b"\x00")
    payload = out.getvalue()
    return b"RIFF" + struct.pack("<I", 4 + len(payload)) + b"WAVE" + payload


# --- CSV ---------------------------------------------------------------------

def parse_csv_table(text: str, min_columns: int = 1) -> tuple[list[str] | None, np.ndarray]:
    """Numeric CSV with an optional header row. Returns ``(header, rows)``."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise MalformedCsv("empty CSV")
    header = None
    try:
        float(rows[0][0])
    except ValueError:
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise MalformedCsv("CSV has a header but no data rows")
    width = len(rows[0])
    if width < min_columns:
        raise MalformedCsv(f"need at least {min_columns} columns, found {width}")
    try:
        table = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise MalformedCsv(f"non-numeric CSV cell: {exc}") from None
    except Exception:
        raise MalformedCsv("ragged CSV rows") from None
    if table.ndim != 2 or table.shape[1] != width:
        raise MalformedCsv("ragged CSV rows")
    return header, table


def format_csv_table(header: list[str], rows, precision: int | None = None) -> str:
    """Fixed-point text with ``precision`` decimals (``repr`` when None)."""
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    fmt = repr if precision is None else (lambda v: f"{v:.{precision}f}")
    for row in np.asarray(rows, dtype=float):
        out.write(",".join(fmt(float(v)) for v in row) + "\n")
    return out.getvalue()
