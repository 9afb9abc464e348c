"""Morse hidden in the pauses between spoken utterances.

Every silence between two utterances carries one Morse symbol as an extra
delay on top of a normal pause. The receiver never sees the timeline
directly: it listens, turns audio into a volume envelope, finds speech
segments with a hysteresis detector and classifies the measured pauses.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import MorseSequence, Symbol
from .errors import (
    DomainError,
    EventOrderViolated,
    GapOutOfRange,
    InvalidMorseSequence,
    MalformedCsv,
    NotEnoughUtterances,
)
from .formats import parse_csv_table


@dataclass(frozen=True)
class EventTimeline:
    """Utterance onsets and durations in seconds."""

    onsets: np.ndarray
    durations: np.ndarray

    def __post_init__(self):
        on = np.asarray(self.onsets, dtype=float).ravel()
        du = np.asarray(self.durations, dtype=float).ravel()
        if on.size != du.size:
            raise DomainError(f"{on.size} onsets but {du.size} durations")
        if np.any(du < 0):
            raise DomainError("durations must be non-negative")
        if on.size > 1:
            if np.any(np.diff(on) <= 0):
                raise EventOrderViolated("onsets must be strictly increasing")
            if np.any(on[:-1] + du[:-1] > on[1:] + 1e-12):
                raise EventOrderViolated("utterances overlap")
        object.__setattr__(self, "onsets", on)
        object.__setattr__(self, "durations", du)

    def __len__(self):
        return self.onsets.size

    @property
    def ends(self) -> np.ndarray:
        return self.onsets + self.durations

    @property
    def gaps(self) -> np.ndarray:
        """Silence between consecutive utterances."""
        return self.onsets[1:] - self.ends[:-1]

    def to_csv(self, precision: int = 6) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["onset", "duration"])
        for o, d in zip(self.onsets, self.durations):
            w.writerow([f"{o:.{precision}f}", f"{d:.{precision}f}"])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "EventTimeline":
        _, table = parse_csv_table(text, min_columns=2)
        try:
            return cls(table[:, 0], table[:, 1])
        except DomainError as exc:
            raise MalformedCsv(str(exc)) from None


@dataclass(frozen=True)
class DelayCode:
    """Pause lengths in seconds. Message pauses are ``base_gap + extra``."""

    dot_extra: float = 0.100
    dash_extra: float = 0.200
    letter_extra: float = 0.400
    word_extra: float = 0.800
    base_gap: float = 0.500

    def __post_init__(self):
        levels = (0.0, self.dot_extra, self.dash_extra, self.letter_extra, self.word_extra)
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise DomainError(f"code levels must strictly increase from 0, got {levels}")
        if self.base_gap <= 0:
            raise DomainError("base_gap must be positive")

    def extra(self, symbol: Symbol) -> float:
        return {
            Symbol.DOT: self.dot_extra,
            Symbol.DASH: self.dash_extra,
            Symbol.LETTER_GAP: self.letter_extra,
            Symbol.WORD_GAP: self.word_extra,
        }[symbol]

    @property
    def thresholds(self) -> tuple[float, float, float, float]:
        """Midpoints between adjacent levels (none, dot, dash, letter, word)."""
        lv = (0.0, self.dot_extra, self.dash_extra, self.letter_extra, self.word_extra)
        return tuple((a + b) / 2 for a, b in zip(lv, lv[1:]))

    @property
    def upper_limit(self) -> float:
        """Largest extra delay still read as a word gap."""
        return self.word_extra + (self.word_extra - self.letter_extra) / 2


_LEVEL_SYMBOLS = (None, Symbol.DOT, Symbol.DASH, Symbol.LETTER_GAP, Symbol.WORD_GAP)


@dataclass(frozen=True)
class OnsetDetectorConfig:
    rate: float = 40.0
    high_threshold: float = 0.1
    low_threshold: float = 0.05
    min_speech: float = 0.15

    def __post_init__(self):
        if not self.low_threshold < self.high_threshold:
            raise DomainError("low_threshold must be below high_threshold")
        if self.min_speech <= 0 or self.rate <= 0:
            raise DomainError("rate and min_speech must be positive")

    @classmethod
    def from_json(cls, text: str) -> "OnsetDetectorConfig":
        return cls(**json.loads(text))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def delays_encode(
    utterances: Sequence[float],
    msg: MorseSequence,
    code: DelayCode = DelayCode(),
    start: float = 0.0,
) -> EventTimeline:
    """Lay utterances out in time so the pauses spell ``msg``.

    Pause ``k`` carries symbol ``k``; pauses beyond the message are normal.
    """
    durations = np.asarray(utterances, dtype=float).ravel()
    symbols = list(msg)
    if durations.size < len(symbols) + 1:
        raise NotEnoughUtterances(
            f"{len(symbols)} symbols need {len(symbols) + 1} utterances, got {durations.size}"
        )
    gaps = np.full(max(durations.size - 1, 0), code.base_gap)
    for k, sym in enumerate(symbols):
        gaps[k] += code.extra(sym)
    onsets = np.empty(durations.size)
    t = start
    for k, d in enumerate(durations):
        onsets[k] = t
        if k < gaps.size:
            t += d + gaps[k]
    return EventTimeline(onsets, durations)


def classify_gaps(timeline: EventTimeline, code: DelayCode = DelayCode()) -> list[Symbol | None]:
    """Symbol carried by each pause, ``None`` for a normal pause.

    Pauses shorter than ``base_gap + dot_extra / 2`` (including ones shorter
    than a normal pause) count as normal.
    """
    extras = timeline.gaps - code.base_gap
    too_long = extras > code.upper_limit
    if np.any(too_long):
        k = int(np.flatnonzero(too_long)[0])
        raise GapOutOfRange(
            f"pause {k} lasts {timeline.gaps[k]:.3f} s, beyond the longest code level"
        )
    levels = np.searchsorted(np.asarray(code.thresholds), extras, side="right")
    return [_LEVEL_SYMBOLS[i] for i in levels]


def delays_decode(timeline: EventTimeline, code: DelayCode = DelayCode()) -> MorseSequence:
    if len(timeline) < 2:
        raise DomainError("need at least two utterances to measure a pause")
    symbols = [s for s in classify_gaps(timeline, code) if s is not None]
    try:
        return MorseSequence(tuple(symbols))
    except InvalidMorseSequence as exc:
        raise GapOutOfRange(f"pause pattern is not valid Morse: {exc}") from None


def jitter_gaps(
    timeline: EventTimeline, sigma: float, rng: np.random.Generator
) -> EventTimeline:
    """Perturb each pause by independent Gaussian noise, keeping utterance lengths."""
    gaps = timeline.gaps + rng.normal(0.0, sigma, size=timeline.gaps.size) if sigma else timeline.gaps
    gaps = np.maximum(gaps, 1e-6)
    onsets = timeline.onsets[0] + np.concatenate(
        [[0.0], np.cumsum(timeline.durations[:-1] + gaps)]
    )
    return EventTimeline(onsets, timeline.durations)


# --- listening side ---------------------------------------------------------

def detect_onsets(envelope: Sequence[float], config: OnsetDetectorConfig = OnsetDetectorConfig()) -> EventTimeline:
    """Speech segments in a volume envelope sampled at ``config.rate``.

    Speech starts at the first sample above ``high_threshold`` and ends at the
    first sample below ``low_threshold``; values in between never split a
    segment. Segments shorter than ``min_speech`` are dropped.
    """
    env = np.asarray(envelope, dtype=float).ravel()
    if env.size == 0:
        raise DomainError("envelope is empty")
    onsets, durations = [], []
    start = None
    for i, v in enumerate(env):
        if start is None:
            if v > config.high_threshold:
                start = i
        elif v < config.low_threshold:
            onsets.append(start)
            durations.append(i - start)
            start = None
    if start is not None:
        onsets.append(start)
        durations.append(env.size - start)
    on = np.asarray(onsets, dtype=float) / config.rate
    du = np.asarray(durations, dtype=float) / config.rate
    keep = du >= config.min_speech - 1e-9
    return EventTimeline(on[keep], du[keep])


def render_envelope(
    timeline: EventTimeline, rate: float = 40.0, level: float = 0.5, tail: float = 0.5
) -> np.ndarray:
    """Rectangular volume envelope: ``level`` while speaking, 0 otherwise.

    Sample ``k`` stands for time ``k / rate``.
    """
    end = float(timeline.ends.max()) + tail if len(timeline) else tail
    t = np.arange(int(np.ceil(end * rate)) + 1) / rate
    env = np.zeros(t.size)
    for o, e in zip(timeline.onsets, timeline.ends):
        env[(t >= o) & (t < e)] = level
    return env


def rms_envelope(samples: np.ndarray, sample_rate: int, rate: float = 40.0, window: float = 0.025) -> np.ndarray:
    """RMS volume per hop of ``1 / rate`` seconds, as a fraction of full scale.

    Frame ``k`` covers ``window`` seconds starting at ``k / rate``; frames are
    processed in order, so audio can be fed block by block.
    """
    x = np.asarray(samples, dtype=float).ravel() / 32768.0
    hop = sample_rate / rate
    win = max(1, int(round(window * sample_rate)))
    n_frames = int(np.floor((x.size - 1) / hop)) + 1 if x.size else 0
    out = np.empty(n_frames)
    for k in range(n_frames):
        a = int(round(k * hop))
        seg = x[a:a + win]
        out[k] = np.sqrt(np.mean(seg * seg)) if seg.size else 0.0
    return out


def synthesize_speech(
    timeline: EventTimeline,
    sample_rate: int = 16000,
    amplitude: float = 0.5,
    tail: float = 0.5,
    seed: int = 0,
) -> np.ndarray:
    """Stand-in voice: a noisy 220 Hz buzz during each utterance, int16."""
    rng = np.random.default_rng(seed)
    end = float(timeline.ends.max()) + tail if len(timeline) else tail
    n = int(np.ceil(end * sample_rate))
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    for o, e in zip(timeline.onsets, timeline.ends):
        a, b = int(round(o * sample_rate)), int(round(e * sample_rate))
        seg = t[a:b]
        out[a:b] = np.sin(2 * np.pi * 220 * seg) + 0.3 * np.sin(2 * np.pi * 440 * seg)
        out[a:b] += 0.1 * rng.standard_normal(seg.size)
    out *= amplitude / max(np.max(np.abs(out)), 1e-12)
    return np.clip(np.round(out * 32767), -32768, 32767).astype(np.int16)


# --- on/off keying (gripper open/close) -------------------------------------

def keying_encode(msg: MorseSequence, unit: float = 0.5, start: float = 0.0) -> EventTimeline:
    """Classic Morse keying: marks of 1 or 2 units, pauses of 1, 3 or 7 units.

    Used for mechanical signals such as a gripper closing, where the mark
    length itself is visible.
    """
    onsets, durations = [], []
    t = start
    pending_gap = 0.0
    for sym in msg:
        if sym is Symbol.LETTER_GAP:
            pending_gap = 3 * unit
            continue
        if sym is Symbol.WORD_GAP:
            pending_gap = 7 * unit
            continue
        if onsets:
            t += pending_gap or unit
        pending_gap = 0.0
        d = unit if sym is Symbol.DOT else 2 * unit
        onsets.append(t)
        durations.append(d)
        t += d
    return EventTimeline(onsets, durations)


def keying_decode(timeline: EventTimeline, unit: float = 0.5) -> MorseSequence:
    symbols: list[Symbol] = []
    for k, d in enumerate(timeline.durations):
        if k:
            gap = timeline.gaps[k - 1]
            if gap >= 5 * unit:
                symbols.append(Symbol.WORD_GAP)
            elif gap >= 2 * unit:
                symbols.append(Symbol.LETTER_GAP)
        symbols.append(Symbol.DOT if d < 1.5 * unit else Symbol.DASH)
    return MorseSequence(tuple(symbols))
