"""Rebuilds the five embeddings of the robot user study as synthetic assets.

A socially assistive robot hides an emergency message five ways: gripper
clicks in Morse, LSBs of its face image, LSBs of logged arm angles, pauses
between utterances, and LSBs of its "hello" WAV. :func:`run_study` builds each
cover, embeds, recovers, and checks perturbation bounds. Nothing here touches
the filesystem; the CLI writes the returned files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import frame_message, morse_to_text, text_to_morse
from .lsb import FloatSeries, PcmClip, RasterImage, float_embed, float_extract, image_embed, image_extract, pcm_embed, pcm_extract
from .timing import (
    DelayCode,
    EventTimeline,
    delays_decode,
    delays_encode,
    detect_onsets,
    keying_decode,
    keying_encode,
    rms_envelope,
    synthesize_speech,
)

LONG_MESSAGE = "SOS! Stacey needs your help!"
SHORT_MESSAGE = "SOS"


def face_image(size: int = 64) -> RasterImage:
    """Cartoon face shown on the robot's screen, 8-bit grey."""
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1) * 2 - 1
    img = np.full((size, size), 40.0)
    r = np.hypot(xx, yy)
    img[r < 0.9] = 190.0
    img += 25.0 * (1 - np.clip(r, 0, 1)) * (r < 0.9)  # soft shading
    for ex in (-0.35, 0.35):
        img[np.hypot(xx - ex, yy + 0.25) < 0.12] = 20.0
    mouth = (np.abs(np.hypot(xx, yy + 0.1) - 0.5) < 0.06) & (yy > 0.15)
    img[mouth] = 60.0
    return RasterImage.from_array(np.rint(img).astype(np.uint8))


def hello_clip(sample_rate: int = 16000, duration: float = 1.0) -> PcmClip:
    """A one-second voiced "hello"-like sound: two vowels on a 140 Hz glottal pitch."""
    t = np.arange(int(sample_rate * duration)) / sample_rate
    f0 = 140 + 20 * np.sin(2 * np.pi * 1.5 * t)
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    voice = np.zeros_like(t)
    for h in range(1, 16):
        # formants shift from /e/ to /o/ halfway through
        formant = np.where(t < 0.45, 530, 450)
        formant2 = np.where(t < 0.45, 1840, 800)
        freq = h * f0
        gain = np.exp(-((freq - formant) / 180) ** 2) + 0.6 * np.exp(-((freq - formant2) / 250) ** 2)
        voice += gain * np.sin(h * phase) / h
    env = np.clip(t / 0.05, 0, 1) * np.clip((duration - t) / 0.15, 0, 1)
    env *= np.where((t > 0.38) & (t < 0.46), 0.35, 1.0)  # the "l"
    voice *= env
    voice *= 0.45 / np.max(np.abs(voice))
    return PcmClip(sample_rate, np.round(voice * 32767).astype(np.int16))


def greeting_motion(rate: float = 30.0, duration: float = 2.0) -> FloatSeries:
    """Arm raise and wave: six joint angles in radians."""
    t = np.arange(int(round(rate * duration)) + 1) / rate
    raise_ = 0.5 * (1 - np.cos(np.pi * np.clip(t / 0.8, 0, 1)))
    wave = np.sin(2 * np.pi * 1.2 * np.clip(t - 0.8, 0, None))
    joints = np.column_stack([
        0.10 + 1.40 * raise_,           # shoulder pitch
        -0.20 + 0.15 * raise_,          # shoulder roll
        0.05 * np.sin(2 * np.pi * 0.5 * t),  # upper-arm yaw
        0.30 + 0.90 * raise_ + 0.35 * wave * raise_,  # elbow
        -0.40 * wave * raise_,          # wrist yaw
        0.25 * raise_,                  # wrist pitch
    ])
    names = ("shoulder_pitch", "shoulder_roll", "upper_arm_yaw", "elbow", "wrist_yaw", "wrist_pitch")
    return FloatSeries(t, joints, 1e-4, names)


@dataclass
class StudyCheck:
    name: str
    carrier: str
    message: str
    recovered: str
    bound: str
    max_perturbation: float
    passed: bool

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (f"{mark} {self.name:<18} {self.carrier:<28} recovered={self.recovered!r} "
                f"max_perturbation={self.max_perturbation:.6g} ({self.bound})")


@dataclass
class StudyResult:
    checks: list[StudyCheck] = field(default_factory=list)
    files: dict[str, bytes] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return len(self.checks) == 5 and all(c.passed for c in self.checks)

    def log(self) -> str:
        lines = [c.line() for c in self.checks]
        lines.append(f"{'ALL PASS' if self.passed else 'FAILURES'}: {sum(c.passed for c in self.checks)}/5 embeddings verified")
        return "\n".join(lines) + "\n"


def run_study(seed: int = 0, precision: int = 6) -> StudyResult:
    res = StudyResult()
    sos = text_to_morse(SHORT_MESSAGE)

    # (1) gripper opens and closes in Morse, visible to the naked eye
    gripper = keying_encode(sos, unit=0.5)
    res.files["gripper_schedule.csv"] = gripper.to_csv().encode()
    reread = EventTimeline.from_csv(gripper.to_csv())
    got = morse_to_text(keying_decode(reread, unit=0.5))
    res.checks.append(StudyCheck("gripper_morse", "gripper open/close schedule", SHORT_MESSAGE, got,
                                 "mark lengths 0.5/1.0 s", 0.0, got == SHORT_MESSAGE))

    # (2) robot face image, LSB
    face = face_image()
    face_stego = image_embed(face, frame_message(LONG_MESSAGE))
    res.files["face_cover.pgm"] = face.to_bytes()
    res.files["face_stego.pgm"] = face_stego.to_bytes()
    got = image_extract(RasterImage.from_bytes(res.files["face_stego.pgm"]))
    dev = int(np.max(np.abs(face_stego.samples.astype(int) - face.samples.astype(int))))
    res.checks.append(StudyCheck("face_image_lsb", "64x64 PGM face", LONG_MESSAGE, got,
                                 "<= 1 intensity step", dev, got == LONG_MESSAGE and dev <= 1))

    # (3) arm angles logged as floats, quantise-then-parity
    arm = greeting_motion()
    arm_stego = float_embed(arm, frame_message(SHORT_MESSAGE))
    res.files["joints_cover.csv"] = arm.to_csv(precision).encode()
    res.files["joints_stego.csv"] = arm_stego.to_csv(precision).encode()
    reread = FloatSeries.from_csv(res.files["joints_stego.csv"].decode(), arm.quantum)
    got = float_extract(reread)
    dev = float(np.max(np.abs(arm_stego.values - arm.values)))
    res.checks.append(StudyCheck("joint_float_lsb", "6-joint CSV at 30 Hz", SHORT_MESSAGE, got,
                                 f"<= q = {arm.quantum:g} rad", dev,
                                 got == SHORT_MESSAGE and dev <= arm.quantum * (1 + 1e-9)))

    # (4) pauses between utterances, read back from audio
    code = DelayCode()
    rng = np.random.default_rng(seed)
    utterances = rng.uniform(0.3, 0.6, size=len(sos) + 1)
    speech = delays_encode(utterances, sos, code)
    res.files["speech_timeline.csv"] = speech.to_csv(9).encode()
    pcm = synthesize_speech(speech, 16000, seed=seed)
    res.files["speech.wav"] = PcmClip(16000, pcm).to_bytes()
    heard = detect_onsets(rms_envelope(PcmClip.from_bytes(res.files["speech.wav"]).samples, 16000))
    got = morse_to_text(delays_decode(heard, code))
    extras = speech.gaps - code.base_gap
    expected = np.array([code.extra(s) for s in sos])
    dev = float(np.max(np.abs(extras - expected)))
    res.checks.append(StudyCheck("speech_delay_morse", f"{len(speech)}-utterance timeline + audio",
                                 SHORT_MESSAGE, got, "pauses exactly at code levels", dev,
                                 got == SHORT_MESSAGE and len(speech) == 12 and dev < 1e-9))

    # (5) the "hello" WAV, LSB
    hello = hello_clip()
    hello_stego = pcm_embed(hello, frame_message(LONG_MESSAGE))
    res.files["hello_cover.wav"] = hello.to_bytes()
    res.files["hello_stego.wav"] = hello_stego.to_bytes()
    got = pcm_extract(PcmClip.from_bytes(res.files["hello_stego.wav"]))
    dev = int(np.max(np.abs(hello_stego.samples.astype(int) - hello.samples.astype(int))))
    res.checks.append(StudyCheck("hello_wav_lsb", "1 s 16 kHz mono WAV", LONG_MESSAGE, got,
                                 "<= 1 PCM LSB", dev, got == LONG_MESSAGE and dev <= 1))

    res.files["verification.log"] = res.log().encode()
    return res
