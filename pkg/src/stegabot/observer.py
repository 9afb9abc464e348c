"""How a receiver actually sees a signal: through a sensor, from somewhere.

Sensors resample, add noise and quantise. Visibility is anisotropic: an
observer only sees what lies inside its viewing cone, within range and not
behind an occluder, so a sender can aim a physical message at one viewer.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DomainError
from .motion import Trajectory2D
from .timing import EventTimeline

SENSOR_KINDS = ("gps_direct", "gps_dgps", "gps_rtk", "camera", "audio_onset", "custom")


def pixel_resolution(fov: float, distance: float, horizontal_pixels: int) -> float:
    """Metres of sideways motion that move the image by one pixel.

    Pinhole camera: the view at ``distance`` is ``2 d tan(fov / 2)`` wide and
    is split over ``horizontal_pixels`` columns.
    """
    if not 0 < fov < math.pi:
        raise DomainError(f"field of view must lie in (0, pi) rad, got {fov}")
    if not distance > 0:
        raise DomainError(f"distance must be positive, got {distance}")
    if horizontal_pixels < 1:
        raise DomainError(f"need at least one pixel, got {horizontal_pixels}")
    return 2.0 * distance * math.tan(fov / 2.0) / horizontal_pixels


@dataclass(frozen=True)
class SensorSpec:
    kind: str = "custom"
    rate: float = 10.0  # Hz
    noise_sigma: float = 0.0  # same units as the observed quantity
    quantization: float = 0.0  # grid step, 0 = none
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SENSOR_KINDS:
            raise DomainError(f"unknown sensor kind {self.kind!r}")
        if not self.rate > 0:
            raise DomainError(f"rate must be positive, got {self.rate}")
        if self.noise_sigma < 0 or self.quantization < 0:
            raise DomainError("noise_sigma and quantization must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "SensorSpec":
        d = dict(d)
        if "preset" in d:
            base = preset(d.pop("preset"))
            return replace(base, **d)
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


# GPS: midpoints of the quoted accuracy ranges, lower end of the 5-10 Hz rate
_CAMERA_RES = pixel_resolution(math.radians(130), 10.0, 1920)
PRESETS = {
    "gps_direct": SensorSpec("gps_direct", rate=5.0, noise_sigma=5.0),
    "gps_dgps": SensorSpec("gps_dgps", rate=5.0, noise_sigma=0.4),
    "gps_rtk": SensorSpec("gps_rtk", rate=5.0, noise_sigma=0.02),
    "camera_dashcam": SensorSpec("camera", rate=30.0, quantization=_CAMERA_RES),
    "camera_markers": SensorSpec("camera", rate=30.0, quantization=0.001),
    "audio_onset": SensorSpec("audio_onset", rate=40.0),
}


def preset(name: str, seed: int | None = None) -> SensorSpec:
    try:
        spec = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown sensor preset {name!r}; choose from {sorted(PRESETS)}") from None
    return spec if seed is None else replace(spec, seed=seed)


def camera_spec(fov: float, distance: float, horizontal_pixels: int, rate: float = 30.0, seed: int = 0) -> SensorSpec:
    return SensorSpec("camera", rate, 0.0, pixel_resolution(fov, distance, horizontal_pixels), seed)


def quantize(values: np.ndarray, step: float) -> np.ndarray:
    if step <= 0:
        return values
    return np.rint(values / step) * step


def observe_trajectory(traj: Trajectory2D, spec: SensorSpec) -> Trajectory2D:
    """Sample ``traj`` as ``spec`` would: resample, add noise, quantise.

    Samples fall at ``t0 + k / rate`` up to the last input time; positions
    between inputs are linearly interpolated. Noise is independent per axis
    and fully determined by ``spec.seed``.
    """
    if len(traj) == 0:
        raise DomainError("trajectory is empty")
    t0, t1 = traj.t[0], traj.t[-1]
    n = int(math.floor((t1 - t0) * spec.rate + 1e-9)) + 1
    t = t0 + np.arange(n) / spec.rate
    x = np.interp(t, traj.t, traj.x)
    y = np.interp(t, traj.t, traj.y)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed & 0xFFFFFFFFFFFFFFFF)
        noise = rng.normal(0.0, spec.noise_sigma, size=(n, 2))
        x = x + noise[:, 0]
        y = y + noise[:, 1]
    return Trajectory2D(t, quantize(x, spec.quantization), quantize(y, spec.quantization))


def observe_timeline(timeline: EventTimeline, jitter_sigma: float, seed: int) -> EventTimeline:
    """Shift each onset by seeded Gaussian jitter, durations unchanged.

    Raises:
        EventOrderViolated: the jitter would reorder or overlap utterances.
    """
    if jitter_sigma < 0:
        raise DomainError(f"jitter_sigma must be >= 0, got {jitter_sigma}")
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    onsets = timeline.onsets + rng.normal(0.0, jitter_sigma, size=len(timeline))
    return EventTimeline(onsets, timeline.durations)


# --- perspective ----------------------------------------------------------------

Point = tuple[float, float]
Segment = tuple[Point, Point]


@dataclass(frozen=True)
class ObserverPose:
    position: Point
    facing: float  # radians from +x
    half_angle: float
    max_range: float
    occluders: tuple[Segment, ...] = field(default=())

    def __post_init__(self):
        if not 0 < self.half_angle <= math.pi:
            raise DomainError(f"half_angle must lie in (0, pi], got {self.half_angle}")
        if not self.max_range > 0:
            raise DomainError(f"max_range must be positive, got {self.max_range}")
        occ = tuple((tuple(map(float, a)), tuple(map(float, b))) for a, b in self.occluders)
        object.__setattr__(self, "position", tuple(map(float, self.position)))
        object.__setattr__(self, "occluders", occ)

    @classmethod
    def from_dict(cls, d: dict) -> "ObserverPose":
        return cls(
            position=tuple(d["position"]),
            facing=float(d["facing"]),
            half_angle=float(d["half_angle"]),
            max_range=float(d["max_range"]),
            occluders=tuple(tuple(map(tuple, s)) for s in d.get("occluders", [])),
        )


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    return (min(a[0], b[0]) - 1e-12 <= p[0] <= max(a[0], b[0]) + 1e-12
            and min(a[1], b[1]) - 1e-12 <= p[1] <= max(a[1], b[1]) + 1e-12)


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Closed-segment intersection; touching counts."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0:
        return True
    return (
        (d1 == 0 and _on_segment(q1, q2, p1))
        or (d2 == 0 and _on_segment(q1, q2, p2))
        or (d3 == 0 and _on_segment(p1, p2, q1))
        or (d4 == 0 and _on_segment(p1, p2, q2))
    )


def visible(sender: Sequence[float], pose: ObserverPose) -> bool:
    """Whether ``pose`` can see a sender standing at ``sender``."""
    sx, sy = float(sender[0]), float(sender[1])
    ox, oy = pose.position
    dx, dy = sx - ox, sy - oy
    dist = math.hypot(dx, dy)
    if dist > pose.max_range:
        return False
    if dist > 0:
        bearing = math.atan2(dy, dx) - pose.facing
        off_axis = abs(math.atan2(math.sin(bearing), math.cos(bearing)))
        if off_axis > pose.half_angle + 1e-12:
            return False
    return not any(segments_intersect((ox, oy), (sx, sy), a, b) for a, b in pose.occluders)
