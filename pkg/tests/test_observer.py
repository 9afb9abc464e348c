import math

import numpy as np
import pytest

from stegabot.core import text_to_morse, morse_to_text
from stegabot.errors import DomainError, EventOrderViolated
from stegabot.motion import ForceField, RobotState, Trajectory2D, decode_trajectory, simulate
from stegabot.observer import (
    ObserverPose,
    SensorSpec,
    camera_spec,
    observe_timeline,
    observe_trajectory,
    pixel_resolution,
    preset,
    quantize,
    segments_intersect,
    visible,
)
from stegabot.timing import EventTimeline


def test_dashcam_resolution():
    # 2 * 10 * tan(65 deg) / 1920, worked by hand
    assert pixel_resolution(math.radians(130), 10, 1920) == pytest.approx(0.02234, abs=1e-5)
    assert pixel_resolution(math.radians(130), 10, 1920) == pytest.approx(20 * 2.1445069 / 1920, rel=1e-6)


def test_resolution_linear_in_distance():
    r1 = pixel_resolution(1.0, 5, 640)
    assert pixel_resolution(1.0, 10, 640) == pytest.approx(2 * r1)


@pytest.mark.parametrize("args", [(0, 1, 10), (math.pi, 1, 10), (1, 0, 10), (1, 1, 0)])
def test_resolution_domain(args):
    with pytest.raises(DomainError):
        pixel_resolution(*args)


def test_presets():
    rtk = preset("gps_rtk")
    assert (rtk.noise_sigma, rtk.rate) == (0.02, 5.0)
    assert preset("gps_direct").noise_sigma == 5.0
    cam = preset("camera_dashcam")
    assert cam.rate == 30.0
    assert cam.quantization == pixel_resolution(math.radians(130), 10, 1920)
    assert camera_spec(math.radians(130), 10, 1920) == cam
    assert preset("gps_rtk", seed=9).seed == 9
    with pytest.raises(DomainError):
        preset("sonar")


def test_spec_from_dict():
    s = SensorSpec.from_dict({"preset": "gps_dgps", "seed": 4})
    assert s.kind == "gps_dgps" and s.seed == 4 and s.noise_sigma == 0.4
    with pytest.raises(DomainError):
        SensorSpec(rate=0)
    with pytest.raises(DomainError):
        SensorSpec(kind="radar")


def test_identity_channel():
    t = np.linspace(0, 4, 401)
    traj = Trajectory2D(t, 0.3 * t, 10 * t)  # linear, so interpolation is exact
    out = observe_trajectory(traj, SensorSpec(rate=20.0))
    assert len(out) == 81
    assert np.allclose(out.x, 0.3 * out.t, atol=1e-9)
    assert np.allclose(out.y, 10 * out.t, atol=1e-9)


def test_quantize():
    assert np.allclose(quantize(np.array([0.014, 0.016]), 0.01), [0.01, 0.02])
    v = np.array([0.123])
    assert quantize(v, 0) is v


def test_noise_is_seeded():
    traj = Trajectory2D(np.arange(10.0), np.zeros(10), np.zeros(10))
    a = observe_trajectory(traj, SensorSpec(noise_sigma=1.0, seed=3, rate=1.0))
    b = observe_trajectory(traj, SensorSpec(noise_sigma=1.0, seed=3, rate=1.0))
    c = observe_trajectory(traj, SensorSpec(noise_sigma=1.0, seed=4, rate=1.0))
    assert np.array_equal(a.x, b.x) and not np.array_equal(a.x, c.x)


def test_rtk_recovers_direct_gps_does_not():
    traj = simulate(RobotState(0, 0, 0, 10), ForceField(), text_to_morse("SOS"))
    rtk = observe_trajectory(traj, preset("gps_rtk", seed=1))
    assert morse_to_text(decode_trajectory(rtk, 0.0)) == "SOS"
    gps = observe_trajectory(traj, preset("gps_direct", seed=1))
    try:
        got = morse_to_text(decode_trajectory(gps, 0.0))
    except Exception:
        got = None
    assert got != "SOS"


def test_dashcam_sees_the_drift():
    traj = simulate(RobotState(0, 0, 0, 10), ForceField(), text_to_morse("SOS"))
    cam = observe_trajectory(traj, preset("camera_dashcam"))
    assert morse_to_text(decode_trajectory(cam, 0.0)) == "SOS"


def test_timeline_jitter():
    tl = EventTimeline(np.arange(5) * 2.0, np.full(5, 0.5))
    out = observe_timeline(tl, 0.01, seed=1)
    assert np.array_equal(out.durations, tl.durations)
    assert 0 < np.max(np.abs(out.onsets - tl.onsets)) < 0.1
    assert np.array_equal(out.onsets, observe_timeline(tl, 0.01, seed=1).onsets)
    with pytest.raises(EventOrderViolated):
        observe_timeline(EventTimeline([0.0, 0.6], [0.5, 0.5]), 5.0, seed=0)
    with pytest.raises(DomainError):
        observe_timeline(tl, -1, seed=0)


POSE = ObserverPose(position=(0, 0), facing=0.0, half_angle=math.radians(30), max_range=20)


def test_visible_ahead():
    assert visible((10, 0), POSE)


def test_not_visible_behind_or_far_or_sideways():
    assert not visible((-10, 0), POSE)
    assert not visible((25, 0), POSE)
    assert not visible((5, 5), POSE)


def test_occluder_blocks():
    pose = ObserverPose((0, 0), 0.0, math.radians(30), 20, occluders=(((5, -1), (5, 1)),))
    assert not visible((10, 0), pose)
    assert visible((4, 0), pose)


def test_pose_from_dict():
    pose = ObserverPose.from_dict({"position": [0, 0], "facing": 0, "half_angle": 0.5, "max_range": 5,
                                   "occluders": [[[1, -1], [1, 1]]]})
    assert pose.occluders == (((1.0, -1.0), (1.0, 1.0)),)
    with pytest.raises(DomainError):
        ObserverPose((0, 0), 0, 0, 5)


def test_segments():
    assert segments_intersect((0, 0), (2, 2), (0, 2), (2, 0))
    assert not segments_intersect((0, 0), (1, 1), (2, 2), (3, 0))
    assert segments_intersect((0, 0), (2, 0), (1, 0), (1, 5))  # touching counts
    assert not segments_intersect((0, 0), (1, 0), (2, 0), (3, 0))
