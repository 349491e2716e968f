import dataclasses

import numpy as np
import pytest

from xror.errors import AllZeroDeltas, InvalidRecording, TooFewFrames, UnknownColumn, WrongSchema
from xror.model import (
    BEAT_SABER_COLUMNS,
    TILT_BRUSH_COLUMNS,
    EventKind,
    EventStream,
    FrameStream,
    Recording,
    RecordingInfo,
    check_structure,
    column_index,
    device_poses,
    frame_schema_name,
    median_sample_rate,
    recording_duration,
)
from xror.pipeline.synth import SynthProfile, synth
from xror.validation import ValidationPolicy, validate_recording


@pytest.fixture(scope="module")
def bs():
    return synth(SynthProfile(users=1, duration_sec=5))[0]


def _with_frames(rec, data):
    return dataclasses.replace(rec, frames=FrameStream(rec.frames.columns, data))


def test_schemas():
    assert len(BEAT_SABER_COLUMNS) == 22 and len(TILT_BRUSH_COLUMNS) == 9
    assert frame_schema_name(BEAT_SABER_COLUMNS) == "beatsaber"
    assert frame_schema_name(TILT_BRUSH_COLUMNS) == "tiltbrush"
    with pytest.raises(WrongSchema):
        frame_schema_name(("t", "x"))
    assert column_index(BEAT_SABER_COLUMNS, "left_qw") == 14
    with pytest.raises(UnknownColumn):
        column_index(BEAT_SABER_COLUMNS, "elbow_px")


def test_stream_is_read_only_float32_copy():
    src = np.zeros((2, 9), np.float64)
    fs = FrameStream(TILT_BRUSH_COLUMNS, src)
    src[0, 0] = 5
    assert fs.data.dtype == np.float32 and fs.data[0, 0] == 0
    with pytest.raises(ValueError):
        fs.data[0, 0] = 1


def test_stream_equality_is_bitwise():
    a = np.full((1, 9), np.nan, np.float32)
    b = a.copy()
    b.view(np.uint32)[0, 0] ^= 1  # different NaN payload
    assert FrameStream(TILT_BRUSH_COLUMNS, a) == FrameStream(TILT_BRUSH_COLUMNS, a.copy())
    assert FrameStream(TILT_BRUSH_COLUMNS, a) != FrameStream(TILT_BRUSH_COLUMNS, b)
    z = np.zeros((1, 9), np.float32)
    assert FrameStream(TILT_BRUSH_COLUMNS, z) != FrameStream(TILT_BRUSH_COLUMNS, -z)


def test_duration_and_rate(bs):
    assert recording_duration(bs) == pytest.approx(5 - 1 / 90, abs=1e-4)
    assert median_sample_rate(bs) == pytest.approx(90, rel=1e-3)
    with pytest.raises(TooFewFrames):
        median_sample_rate(_with_frames(bs, bs.frames.data[:2]))
    frozen = bs.frames.data[:5].copy()
    frozen[:, 0] = 1.0
    with pytest.raises(AllZeroDeltas):
        median_sample_rate(_with_frames(bs, frozen))


def test_device_poses(bs):
    poses = device_poses(bs.frames, "right")
    assert poses.shape == (bs.frames.n_rows, 7)
    assert np.array_equal(poses, bs.frames.data[:, 15:22])


def test_check_structure(bs):
    check_structure(bs)
    dup = dataclasses.replace(bs, events=bs.events + (EventStream(EventKind.NOTE, np.zeros((0, 7))),))
    with pytest.raises(InvalidRecording):
        check_structure(dup)
    with pytest.raises(InvalidRecording):
        check_structure(dataclasses.replace(bs, info=dataclasses.replace(bs.info, user_id="")))


def test_event_lookup(bs):
    assert bs.event_stream(EventKind.NOTE).n_cols == 7
    assert bs.event_stream("STROKE") is None


def test_validation_accepts_synthetic(bs):
    report = validate_recording(bs)
    assert report.verdict == "ACCEPT", report.to_dict()


def test_validation_nan_and_short(bs):
    data = bs.frames.data.copy()
    data[10, 2] = np.nan
    assert "NON_FINITE" in validate_recording(_with_frames(bs, data)).reasons
    short = _with_frames(bs, bs.frames.data[:45])  # 0.5 s at 90 Hz
    assert "TOO_SHORT" in validate_recording(short).reasons
    assert "TOO_FEW_FRAMES" in validate_recording(_with_frames(bs, bs.frames.data[:20])).reasons
    assert "EMPTY" in validate_recording(_with_frames(bs, bs.frames.data[:0])).reasons


def test_validation_quaternion_time_and_rate(bs):
    data = bs.frames.data.copy()
    data[3, 4:8] *= 1.5
    assert "QUAT_NORM" in validate_recording(_with_frames(bs, data)).reasons
    data = bs.frames.data.copy()
    data[7, 0] = data[5, 0]
    assert "MONOTONE_TIME" in validate_recording(_with_frames(bs, data)).reasons
    slow = bs.frames.data.copy()
    slow[:, 0] *= 10  # 9 Hz
    assert "SAMPLE_RATE" in validate_recording(_with_frames(bs, slow)).reasons


def test_validation_policy_is_configurable(bs):
    strict = ValidationPolicy(min_duration_sec=10.0)
    assert "TOO_SHORT" in validate_recording(bs, strict).reasons


def test_validation_timestamp_window(bs):
    old = dataclasses.replace(bs, info=dataclasses.replace(bs.info, timestamp=0))
    assert "TIMESTAMP_RANGE" in validate_recording(old).reasons


def test_validation_caps_repeated_codes(bs):
    data = bs.frames.data.copy()
    data[:, 4:8] *= 2
    report = validate_recording(_with_frames(bs, data))
    assert 0 < sum(v.code == "QUAT_NORM" for v in report.violations) <= 20


def test_recording_info_normalizes_types():
    info = RecordingInfo(user_id="a", app="x", settings={"h": 1}, devices=[])
    assert info.settings == {"h": 1.0} and isinstance(info.settings["h"], float)
    assert info.devices == ()


def test_recording_default_provenance():
    rec = Recording(RecordingInfo("a", "x"), FrameStream(TILT_BRUSH_COLUMNS, np.zeros((0, 9))))
    assert rec.provenance.source_format.value == "XROR"
