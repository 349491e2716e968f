"""Deterministic synthetic corpora for benchmarks and tests.

Position channels are a rest offset plus three sinusoids (0.3, 0.1, 0.03 m,
frequencies in [0.2, 4] Hz) plus 0.5 mm Gaussian jitter. Orientations slerp
through random unit-quaternion keyframes placed once per second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BadProfile
from ..model import (
    BEAT_SABER_COLUMNS,
    BEAT_SABER_DEVICES,
    TILT_BRUSH_COLUMNS,
    Device,
    DeviceRole,
    EventKind,
    EventStream,
    FrameStream,
    Provenance,
    Recording,
    RecordingInfo,
    SourceFormat,
)
from ..rng import SplitMix64

AMPLITUDES = (0.3, 0.1, 0.03)
FREQ_RANGE = (0.2, 4.0)
JITTER_SIGMA = 0.0005
NOTE_RATE_HZ = 2.0

# 2017-11-01 .. 2023-04-15, UTC seconds
_TS_LO = 1509494400
_TS_HI = 1681516800

_REST = {
    "head": (0.0, 1.7, 0.0),
    "left": (-0.25, 1.1, 0.35),
    "right": (0.25, 1.1, 0.35),
    "brush": (0.1, 1.3, 0.5),
}

_HMDS = ("Oculus Quest 2", "Valve Index", "HTC Vive", "Oculus Rift S", "Pico 4")
_CONTROLLERS = ("Oculus Touch", "Knuckles", "Vive Wand", "Pico Controller")
_DIFFICULTIES = ("Easy", "Normal", "Hard", "Expert", "ExpertPlus")
_ENVIRONMENTS = ("DefaultEnvironment", "NiceEnvironment", "BigMirrorEnvironment")


@dataclass(frozen=True)
class SynthProfile:
    app: str = "beatsaber"  # or "tiltbrush"
    seed: int = 42
    duration_sec: float = 90.0
    fps: float = 90.0
    users: int = 100
    recs_per_user: int = 1
    strokes: int = 50

    def check(self) -> None:
        if self.app not in ("beatsaber", "tiltbrush"):
            raise BadProfile(f"unknown app {self.app!r}")
        if not 60 <= self.fps <= 144:
            raise BadProfile(f"fps {self.fps} outside [60, 144]")
        if not self.duration_sec > 0:
            raise BadProfile("duration must be positive")
        if self.users < 0 or self.recs_per_user < 0:
            raise BadProfile("negative corpus size")
        if self.app == "tiltbrush" and self.strokes < 0:
            raise BadProfile("negative stroke count")


PROFILES = {
    "beatsaber-default": SynthProfile(),
    "tiltbrush-default": SynthProfile(
        app="tiltbrush", duration_sec=120.0, users=20, strokes=50
    ),
}


def profile_by_name(name: str, **overrides) -> SynthProfile:
    try:
        base = PROFILES[name]
    except KeyError:
        raise BadProfile(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
    fields = {k: v for k, v in overrides.items() if v is not None}
    return SynthProfile(**{**base.__dict__, **fields})


def frame_count(profile: SynthProfile) -> int:
    return int(round(profile.duration_sec * profile.fps))


def random_unit_quaternions(rng: SplitMix64, n: int) -> np.ndarray:
    q = rng.normal_array(4 * n).reshape(n, 4)
    norms = np.linalg.norm(q, axis=1, keepdims=True)
    # a zero draw is astronomically unlikely but must not divide by zero
    norms[norms == 0] = 1.0
    return q / norms


def slerp(q0: np.ndarray, q1: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise spherical interpolation; inputs are unit (x, y, z, w)."""
    dot = np.sum(q0 * q1, axis=1)
    q1 = np.where(dot[:, None] < 0, -q1, q1)
    dot = np.abs(dot)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    sin_t = np.sin(theta)
    small = sin_t < 1e-9
    safe = np.where(small, 1.0, sin_t)
    w0 = np.where(small, 1.0 - u, np.sin((1.0 - u) * theta) / safe)
    w1 = np.where(small, u, np.sin(u * theta) / safe)
    out = w0[:, None] * q0 + w1[:, None] * q1
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def _orientation_track(rng: SplitMix64, t: np.ndarray) -> np.ndarray:
    n_keys = int(math.floor(float(t[-1]))) + 2 if t.size else 2
    keys = random_unit_quaternions(rng, n_keys)
    for i in range(1, n_keys):
        if np.dot(keys[i - 1], keys[i]) < 0:
            keys[i] = -keys[i]
    seg = np.minimum(np.floor(t).astype(np.int64), n_keys - 2)
    return slerp(keys[seg], keys[seg + 1], t - seg)


def _position_track(rng: SplitMix64, t: np.ndarray, rest) -> np.ndarray:
    out = np.empty((t.size, 3))
    for axis in range(3):
        x = np.full(t.size, rest[axis], dtype=np.float64)
        for amp in AMPLITUDES:
            f = rng.uniform(*FREQ_RANGE)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            x += amp * np.sin(2.0 * math.pi * f * t + phase)
        x += JITTER_SIGMA * rng.normal_array(t.size)
        out[:, axis] = x
    return out


def _pose_block(rng: SplitMix64, t: np.ndarray, device: str) -> np.ndarray:
    pos = _position_track(rng, t, _REST[device])
    rot = _orientation_track(rng, t)
    return np.hstack([pos, rot])


def _hex(rng: SplitMix64, n_chars: int) -> str:
    digits = []
    while len(digits) * 16 < n_chars:
        digits.append(f"{rng.next_u64():016x}")
    return "".join(digits)[:n_chars]


def _note_events(rng: SplitMix64, duration: float) -> np.ndarray:
    n_notes = int(math.floor(duration * NOTE_RATE_HZ))
    rows = []
    for k in range(n_notes):
        t = (k + 0.5) / NOTE_RATE_HZ
        roll = rng.random()
        if roll < 0.85:
            event_type = 0  # GOOD
        elif roll < 0.92:
            event_type = 1  # BAD
        elif roll < 0.97:
            event_type = 2  # MISS
        else:
            event_type = 3  # BOMB
        if event_type in (0, 1):
            metrics = (
                rng.uniform(-0.3, 0.3),
                rng.uniform(-20.0, 20.0),
                rng.uniform(0.6, 1.0),
                rng.uniform(0.5, 1.0),
            )
        else:
            metrics = (0.0, 0.0, 0.0, 0.0)
        rows.append((t, k, event_type) + metrics)
    return np.array(rows, dtype=np.float32).reshape(-1, 7)


def beat_saber_recording(rng: SplitMix64, profile: SynthProfile, user_id: str, user_name: str) -> Recording:
    n = frame_count(profile)
    t32 = (np.arange(n, dtype=np.float64) / profile.fps).astype(np.float32)
    t = t32.astype(np.float64)
    blocks = [t32[:, None].astype(np.float64)]
    for dev in BEAT_SABER_DEVICES:
        blocks.append(_pose_block(rng, t, dev))
    frames = FrameStream(BEAT_SABER_COLUMNS, np.hstack(blocks))
    events = (
        EventStream(EventKind.NOTE, _note_events(rng, profile.duration_sec)),
        EventStream(EventKind.WALL, np.zeros((0, 3))),
        EventStream(EventKind.HEIGHT, np.zeros((0, 2))),
        EventStream(EventKind.PAUSE, np.zeros((0, 2))),
    )
    hmd = _HMDS[rng.randint(0, len(_HMDS) - 1)]
    controllers = _CONTROLLERS[rng.randint(0, len(_CONTROLLERS) - 1)]
    info = RecordingInfo(
        user_id=user_id,
        user_name=user_name,
        app="Beat Saber",
        app_version="1.29.1",
        activity={
            "songHash": _hex(rng, 40).upper(),
            "songName": f"Song {rng.randint(1, 99999)}",
            "mapper": f"mapper{rng.randint(1, 999)}",
            "difficulty": _DIFFICULTIES[rng.randint(0, len(_DIFFICULTIES) - 1)],
            "mode": "Standard",
            "environment": _ENVIRONMENTS[rng.randint(0, len(_ENVIRONMENTS) - 1)],
            "modifiers": "",
            "recorderVersion": "0.6.0",
            "platform": "steam",
            "trackingSystem": "Oculus",
            "score": str(rng.randint(0, 1_500_000)),
        },
        devices=(
            Device(hmd, DeviceRole.HMD),
            Device(controllers, DeviceRole.CONTROLLER_L),
            Device(controllers, DeviceRole.CONTROLLER_R),
        ),
        timestamp=rng.randint(_TS_LO, _TS_HI) * 1000,
        settings={
            "jumpDistance": float(np.float32(rng.uniform(15.0, 25.0))),
            "leftHanded": 0.0,
            "height": float(np.float32(rng.uniform(1.5, 1.95))),
            "medianFps": float(round(profile.fps)),
        },
    )
    return Recording(info, frames, events, Provenance(SourceFormat.BSOR, 0))


def tilt_brush_recording(rng: SplitMix64, profile: SynthProfile, user_id: str) -> Recording:
    n_ticks = frame_count(profile)
    n_strokes = profile.strokes
    grid = np.arange(n_ticks, dtype=np.float64) / profile.fps
    base_ms = rng.randint(1_000, 1_000_000)
    if n_strokes and n_ticks >= 2 * n_strokes:
        cuts = np.sort(rng.random_array(n_strokes - 1)) * n_ticks
        bounds = [0] + [int(c) for c in cuts] + [n_ticks]
        # force every stroke to keep at least two points after its gap
        for i in range(1, len(bounds)):
            bounds[i] = max(bounds[i], bounds[i - 1] + 2)
        bounds = [min(b, n_ticks) for b in bounds]
        keep = np.zeros(n_ticks, dtype=bool)
        starts = []
        for s in range(n_strokes):
            lo, hi = bounds[s], bounds[s + 1]
            gap = min(rng.randint(0, 20), max(hi - lo - 2, 0)) if s else 0
            if hi - (lo + gap) < 1:
                continue
            keep[lo + gap : hi] = True
            starts.append(lo + gap)
        idx = np.flatnonzero(keep)
    else:
        idx = np.zeros(0, dtype=np.int64)
        starts = []
    ms = base_ms + np.round(grid[idx] * 1000.0).astype(np.int64)
    t32 = ((ms - ms[0]) / 1000.0).astype(np.float32) if ms.size else np.zeros(0, np.float32)
    t = t32.astype(np.float64)
    pose = _pose_block(rng, t, "brush") if t.size else np.zeros((0, 7))
    pressure = np.clip(
        0.55 + 0.3 * np.sin(2.0 * math.pi * rng.uniform(0.2, 1.0) * t) + 0.02 * rng.normal_array(t.size),
        0.0,
        1.0,
    )
    frames = FrameStream(
        TILT_BRUSH_COLUMNS, np.hstack([t[:, None], pose, pressure[:, None]])
    )
    row_of = {int(g): r for r, g in enumerate(idx)}
    strokes = []
    for g in starts:
        strokes.append(
            (
                t32[row_of[g]],
                rng.randint(0, 40),
                rng.random(),
                rng.random(),
                rng.random(),
                1.0,
                rng.uniform(0.01, 0.2),
            )
        )
    info = RecordingInfo(
        user_id=user_id,
        app="Tilt Brush",
        activity={
            "title": f"Sketch {rng.randint(1, 99999)}",
            "description": "synthetic sketch",
        },
        timestamp=rng.randint(_TS_LO, _TS_HI) * 1000,
        settings={"baseTimestampMs": float(base_ms)} if ms.size else {},
    )
    events = (EventStream(EventKind.STROKE, np.array(strokes, dtype=np.float32).reshape(-1, 7)),)
    return Recording(info, frames, events, Provenance(SourceFormat.TILT, 0))


def synth(profile: SynthProfile) -> list[Recording]:
    """Generate ``users * recs_per_user`` recordings, ordered by user."""
    profile.check()
    master = SplitMix64(profile.seed)
    corpus = []
    for u in range(profile.users):
        user_rng = master.fork()
        if profile.app == "beatsaber":
            user_id = f"7656119{user_rng.randint(0, 10**10 - 1):010d}"
        else:
            user_id = f"author-{_hex(user_rng, 12)}"
        user_name = f"player_{u:06d}"
        for _ in range(profile.recs_per_user):
            rng = user_rng.fork()
            if profile.app == "beatsaber":
                corpus.append(beat_saber_recording(rng, profile, user_id, user_name))
            else:
                corpus.append(tilt_brush_recording(rng, profile, user_id))
    return corpus
