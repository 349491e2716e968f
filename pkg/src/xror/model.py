"""Domain types shared by every module.

Streams are float32 matrices (row = sample, column = channel) with a named
column schema. Positions are meters in a right-handed, y-up frame and
quaternions are stored (x, y, z, w).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AllZeroDeltas,
    EmptyRecording,
    InvalidRecording,
    TooFewFrames,
    UnknownColumn,
    WrongSchema,
)

POSE_FIELDS = ("px", "py", "pz", "qx", "qy", "qz", "qw")
BEAT_SABER_DEVICES = ("head", "left", "right")

BEAT_SABER_COLUMNS: tuple[str, ...] = ("t",) + tuple(
    f"{dev}_{f}" for dev in BEAT_SABER_DEVICES for f in POSE_FIELDS
)
TILT_BRUSH_COLUMNS: tuple[str, ...] = (
    ("t",) + tuple(f"brush_{f}" for f in POSE_FIELDS) + ("pressure",)
)

FRAME_SCHEMAS: dict[str, tuple[str, ...]] = {
    "beatsaber": BEAT_SABER_COLUMNS,
    "tiltbrush": TILT_BRUSH_COLUMNS,
}

# largest integer a float32 holds exactly
FLOAT32_EXACT_INT = 1 << 24


class EventKind(str, enum.Enum):
    NOTE = "NOTE"
    WALL = "WALL"
    HEIGHT = "HEIGHT"
    PAUSE = "PAUSE"
    STROKE = "STROKE"


EVENT_COLUMNS: dict[EventKind, tuple[str, ...]] = {
    EventKind.NOTE: (
        "t",
        "noteId",
        "eventType",
        "cutDeviation",
        "cutDirDeviation",
        "beforeCutRating",
        "afterCutRating",
    ),
    EventKind.WALL: ("t", "wallId", "energyPenalty"),
    EventKind.HEIGHT: ("t", "height"),
    EventKind.PAUSE: ("t", "durationMs"),
    EventKind.STROKE: ("t", "brushId", "r", "g", "b", "a", "size"),
}


class DeviceRole(str, enum.Enum):
    HMD = "HMD"
    CONTROLLER_L = "CONTROLLER_L"
    CONTROLLER_R = "CONTROLLER_R"


class SourceFormat(str, enum.Enum):
    BSOR = "BSOR"
    SSDAT = "SSDAT"
    TILT = "TILT"
    XROR = "XROR"


def column_index(columns: Sequence[str], name: str) -> int:
    try:
        return list(columns).index(name)
    except ValueError:
        raise UnknownColumn(f"no column named {name!r}") from None


def frame_schema_name(columns: Sequence[str]) -> str:
    """Return the name of the declared frame schema matching ``columns``."""
    cols = tuple(columns)
    for name, schema in FRAME_SCHEMAS.items():
        if cols == schema:
            return name
    raise WrongSchema(f"columns do not match any frame schema: {cols[:4]}...")


def _as_matrix(data, n_cols: int) -> np.ndarray:
    arr = np.array(data, dtype=np.float32, order="C")
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, n_cols)
    if arr.ndim != 2 or arr.shape[1] != n_cols:
        raise InvalidRecording(
            f"stream data shape {arr.shape} does not match {n_cols} columns"
        )
    arr.flags.writeable = False
    return arr


class _Stream:
    columns: tuple[str, ...]
    data: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, column_index(self.columns, name)]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    def _same_data(self, other: _Stream) -> bool:
        return (
            self.columns == other.columns
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )


@dataclass(frozen=True, eq=False)
class FrameStream(_Stream):
    """Motion samples; equality is bit-exact on the float payload."""

    columns: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        cols = tuple(self.columns)
        if not cols or cols[0] != "t":
            raise InvalidRecording("column 0 of a frame stream must be 't'")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "data", _as_matrix(self.data, len(cols)))

    def __eq__(self, other):
        if not isinstance(other, FrameStream):
            return NotImplemented
        return self._same_data(other)

    __hash__ = None

    def __repr__(self):
        return f"FrameStream(rows={self.n_rows}, columns={len(self.columns)})"


@dataclass(frozen=True, eq=False)
class EventStream(_Stream):
    kind: EventKind
    data: np.ndarray
    columns: tuple[str, ...] = ()

    def __post_init__(self):
        kind = EventKind(self.kind)
        cols = tuple(self.columns) or EVENT_COLUMNS[kind]
        if cols != EVENT_COLUMNS[kind]:
            raise InvalidRecording(f"{kind.value} stream has columns {cols}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "data", _as_matrix(self.data, len(cols)))

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return self.kind == other.kind and self._same_data(other)

    __hash__ = None

    def __repr__(self):
        return f"EventStream({self.kind.value}, rows={self.n_rows})"


@dataclass(frozen=True)
class Pose6DoF:
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]


def device_poses(frames: FrameStream, device: str) -> np.ndarray:
    """Return the (N, 7) pose block of ``device`` as px..qw."""
    start = column_index(frames.columns, f"{device}_px")
    return frames.data[:, start : start + 7]


@dataclass(frozen=True)
class Device:
    name: str
    role: DeviceRole

    def __post_init__(self):
        object.__setattr__(self, "role", DeviceRole(self.role))


@dataclass(frozen=True)
class RecordingInfo:
    user_id: str
    app: str
    app_version: str = ""
    activity: Mapping[str, str] = field(default_factory=dict)
    devices: tuple[Device, ...] = ()
    timestamp: int | None = None  # Unix ms
    settings: Mapping[str, float] = field(default_factory=dict)
    user_name: str | None = None
    anonymized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "activity", dict(self.activity))
        object.__setattr__(self, "settings", {k: float(v) for k, v in self.settings.items()})
        object.__setattr__(self, "devices", tuple(self.devices))


@dataclass(frozen=True)
class Provenance:
    source_format: SourceFormat
    original_bytes: int = 0

    def __post_init__(self):
        object.__setattr__(self, "source_format", SourceFormat(self.source_format))


@dataclass(frozen=True)
class Recording:
    info: RecordingInfo
    frames: FrameStream
    events: tuple[EventStream, ...] = ()
    provenance: Provenance = Provenance(SourceFormat.XROR)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def event_stream(self, kind: EventKind) -> EventStream | None:
        for ev in self.events:
            if ev.kind == EventKind(kind):
                return ev
        return None

    @property
    def schema(self) -> str:
        return frame_schema_name(self.frames.columns)


def recording_duration(rec: Recording) -> float:
    t = rec.frames.t
    if t.size == 0:
        raise EmptyRecording("recording has no frames")
    return float(t[-1]) - float(t[0])


def median_sample_rate(rec: Recording) -> float:
    t = rec.frames.t.astype(np.float64)
    if t.size < 3:
        raise TooFewFrames(f"need at least 3 frames, got {t.size}")
    dt = np.diff(t)
    dt = dt[dt > 0]
    if dt.size == 0:
        raise AllZeroDeltas("no positive time deltas")
    return float(np.median(1.0 / dt))


def check_structure(rec: Recording) -> None:
    """Raise InvalidRecording unless ``rec`` is structurally writable.

    Numeric plausibility (norms, rates, ordering) is left to validation; this
    only guards what the container and codec depend on.
    """
    try:
        frame_schema_name(rec.frames.columns)
    except WrongSchema as exc:
        raise InvalidRecording(str(exc)) from None
    kinds = [ev.kind for ev in rec.events]
    if len(set(kinds)) != len(kinds):
        raise InvalidRecording("duplicate event stream kinds")
    if not rec.info.user_id:
        raise InvalidRecording("empty user id")
