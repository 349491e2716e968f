"""Reference .bsor layout (Beat Saber replays).

::

    magic u32 = 0x442D3D69 | version u8 = 1
    tag 0 info    strings..., score i32, strings..., jumpDistance f32,
                  leftHanded u8, height f32
    tag 1 frames  count i32, then per frame: time f32, fps i32,
                  head/left/right x (pos 3 f32, rot 4 f32)
    tag 2 notes   count i32, then noteId i32, eventTime f32, spawnTime f32,
                  eventType i32, and 6 f32 cut metrics for GOOD/BAD notes
    tag 3 walls   count i32, then wallId i32, energy f32, time f32
    tag 4 heights count i32, then height f32, time f32
    tag 5 pauses  count i32, then duration i64 (ms), time f32

Sections appear in ascending tag order, at most once each; info is
mandatory. Strings are i32-length-prefixed UTF-8.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..errors import BadField, BadMagic, BadSection, WrongSchema
from ..model import (
    BEAT_SABER_COLUMNS,
    EVENT_COLUMNS,
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
from .binio import Reader, Writer

MAGIC = 0x442D3D69
MAGIC_BYTES = MAGIC.to_bytes(4, "little")
VERSION = 1
APP = "Beat Saber"

TAG_INFO, TAG_FRAMES, TAG_NOTES, TAG_WALLS, TAG_HEIGHTS, TAG_PAUSES = range(6)

NOTE_GOOD, NOTE_BAD, NOTE_MISS, NOTE_BOMB = range(4)
CUT_METRICS = 6
# cut metrics kept in the NOTE stream; the trailing two are dropped
KEPT_METRICS = 4

FRAME_DTYPE = np.dtype([("t", "<f4"), ("fps", "<i4"), ("pose", "<f4", (21,))])
FRAME_SIZE = FRAME_DTYPE.itemsize  # 92
WALL_DTYPE = np.dtype([("id", "<i4"), ("energy", "<f4"), ("t", "<f4")])
HEIGHT_DTYPE = np.dtype([("height", "<f4"), ("t", "<f4")])
PAUSE_DTYPE = np.dtype([("duration", "<i8"), ("t", "<f4")])

# (info field, destination) in file order; "activity"/"settings" name the map
_INFO_LAYOUT = (
    ("appVersion", "activity:recorderVersion"),
    ("gameVersion", "appVersion"),
    ("timestamp", "timestamp"),
    ("playerId", "userId"),
    ("playerName", "userName"),
    ("platform", "activity:platform"),
    ("trackingSystem", "activity:trackingSystem"),
    ("hmd", "hmd"),
    ("controllers", "controllers"),
    ("songHash", "activity:songHash"),
    ("songName", "activity:songName"),
    ("mapper", "activity:mapper"),
    ("difficulty", "activity:difficulty"),
)
_INFO_TAIL = (
    ("mode", "activity:mode"),
    ("environment", "activity:environment"),
    ("modifiers", "activity:modifiers"),
)


def _parse_info(r: Reader) -> RecordingInfo:
    raw = {name: r.string() for name, _ in _INFO_LAYOUT}
    score = r.i32()
    raw.update({name: r.string() for name, _ in _INFO_TAIL})
    jump = r.f32()
    left_handed = r.u8()
    height = r.f32()

    activity = {"score": str(score)}
    for name, dest in _INFO_LAYOUT + _INFO_TAIL:
        if dest.startswith("activity:"):
            activity[dest.split(":", 1)[1]] = raw[name]
    ts = raw["timestamp"]
    if not (ts.isascii() and ts.isdigit() and len(ts) <= 12):
        raise BadField(f"timestamp {ts!r} is not decimal Unix seconds")
    return RecordingInfo(
        user_id=raw["playerId"],
        user_name=raw["playerName"] or None,
        app=APP,
        app_version=raw["gameVersion"],
        activity=activity,
        devices=(
            Device(raw["hmd"], DeviceRole.HMD),
            Device(raw["controllers"], DeviceRole.CONTROLLER_L),
            Device(raw["controllers"], DeviceRole.CONTROLLER_R),
        ),
        timestamp=int(ts) * 1000,
        settings={"jumpDistance": jump, "leftHanded": float(left_handed), "height": height},
    )


def _parse_notes(r: Reader) -> np.ndarray:
    n = r.count(16)
    rows = np.zeros((n, len(EVENT_COLUMNS[EventKind.NOTE])), dtype=np.float32)
    for i in range(n):
        note_id = r.i32()
        event_time = r.f32()
        r.f32()  # spawn time, not kept
        event_type = r.i32()
        rows[i, 0] = event_time
        rows[i, 1] = note_id
        rows[i, 2] = event_type
        if event_type in (NOTE_GOOD, NOTE_BAD):
            metrics = r.records(np.dtype("<f4"), CUT_METRICS)
            rows[i, 3:] = metrics[:KEPT_METRICS]
    return rows


def parse_bsor(data: bytes) -> Recording:
    r = Reader(data)
    if r.remaining < 4 or r.u32() != MAGIC:
        raise BadMagic("not a .bsor file")
    version = r.u8()
    if version != VERSION:
        raise BadField(f"unsupported .bsor version {version}")

    info = None
    frames = np.zeros(0, dtype=FRAME_DTYPE)
    notes = np.zeros((0, 7), np.float32)
    walls = np.zeros((0, 3), np.float32)
    heights = np.zeros((0, 2), np.float32)
    pauses = np.zeros((0, 2), np.float32)
    last_tag = -1
    while r.remaining:
        tag = r.u8()
        if tag > TAG_PAUSES:
            raise BadSection(f"unknown section tag {tag} at offset {r.pos - 1}")
        if tag <= last_tag:
            raise BadSection(f"section {tag} out of order at offset {r.pos - 1}")
        if last_tag < TAG_INFO and tag != TAG_INFO:
            raise BadSection("info section must come first")
        last_tag = tag
        r.section = tag
        if tag == TAG_INFO:
            info = _parse_info(r)
        elif tag == TAG_FRAMES:
            frames = r.records(FRAME_DTYPE, r.count(FRAME_SIZE))
        elif tag == TAG_NOTES:
            notes = _parse_notes(r)
        elif tag == TAG_WALLS:
            w = r.records(WALL_DTYPE, r.count(WALL_DTYPE.itemsize))
            walls = np.column_stack([w["t"], w["id"], w["energy"]]).astype(np.float32)
        elif tag == TAG_HEIGHTS:
            h = r.records(HEIGHT_DTYPE, r.count(HEIGHT_DTYPE.itemsize))
            heights = np.column_stack([h["t"], h["height"]]).astype(np.float32)
        else:
            p = r.records(PAUSE_DTYPE, r.count(PAUSE_DTYPE.itemsize))
            pauses = np.column_stack([p["t"], p["duration"]]).astype(np.float32)
    if info is None:
        raise BadSection("missing info section")

    matrix = np.empty((len(frames), 22), dtype=np.float32)
    matrix[:, 0] = frames["t"]
    matrix[:, 1:] = frames["pose"]
    if len(frames):
        settings = dict(info.settings)
        settings["medianFps"] = float(np.round(np.median(frames["fps"])))
        info = replace(info, settings=settings)
    return Recording(
        info=info,
        frames=FrameStream(BEAT_SABER_COLUMNS, matrix),
        events=(
            EventStream(EventKind.NOTE, notes),
            EventStream(EventKind.WALL, walls),
            EventStream(EventKind.HEIGHT, heights),
            EventStream(EventKind.PAUSE, pauses),
        ),
        provenance=Provenance(SourceFormat.BSOR, len(data)),
    )


def _device_name(info: RecordingInfo, *roles: DeviceRole) -> str:
    for role in roles:
        for d in info.devices:
            if d.role == role:
                return d.name
    return ""


def _int_field(value: float, what: str, lo: int = -(2**31), hi: int = 2**31 - 1) -> int:
    if not np.isfinite(value) or value != int(value) or not lo <= int(value) <= hi:
        raise WrongSchema(f"{what} {value!r} is not a representable integer")
    return int(value)


def serialize_bsor(rec: Recording) -> bytes:
    if rec.frames.columns != BEAT_SABER_COLUMNS:
        raise WrongSchema("serialize_bsor needs the Beat Saber frame schema")
    info = rec.info
    act = info.activity
    try:
        score = int(act.get("score", "0"))
    except ValueError:
        raise WrongSchema(f"score {act.get('score')!r} is not an integer") from None
    if info.timestamp is not None and info.timestamp % 1000:
        raise WrongSchema(".bsor timestamps have whole-second resolution")
    values = {
        "appVersion": act.get("recorderVersion", ""),
        "gameVersion": info.app_version,
        "timestamp": str((info.timestamp or 0) // 1000),
        "playerId": info.user_id,
        "playerName": info.user_name or "",
        "platform": act.get("platform", ""),
        "trackingSystem": act.get("trackingSystem", ""),
        "hmd": _device_name(info, DeviceRole.HMD),
        "controllers": _device_name(info, DeviceRole.CONTROLLER_L, DeviceRole.CONTROLLER_R),
        "songHash": act.get("songHash", ""),
        "songName": act.get("songName", ""),
        "mapper": act.get("mapper", ""),
        "difficulty": act.get("difficulty", ""),
        "mode": act.get("mode", ""),
        "environment": act.get("environment", ""),
        "modifiers": act.get("modifiers", ""),
    }
    w = Writer()
    w.u32(MAGIC)
    w.u8(VERSION)

    w.u8(TAG_INFO)
    for name, _ in _INFO_LAYOUT:
        w.string(values[name])
    w.i32(score)
    for name, _ in _INFO_TAIL:
        w.string(values[name])
    settings = info.settings
    w.f32(settings.get("jumpDistance", 0.0))
    w.u8(int(settings.get("leftHanded", 0.0)))
    w.f32(settings.get("height", 0.0))

    n = rec.frames.n_rows
    frames = np.zeros(n, dtype=FRAME_DTYPE)
    frames["t"] = rec.frames.data[:, 0]
    fps = settings.get("medianFps", 0.0)
    frames["fps"] = _int_field(fps, "medianFps")
    frames["pose"] = rec.frames.data[:, 1:]
    w.u8(TAG_FRAMES)
    w.i32(n)
    w.raw(frames.tobytes())

    empty = {k: np.zeros((0, len(c)), np.float32) for k, c in EVENT_COLUMNS.items()}
    streams = {ev.kind: ev.data for ev in rec.events}
    unexpected = set(streams) - {EventKind.NOTE, EventKind.WALL, EventKind.HEIGHT, EventKind.PAUSE}
    if unexpected:
        raise WrongSchema(f"events {sorted(k.value for k in unexpected)} have no .bsor section")

    notes = streams.get(EventKind.NOTE, empty[EventKind.NOTE])
    w.u8(TAG_NOTES)
    w.i32(len(notes))
    for row in notes:
        event_type = _int_field(row[2], "eventType")
        w.i32(_int_field(row[1], "noteId"))
        w.raw(row[0:1].tobytes())
        w.raw(row[0:1].tobytes())  # spawn time is not modelled; mirror event time
        w.i32(event_type)
        if event_type in (NOTE_GOOD, NOTE_BAD):
            w.raw(row[3:7].tobytes())
            w.raw(np.zeros(CUT_METRICS - KEPT_METRICS, "<f4").tobytes())

    walls = streams.get(EventKind.WALL, empty[EventKind.WALL])
    rows = np.zeros(len(walls), WALL_DTYPE)
    rows["id"] = [_int_field(v, "wallId") for v in walls[:, 1]]
    rows["energy"] = walls[:, 2]
    rows["t"] = walls[:, 0]
    w.u8(TAG_WALLS)
    w.i32(len(rows))
    w.raw(rows.tobytes())

    heights = streams.get(EventKind.HEIGHT, empty[EventKind.HEIGHT])
    rows = np.zeros(len(heights), HEIGHT_DTYPE)
    rows["height"] = heights[:, 1]
    rows["t"] = heights[:, 0]
    w.u8(TAG_HEIGHTS)
    w.i32(len(rows))
    w.raw(rows.tobytes())

    pauses = streams.get(EventKind.PAUSE, empty[EventKind.PAUSE])
    rows = np.zeros(len(pauses), PAUSE_DTYPE)
    rows["duration"] = [_int_field(v, "durationMs", 0, 2**53) for v in pauses[:, 1]]
    rows["t"] = pauses[:, 0]
    w.u8(TAG_PAUSES)
    w.i32(len(rows))
    w.raw(rows.tobytes())
    return w.getvalue()
