"""Reference ScoreSaber .dat layout.

``"SSREPLAY" | version u8 = 1 | zlib body``; the inflated body holds four
strings (playerId, playerName, songHash, difficulty), a frame section
(count i32; time f32 plus three 7-float poses per frame) and score events
(count i32; time f32, scoreDelta i32).
"""

from __future__ import annotations

import zlib

import numpy as np

from ..errors import BadField, BadMagic, InflateError, TruncatedBody, WrongSchema
from ..model import (
    BEAT_SABER_COLUMNS,
    EventKind,
    EventStream,
    FrameStream,
    Provenance,
    Recording,
    RecordingInfo,
    SourceFormat,
)
from .binio import Reader, Writer

MAGIC = b"SSREPLAY"
VERSION = 1
APP = "Beat Saber"
MAX_INFLATED = 256 * 1024 * 1024

FRAME_DTYPE = np.dtype([("t", "<f4"), ("pose", "<f4", (21,))])
SCORE_DTYPE = np.dtype([("t", "<f4"), ("delta", "<i4")])


def _truncated(section, offset):
    return TruncatedBody(f"body section {section} truncated at offset {offset}")


def inflate(body: bytes, limit: int = MAX_INFLATED) -> bytes:
    d = zlib.decompressobj()
    try:
        out = d.decompress(body, limit + 1)
    except zlib.error as exc:
        raise InflateError(str(exc)) from None
    if len(out) > limit:
        raise TruncatedBody(f"inflated body exceeds {limit} bytes")
    if not d.eof:
        raise InflateError("deflate stream is incomplete")
    if d.unused_data:
        raise InflateError(f"{len(d.unused_data)} bytes after deflate stream")
    return out


def parse_ssdat(data: bytes, max_inflated: int = MAX_INFLATED) -> Recording:
    if bytes(data[:8]) != MAGIC:
        raise BadMagic("not a ScoreSaber .dat file")
    if len(data) < 9:
        raise TruncatedBody("missing version byte")
    if data[8] != VERSION:
        raise BadField(f"unsupported .dat version {data[8]}")
    body = inflate(bytes(data[9:]), max_inflated)

    r = Reader(body, truncated=_truncated)
    r.section = "info"
    player_id, player_name, song_hash, difficulty = (r.string() for _ in range(4))
    r.section = "frames"
    frames = r.records(FRAME_DTYPE, r.count(FRAME_DTYPE.itemsize))
    r.section = "scores"
    scores = r.records(SCORE_DTYPE, r.count(SCORE_DTYPE.itemsize))
    if r.remaining:
        raise TruncatedBody(f"{r.remaining} unexpected bytes after score section")

    matrix = np.empty((len(frames), 22), dtype=np.float32)
    matrix[:, 0] = frames["t"]
    matrix[:, 1:] = frames["pose"]
    notes = np.zeros((len(scores), 7), dtype=np.float32)
    notes[:, 0] = scores["t"]
    notes[:, 1] = np.arange(len(scores))
    notes[:, 2] = scores["delta"]
    info = RecordingInfo(
        user_id=player_id,
        user_name=player_name or None,
        app=APP,
        activity={"songHash": song_hash, "difficulty": difficulty},
    )
    return Recording(
        info=info,
        frames=FrameStream(BEAT_SABER_COLUMNS, matrix),
        events=(EventStream(EventKind.NOTE, notes),),
        provenance=Provenance(SourceFormat.SSDAT, len(data)),
    )


def serialize_ssdat(rec: Recording, level: int = 6) -> bytes:
    """Write the reference .dat layout; only t and eventType of NOTE rows survive."""
    if rec.frames.columns != BEAT_SABER_COLUMNS:
        raise WrongSchema("serialize_ssdat needs the Beat Saber frame schema")
    w = Writer()
    info = rec.info
    for s in (info.user_id, info.user_name or "", info.activity.get("songHash", ""), info.activity.get("difficulty", "")):
        w.string(s)
    frames = np.zeros(rec.frames.n_rows, FRAME_DTYPE)
    frames["t"] = rec.frames.data[:, 0]
    frames["pose"] = rec.frames.data[:, 1:]
    w.i32(len(frames))
    w.raw(frames.tobytes())
    note = rec.event_stream(EventKind.NOTE)
    rows = note.data if note is not None else np.zeros((0, 7), np.float32)
    scores = np.zeros(len(rows), SCORE_DTYPE)
    scores["t"] = rows[:, 0]
    delta = rows[:, 2]
    if not (np.isfinite(delta).all() and np.array_equal(delta, np.round(delta))):
        raise WrongSchema("score deltas must be integers")
    scores["delta"] = delta.astype(np.int64)
    w.i32(len(scores))
    w.raw(scores.tobytes())
    return MAGIC + bytes([VERSION]) + zlib.compress(w.getvalue(), level)
