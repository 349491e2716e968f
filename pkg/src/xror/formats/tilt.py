"""Reference .tilt layout (Tilt Brush sketches).

::

    "tilT" | headerLen u16 | reserved u16 | (headerLen - 8 bytes skipped)
    entry: length u32 + UTF-8 JSON {title, description, authorId, createdAt}
    entry: length u32 + sketch
        strokeCount u32, then per stroke:
            brushId i32, color 4 f32, size f32, cpCount u32,
            cpCount x (pos 3 f32, rot 4 f32, pressure f32, timestampMs u32)

Control points of all strokes are concatenated into one frame stream; each
stroke contributes a STROKE event at its first point's time. Frame time is
``(timestampMs - first timestampMs) / 1000``; the first timestamp is kept in
``settings["baseTimestampMs"]``.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import BadJson, BadMagic, TruncatedStroke, WrongSchema
from ..model import (
    TILT_BRUSH_COLUMNS,
    EventKind,
    EventStream,
    FrameStream,
    Provenance,
    Recording,
    RecordingInfo,
    SourceFormat,
)
from .binio import MAX_FRAMES, Reader, Writer

MAGIC = b"tilT"
HEADER_LEN = 8
APP = "Tilt Brush"
MAX_JSON = 1 << 20

CP_DTYPE = np.dtype([("pose", "<f4", (7,)), ("pressure", "<f4"), ("ts", "<u4")])
STROKE_HEAD = np.dtype([("brush", "<i4"), ("color", "<f4", (4,)), ("size", "<f4"), ("n", "<u4")])


def _truncated(section, offset):
    return TruncatedStroke(f"{section} truncated at offset {offset}")


def _metadata(raw: bytes) -> dict:
    try:
        meta = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise BadJson(f"metadata entry is not JSON: {exc}") from None
    if not isinstance(meta, dict):
        raise BadJson("metadata entry is not a JSON object")
    for key in ("title", "description", "authorId"):
        if not isinstance(meta.get(key, ""), str):
            raise BadJson(f"metadata {key} must be a string")
    created = meta.get("createdAt")
    if created is not None and (not isinstance(created, int) or isinstance(created, bool)):
        raise BadJson("metadata createdAt must be an integer (Unix ms)")
    if "authorId" not in meta:
        raise BadJson("metadata lacks authorId")
    return meta


def parse_tilt(data: bytes) -> Recording:
    if bytes(data[:4]) != MAGIC:
        raise BadMagic("not a .tilt file")
    r = Reader(data, 4, truncated=_truncated)
    r.section = "header"
    header_len = r.u16()
    r.u16()  # reserved
    if header_len < HEADER_LEN:
        raise TruncatedStroke(f"header length {header_len} < {HEADER_LEN}")
    r.raw(header_len - HEADER_LEN)

    r.section = "metadata"
    meta_len = r.u32()
    if meta_len > MAX_JSON:
        raise BadJson(f"metadata entry of {meta_len} bytes")
    meta = _metadata(r.raw(meta_len))

    r.section = "sketch"
    sketch_len = r.u32()
    r.need(sketch_len)
    s = Reader(data[r.pos : r.pos + sketch_len], truncated=_truncated)
    s.section = "sketch"
    n_strokes = s.count(STROKE_HEAD.itemsize, signed=False)
    heads = []
    points = []
    total = 0
    for k in range(n_strokes):
        s.section = f"stroke {k}"
        head = s.records(STROKE_HEAD, 1)[0]
        n = int(head["n"])
        total += n
        if total > MAX_FRAMES or n * CP_DTYPE.itemsize > s.remaining:
            raise TruncatedStroke(f"stroke {k} claims {n} control points past end of sketch")
        heads.append(head)
        points.append(s.records(CP_DTYPE, n))
    if s.remaining:
        raise TruncatedStroke(f"{s.remaining} bytes after last stroke")

    cps = np.concatenate(points) if points else np.zeros(0, CP_DTYPE)
    settings = {}
    if len(cps):
        base = int(cps["ts"][0])
        t = ((cps["ts"].astype(np.int64) - base) / 1000.0).astype(np.float32)
        settings["baseTimestampMs"] = float(base)
    else:
        t = np.zeros(0, np.float32)
    matrix = np.empty((len(cps), 9), dtype=np.float32)
    matrix[:, 0] = t
    matrix[:, 1:8] = cps["pose"]
    matrix[:, 8] = cps["pressure"]

    strokes = np.zeros((len(heads), 7), dtype=np.float32)
    row = 0
    for k, head in enumerate(heads):
        if len(t):
            start_t = t[min(row, len(t) - 1)]
        else:
            start_t = 0.0
        strokes[k] = (start_t, head["brush"], *head["color"], head["size"])
        row += int(head["n"])

    info = RecordingInfo(
        user_id=meta["authorId"],
        app=APP,
        activity={"title": meta.get("title", ""), "description": meta.get("description", "")},
        timestamp=meta.get("createdAt"),
        settings=settings,
    )
    return Recording(
        info=info,
        frames=FrameStream(TILT_BRUSH_COLUMNS, matrix),
        events=(EventStream(EventKind.STROKE, strokes),),
        provenance=Provenance(SourceFormat.TILT, len(data)),
    )


def stroke_bounds(frame_t: np.ndarray, stroke_t: np.ndarray) -> list[tuple[int, int]]:
    """Split frame rows into strokes using each stroke's start time.

    A stroke starts at the first row at or after the previous stroke's start
    whose time reaches the stroke's start time; the first stroke also absorbs
    any earlier rows.
    """
    n = len(frame_t)
    starts = []
    cursor = 0
    for k, ts in enumerate(stroke_t):
        if k == 0:
            start = 0
        else:
            start = cursor + int(np.searchsorted(frame_t[cursor:], ts, side="left"))
        starts.append(start)
        cursor = start
    ends = starts[1:] + [n]
    return list(zip(starts, ends))


def serialize_tilt(rec: Recording) -> bytes:
    if rec.frames.columns != TILT_BRUSH_COLUMNS:
        raise WrongSchema("serialize_tilt needs the Tilt Brush frame schema")
    info = rec.info
    meta = {
        "authorId": info.user_id,
        "description": info.activity.get("description", ""),
        "title": info.activity.get("title", ""),
    }
    if info.timestamp is not None:
        meta["createdAt"] = int(info.timestamp)
    meta_raw = json.dumps(meta, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")

    data = rec.frames.data
    stroke = rec.event_stream(EventKind.STROKE)
    strokes = stroke.data if stroke is not None else np.zeros((0, 7), np.float32)
    if len(data) and not len(strokes):
        raise WrongSchema("control points without any STROKE event")
    base = int(info.settings.get("baseTimestampMs", 0.0))
    ms = base + np.round(data[:, 0].astype(np.float64) * 1000.0)
    if len(ms) and (not np.isfinite(ms).all() or ms.min() < 0 or ms.max() > 0xFFFFFFFF):
        raise WrongSchema("control point timestamps do not fit u32 milliseconds")

    sketch = Writer()
    sketch.u32(len(strokes))
    bounds = stroke_bounds(data[:, 0], strokes[:, 0])
    for row, (lo, hi) in zip(strokes, bounds):
        head = np.zeros(1, STROKE_HEAD)
        brush = row[1]
        if not np.isfinite(brush) or brush != int(brush):
            raise WrongSchema(f"brushId {brush!r} is not an integer")
        head["brush"] = int(brush)
        head["color"] = row[2:6]
        head["size"] = row[6]
        head["n"] = hi - lo
        sketch.raw(head.tobytes())
        cps = np.zeros(hi - lo, CP_DTYPE)
        cps["pose"] = data[lo:hi, 1:8]
        cps["pressure"] = data[lo:hi, 8]
        cps["ts"] = ms[lo:hi].astype(np.uint32)
        sketch.raw(cps.tobytes())
    body = sketch.getvalue()

    w = Writer()
    w.raw(MAGIC)
    w.u16(HEADER_LEN)
    w.u16(0)
    w.u32(len(meta_raw))
    w.raw(meta_raw)
    w.u32(len(body))
    w.raw(body)
    return w.getvalue()
