"""The .xror file: one BSON document with metadata and FPCX stream blobs.

Layout (keys sorted at every level when written)::

    {"$schema": "xror-ref-1",
     "crc32": CRC-32 of all blob bytes, frames first, then events in order,
     "events": [{"blob": bin, "columns": [...], "kind": "NOTE"}, ...],
     "frames": {"blob": bin, "columns": [...]},
     "info": {...},
     "provenance": {"originalBytes": int, "sourceFormat": "BSOR"}}

Unknown keys are ignored on read and never written.
"""

from __future__ import annotations

import zlib

from . import bsonlite, codec
from .errors import (
    BlobCorrupt,
    CodecError,
    ContainerError,
    InvalidField,
    InvalidRecording,
    MissingField,
    ModelError,
    NotBson,
    StreamShapeMismatch,
    UnsupportedSchema,
)
from .model import (
    Device,
    EventKind,
    EventStream,
    FrameStream,
    Provenance,
    Recording,
    RecordingInfo,
    SourceFormat,
    check_structure,
)
from .validation import ValidationReport, check_streams

SCHEMA_ID = "xror-ref-1"


def _sorted(obj):
    if isinstance(obj, dict):
        return {k: _sorted(obj[k]) for k in sorted(obj)}
    if isinstance(obj, (list, tuple)):
        return [_sorted(v) for v in obj]
    return obj


def info_to_dict(info: RecordingInfo) -> dict:
    out = {
        "activity": dict(info.activity),
        "anonymized": bool(info.anonymized),
        "app": info.app,
        "appVersion": info.app_version,
        "devices": [{"name": d.name, "role": d.role.value} for d in info.devices],
        "settings": {k: float(v) for k, v in info.settings.items()},
        "userId": info.user_id,
    }
    if info.timestamp is not None:
        out["timestamp"] = int(info.timestamp)
    if info.user_name is not None:
        out["userName"] = info.user_name
    return out


def _require(doc: dict, key: str, types, where: str = ""):
    if key not in doc:
        raise MissingField(f"{where}{key}")
    value = doc[key]
    if not isinstance(value, types) or (isinstance(value, bool) and bool not in _tuple(types)):
        raise InvalidField(f"{where}{key} has type {type(value).__name__}")
    return value


def _tuple(types):
    return types if isinstance(types, tuple) else (types,)


def info_from_dict(doc: dict) -> RecordingInfo:
    user_id = _require(doc, "userId", str, "info.")
    app = _require(doc, "app", str, "info.")
    app_version = doc.get("appVersion", "")
    activity = doc.get("activity", {})
    settings = doc.get("settings", {})
    devices = doc.get("devices", [])
    timestamp = doc.get("timestamp")
    user_name = doc.get("userName")
    anonymized = doc.get("anonymized", False)
    if not isinstance(app_version, str):
        raise InvalidField("info.appVersion must be a string")
    if not isinstance(activity, dict) or not all(isinstance(v, str) for v in activity.values()):
        raise InvalidField("info.activity must map strings to strings")
    if not isinstance(settings, dict) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in settings.values()
    ):
        raise InvalidField("info.settings must map strings to numbers")
    if timestamp is not None and (not isinstance(timestamp, int) or isinstance(timestamp, bool)):
        raise InvalidField("info.timestamp must be an integer")
    if user_name is not None and not isinstance(user_name, str):
        raise InvalidField("info.userName must be a string")
    if not isinstance(anonymized, bool):
        raise InvalidField("info.anonymized must be a boolean")
    if not isinstance(devices, list):
        raise InvalidField("info.devices must be an array")
    parsed = []
    for d in devices:
        if not isinstance(d, dict) or not isinstance(d.get("name"), str):
            raise InvalidField("info.devices entries need a name")
        try:
            parsed.append(Device(d["name"], d.get("role")))
        except ValueError:
            raise InvalidField(f"unknown device role {d.get('role')!r}") from None
    return RecordingInfo(
        user_id=user_id,
        app=app,
        app_version=app_version,
        activity=activity,
        devices=tuple(parsed),
        timestamp=timestamp,
        settings=settings,
        user_name=user_name,
        anonymized=anonymized,
    )


def write_xror(rec: Recording, validate: bool = True) -> bytes:
    """Serialize a recording. Output bytes depend only on the recording."""
    if validate:
        check_structure(rec)
    frame_blob = codec.choose_and_encode(rec.frames.data)[1]
    blobs = [frame_blob]
    events = []
    for ev in rec.events:
        blob = codec.choose_and_encode(ev.data)[1]
        blobs.append(blob)
        events.append({"blob": blob, "columns": list(ev.columns), "kind": ev.kind.value})
    crc = 0
    for blob in blobs:
        crc = zlib.crc32(blob, crc)
    doc = {
        "$schema": SCHEMA_ID,
        "crc32": crc,
        "events": events,
        "frames": {"blob": frame_blob, "columns": list(rec.frames.columns)},
        "info": info_to_dict(rec.info),
        "provenance": {
            "originalBytes": int(rec.provenance.original_bytes),
            "sourceFormat": rec.provenance.source_format.value,
        },
    }
    return bsonlite.dumps(_sorted(doc))


def _decode_blob(blob: bytes, columns: list, where: str):
    try:
        matrix = codec.decode(blob)
    except CodecError as exc:
        raise BlobCorrupt(f"{where}: {exc}") from exc
    if matrix.shape[1] != len(columns) and matrix.shape[0] * matrix.shape[1] != 0:
        raise StreamShapeMismatch(
            f"{where}: blob has {matrix.shape[1]} columns, {len(columns)} declared"
        )
    if matrix.shape[1] != len(columns):
        matrix = matrix.reshape(0, len(columns))
    return matrix


def _columns(doc: dict, where: str) -> list[str]:
    cols = _require(doc, "columns", list, where)
    if not all(isinstance(c, str) for c in cols):
        raise InvalidField(f"{where}columns must be strings")
    return cols


def read_xror(data: bytes) -> Recording:
    doc = bsonlite.loads(data)
    schema = _require(doc, "$schema", str)
    if schema != SCHEMA_ID:
        raise UnsupportedSchema(f"unsupported schema {schema!r}")
    info_doc = _require(doc, "info", dict)
    frames_doc = _require(doc, "frames", dict)
    events_doc = _require(doc, "events", list)
    crc_expected = _require(doc, "crc32", int)

    frame_blob = _require(frames_doc, "blob", bytes, "frames.")
    frame_cols = _columns(frames_doc, "frames.")
    ev_parts = []
    crc = zlib.crc32(frame_blob)
    for i, ev in enumerate(events_doc):
        if not isinstance(ev, dict):
            raise InvalidField(f"events.{i} is not a document")
        blob = _require(ev, "blob", bytes, f"events.{i}.")
        kind = _require(ev, "kind", str, f"events.{i}.")
        cols = _columns(ev, f"events.{i}.")
        crc = zlib.crc32(blob, crc)
        ev_parts.append((kind, cols, blob))
    if crc != crc_expected:
        raise BlobCorrupt(f"crc32 mismatch: stored {crc_expected:#x}, computed {crc:#x}")

    info = info_from_dict(info_doc)
    prov_doc = doc.get("provenance", {})
    try:
        provenance = Provenance(
            SourceFormat(prov_doc.get("sourceFormat", "XROR")),
            int(prov_doc.get("originalBytes", 0)),
        )
    except (ValueError, TypeError, AttributeError):
        raise InvalidField("malformed provenance") from None

    try:
        frames = FrameStream(frame_cols, _decode_blob(frame_blob, frame_cols, "frames"))
        events = []
        for i, (kind, cols, blob) in enumerate(ev_parts):
            try:
                kind = EventKind(kind)
            except ValueError:
                raise InvalidField(f"events.{i}: unknown kind {kind!r}") from None
            events.append(EventStream(kind, _decode_blob(blob, cols, f"events.{i}"), cols))
    except InvalidRecording as exc:
        raise StreamShapeMismatch(str(exc)) from exc
    return Recording(info, frames, tuple(events), provenance)


def validate_schema(data: bytes) -> ValidationReport:
    """Check a file against the container rules without stopping at the first."""
    report = ValidationReport()
    try:
        doc = bsonlite.loads(data)
    except NotBson as exc:
        report.add("NOT_BSON", str(exc))
        return report
    for key, types in (("$schema", str), ("info", dict), ("frames", dict), ("events", list), ("crc32", int)):
        if key not in doc:
            report.add("MISSING_FIELD", f"missing field {key!r}")
        elif not isinstance(doc[key], types):
            report.add("INVALID_FIELD", f"field {key!r} has type {type(doc[key]).__name__}")
    if doc.get("$schema", SCHEMA_ID) != SCHEMA_ID:
        report.add("SCHEMA", f"unsupported schema {doc.get('$schema')!r}")
    if not report.accepted:
        return report
    try:
        rec = read_xror(data)
    except MissingField as exc:
        report.add("MISSING_FIELD", str(exc))
        return report
    except BlobCorrupt as exc:
        report.add("BLOB_CORRUPT", str(exc))
        return report
    except StreamShapeMismatch as exc:
        report.add("SHAPE_MISMATCH", str(exc))
        return report
    except (ContainerError, ModelError) as exc:
        report.add("INVALID_FIELD", str(exc))
        return report
    check_streams(rec, report)
    return report
