"""Text exports: BVH (motion only), MVNX-style XML, and JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .container import SCHEMA_ID, info_from_dict, info_to_dict
from .errors import DegenerateQuaternion, InvalidField, MissingField, WrongSchema
from .model import (
    BEAT_SABER_COLUMNS,
    EventKind,
    EventStream,
    FrameStream,
    Provenance,
    Recording,
    SourceFormat,
)

GIMBAL_EPS = 1e-6
BVH_JOINTS = (("Head", "head"), ("LeftHand", "left"), ("RightHand", "right"))
BVH_CHANNELS = "Xposition Yposition Zposition Zrotation Xrotation Yrotation"
BVH_NUMBER = "%.4f"
MVNX_NUMBER = "%.9g"  # 9 significant digits round-trip any float32


@dataclass(frozen=True)
class EulerAngles:
    """Intrinsic Z-then-X-then-Y rotation, degrees in (-180, 180]."""

    z: float
    x: float
    y: float


def _wrap_degrees(a: np.ndarray) -> np.ndarray:
    a = np.where(a <= -180.0, a + 360.0, a)
    return np.where(a > 180.0, a - 360.0, a)


def quats_to_euler(q: np.ndarray) -> np.ndarray:
    """Vectorized ZXY decomposition of (N, 4) x,y,z,w quaternions.

    Returns (N, 3) degrees ordered z, x, y. Rows with a near-zero norm raise.
    """
    q = np.asarray(q, dtype=np.float64).reshape(-1, 4)
    norm = np.linalg.norm(q, axis=1)
    if np.any(norm < 1e-6):
        raise DegenerateQuaternion("quaternion norm below 1e-6")
    x, y, z, w = (q / norm[:, None]).T
    r00 = 1 - 2 * (y * y + z * z)
    r01 = 2 * (x * y - z * w)
    r10 = 2 * (x * y + z * w)
    r11 = 1 - 2 * (x * x + z * z)
    r20 = 2 * (x * z - y * w)
    r21 = 2 * (y * z + x * w)
    r22 = 1 - 2 * (x * x + y * y)
    sx = np.clip(r21, -1.0, 1.0)
    ax = np.arcsin(sx)
    locked = np.abs(sx) > 1 - GIMBAL_EPS
    az = np.where(locked, np.arctan2(r10, r00), np.arctan2(-r01, r11))
    ay = np.where(locked, 0.0, np.arctan2(-r20, r22))
    out = np.degrees(np.stack([az, ax, ay], axis=1))
    return _wrap_degrees(out)


def quat_to_euler(q) -> EulerAngles:
    z, x, y = quats_to_euler(np.asarray(q, dtype=np.float64).reshape(1, 4))[0]
    return EulerAngles(float(z), float(x), float(y))


def _frame_time(t: np.ndarray) -> float:
    if t.size < 2:
        return 0.0
    return float(np.median(np.diff(t.astype(np.float64))))


def export_bvh(rec: Recording) -> bytes:
    """Three rigid bodies under a zero-offset root; positions in centimeters."""
    if rec.frames.columns != BEAT_SABER_COLUMNS:
        raise WrongSchema("BVH export needs the Beat Saber frame schema")
    lines = ["HIERARCHY", "ROOT Root", "{", "\tOFFSET 0.000000 0.000000 0.000000", "\tCHANNELS 0"]
    for joint, _ in BVH_JOINTS:
        lines += [
            f"\tJOINT {joint}",
            "\t{",
            "\t\tOFFSET 0.000000 0.000000 0.000000",
            f"\t\tCHANNELS 6 {BVH_CHANNELS}",
            "\t\tEnd Site",
            "\t\t{",
            "\t\t\tOFFSET 0.000000 0.000000 0.000000",
            "\t\t}",
            "\t}",
        ]
    data = rec.frames.data
    lines += [
        "}",
        "MOTION",
        f"Frames: {rec.frames.n_rows}",
        f"Frame Time: {_frame_time(rec.frames.t):.6f}",
    ]
    if rec.frames.n_rows:
        blocks = []
        for _, dev in BVH_JOINTS:
            start = rec.frames.columns.index(f"{dev}_px")
            pos = data[:, start : start + 3].astype(np.float64) * 100.0
            euler = quats_to_euler(data[:, start + 3 : start + 7])
            blocks += [pos, euler]
        motion = np.hstack(blocks) + 0.0  # no negative zeros in the text
        fmt = " ".join([BVH_NUMBER] * motion.shape[1])
        lines += [fmt % tuple(row) for row in motion.tolist()]
    return ("\n".join(lines) + "\n").encode("ascii")


def _rows_text(data: np.ndarray) -> list[str]:
    if data.shape[1] == 0:
        return ["" for _ in range(data.shape[0])]
    fmt = " ".join([MVNX_NUMBER] * data.shape[1])
    return [fmt % tuple(row) for row in data.astype(np.float64).tolist()]


def _info_attributes(rec: Recording) -> tuple[str, list[str]]:
    doc = info_to_dict(rec.info)
    attrs = []
    for key in ("userId", "userName", "app", "appVersion", "timestamp", "anonymized"):
        if key in doc:
            value = doc[key]
            if isinstance(value, bool):
                value = "true" if value else "false"
            attrs.append(f"{key}={quoteattr(str(value))}")
    attrs.append(f"sourceFormat={quoteattr(rec.provenance.source_format.value)}")
    entries = []
    for group in ("activity", "settings"):
        for key in sorted(doc[group]):
            value = doc[group][key]
            text = repr(float(value)) if group == "settings" else value
            entries.append(f"<entry group={quoteattr(group)} key={quoteattr(key)} value={quoteattr(text)}/>")
    for i, dev in enumerate(doc["devices"]):
        entries.append(f"<device index=\"{i}\" name={quoteattr(dev['name'])} role={quoteattr(dev['role'])}/>")
    return " ".join(attrs), entries


def export_mvnx(rec: Recording) -> bytes:
    attrs, entries = _info_attributes(rec)
    out = ['<?xml version="1.0" encoding="UTF-8"?>', '<mvnx version="ref-1">']
    if entries:
        out.append(f"<info {attrs}>")
        out += entries
        out.append("</info>")
    else:
        out.append(f"<info {attrs}/>")
    cols = " ".join(rec.frames.columns)
    out.append(f"<frames columns={quoteattr(cols)} count=\"{rec.frames.n_rows}\">")
    times = rec.frames.t.astype(np.float64).tolist()
    for t, text in zip(times, _rows_text(rec.frames.data)):
        out.append(f"<frame time=\"{MVNX_NUMBER % t}\">{text}</frame>")
    out.append("</frames>")
    if rec.events:
        out.append("<events>")
        for ev in rec.events:
            cols = " ".join(ev.columns)
            out.append(
                f"<event kind=\"{ev.kind.value}\" columns={quoteattr(cols)} count=\"{ev.n_rows}\">"
            )
            ev_times = ev.t.astype(np.float64).tolist()
            for t, text in zip(ev_times, _rows_text(ev.data)):
                out.append(f"<row time=\"{MVNX_NUMBER % t}\">{escape(text)}</row>")
            out.append("</event>")
        out.append("</events>")
    else:
        out.append("<events/>")
    out.append("</mvnx>")
    return ("\n".join(out) + "\n").encode("utf-8")


def _shortest(data: np.ndarray) -> list:
    # float32 shortest repr, re-read as a double so json emits the same digits
    return [[float(s) for s in row] for row in data.astype(str).tolist()]


def json_document(rec: Recording) -> dict:
    return {
        "$schema": SCHEMA_ID,
        "events": [
            {"columns": list(ev.columns), "data": _shortest(ev.data), "kind": ev.kind.value}
            for ev in rec.events
        ],
        "frames": {"columns": list(rec.frames.columns), "data": _shortest(rec.frames.data)},
        "info": info_to_dict(rec.info),
        "provenance": {
            "originalBytes": int(rec.provenance.original_bytes),
            "sourceFormat": rec.provenance.source_format.value,
        },
    }


def export_json(rec: Recording) -> bytes:
    """Same structure as the .xror document with streams as number arrays.

    Non-finite values use the NaN/Infinity tokens of Python's json module;
    NaN payload bits do not survive the text round trip.
    """
    text = json.dumps(json_document(rec), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def _matrix(rows, n_cols: int) -> np.ndarray:
    arr = np.array(rows, dtype=np.float32)
    return arr.reshape(-1, n_cols) if arr.size == 0 else arr


def read_json(data: bytes | str) -> Recording:
    try:
        doc = json.loads(data)
    except ValueError as exc:
        raise InvalidField(f"not JSON: {exc}") from None
    for key in ("info", "frames", "events"):
        if key not in doc:
            raise MissingField(key)
    frames_doc = doc["frames"]
    frames = FrameStream(frames_doc["columns"], _matrix(frames_doc["data"], len(frames_doc["columns"])))
    events = tuple(
        EventStream(EventKind(ev["kind"]), _matrix(ev["data"], len(ev["columns"])), ev["columns"])
        for ev in doc["events"]
    )
    prov = doc.get("provenance", {})
    return Recording(
        info_from_dict(doc["info"]),
        frames,
        events,
        Provenance(SourceFormat(prov.get("sourceFormat", "XROR")), int(prov.get("originalBytes", 0))),
    )


__all__ = [
    "EulerAngles",
    "export_bvh",
    "export_json",
    "export_mvnx",
    "quat_to_euler",
    "quats_to_euler",
    "read_json",
]
