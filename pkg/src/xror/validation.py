"""Rule checks shared by file-level and recording-level validation.

Checks never raise; each finding becomes a :class:`Violation` and the report
verdict is REJECT when any violation has ERROR severity.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import WrongSchema
from .model import EVENT_COLUMNS, Recording, frame_schema_name

ERROR = "ERROR"
WARNING = "WARNING"

ANON_ID_RE = re.compile(r"^[0-9a-f]{32}$")

# 2017-11-01T00:00:00Z and 2023-04-15T23:59:59.999Z
COLLECTION_START_MS = 1509494400000
COLLECTION_END_MS = 1681603199999

# per-code cap so a badly broken stream does not flood the report
MAX_PER_CODE = 20


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    severity: str = ERROR
    row: int | None = None
    stream: str | None = None


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    source: str | None = None

    def add(self, code: str, message: str, severity: str = ERROR, row=None, stream=None) -> None:
        if sum(v.code == code for v in self.violations) >= MAX_PER_CODE:
            return
        self.violations.append(Violation(code, message, severity, row, stream))

    def extend(self, other: ValidationReport) -> None:
        self.violations.extend(other.violations)

    @property
    def accepted(self) -> bool:
        return not any(v.severity == ERROR for v in self.violations)

    @property
    def verdict(self) -> str:
        return "ACCEPT" if self.accepted else "REJECT"

    @property
    def reasons(self) -> list[str]:
        seen = []
        for v in self.violations:
            if v.severity == ERROR and v.code not in seen:
                seen.append(v.code)
        return seen

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "verdict": self.verdict,
            "reasons": self.reasons,
            "violations": [asdict(v) for v in self.violations],
        }


@dataclass(frozen=True)
class ValidationPolicy:
    min_duration_sec: float = 1.0
    min_frames: int = 30
    rate_range_hz: tuple[float, float] = (30.0, 288.0)
    quat_norm_tol: float = 1e-3
    timestamp_range_ms: tuple[int, int] = (COLLECTION_START_MS, COLLECTION_END_MS)
    event_time_slack_sec: float = 1.0


DEFAULT_POLICY = ValidationPolicy()


def _first_rows(mask: np.ndarray, limit: int = MAX_PER_CODE) -> list[int]:
    return [int(i) for i in np.flatnonzero(mask)[:limit]]


def check_streams(rec: Recording, report: ValidationReport, policy: ValidationPolicy = DEFAULT_POLICY) -> None:
    """Numeric stream rules: finiteness, time order, quaternion norms, rate."""
    frames = rec.frames
    data = frames.data
    try:
        schema = frame_schema_name(frames.columns)
    except WrongSchema:
        report.add("SCHEMA", f"unknown frame columns {list(frames.columns)[:4]}...", stream="frames")
        schema = None

    bad = ~np.isfinite(data)
    if bad.any():
        rows = np.flatnonzero(bad.any(axis=1))
        report.add(
            "NON_FINITE",
            f"{int(bad.sum())} non-finite values in {rows.size} frames",
            row=int(rows[0]),
            stream="frames",
        )
    t = frames.t.astype(np.float64)
    if t.size > 1:
        for i in _first_rows(np.diff(t) < 0):
            report.add("MONOTONE_TIME", f"time decreases at row {i + 1}", row=i + 1, stream="frames")

    if schema is not None:
        devices = [c[:-3] for c in frames.columns if c.endswith("_qx")]
        for dev in devices:
            start = frames.columns.index(f"{dev}_qx")
            q = data[:, start : start + 4].astype(np.float64)
            with np.errstate(invalid="ignore"):
                off = np.abs(np.linalg.norm(q, axis=1) - 1.0) > policy.quat_norm_tol
            off &= np.isfinite(q).all(axis=1)
            if off.any():
                first = int(np.flatnonzero(off)[0])
                report.add(
                    "QUAT_NORM",
                    f"{dev}: {int(off.sum())} quaternions off unit norm (first at row {first})",
                    row=first,
                    stream="frames",
                )
        if "pressure" in frames.columns:
            p = frames.column("pressure")
            out = np.isfinite(p) & ((p < 0) | (p > 1))
            if out.any():
                first = int(np.flatnonzero(out)[0])
                report.add("PRESSURE_RANGE", "pressure outside [0, 1]", row=first, stream="frames")

    if t.size >= 3:
        dt = np.diff(t)
        dt = dt[(dt > 0) & np.isfinite(dt)]
        if dt.size:
            rate = float(np.median(1.0 / dt))
            lo, hi = policy.rate_range_hz
            if not lo <= rate <= hi:
                report.add("SAMPLE_RATE", f"median sample rate {rate:.2f} Hz outside [{lo}, {hi}]")
        else:
            report.add("SAMPLE_RATE", "no positive time deltas")

    finite_t = t[np.isfinite(t)]
    for ev in rec.events:
        name = ev.kind.value
        if ev.columns != EVENT_COLUMNS[ev.kind]:
            report.add("SCHEMA", f"{name} stream has unexpected columns", stream=name)
            continue
        et = ev.t.astype(np.float64)
        if not np.isfinite(ev.data).all():
            report.add("NON_FINITE", f"non-finite values in {name} events", stream=name)
        if et.size > 1:
            for i in _first_rows(np.diff(et) < 0):
                report.add("MONOTONE_TIME", f"{name} time decreases at row {i + 1}", row=i + 1, stream=name)
        if et.size and finite_t.size:
            slack = policy.event_time_slack_sec
            outside = np.isfinite(et) & (
                (et < finite_t.min() - slack) | (et > finite_t.max() + slack)
            )
            if outside.any():
                first = int(np.flatnonzero(outside)[0])
                report.add(
                    "EVENT_TIME",
                    f"{int(outside.sum())} {name} events outside the frame time span",
                    row=first,
                    stream=name,
                )


def validate_recording(rec: Recording, policy: ValidationPolicy = DEFAULT_POLICY) -> ValidationReport:
    """Classify a recording as ACCEPT or REJECT with reasons."""
    report = ValidationReport()
    n = rec.frames.n_rows
    if n == 0:
        report.add("EMPTY", "recording has no frames")
    elif n < policy.min_frames:
        report.add("TOO_FEW_FRAMES", f"{n} frames < {policy.min_frames}")
    if n:
        duration = float(rec.frames.t[-1]) - float(rec.frames.t[0])
        if not duration > policy.min_duration_sec:
            report.add("TOO_SHORT", f"duration {duration:.3f} s <= {policy.min_duration_sec} s")
    check_streams(rec, report, policy)
    info = rec.info
    if info.timestamp is not None:
        lo, hi = policy.timestamp_range_ms
        if not lo <= info.timestamp <= hi:
            report.add("TIMESTAMP_RANGE", f"timestamp {info.timestamp} outside collection window")
    if info.anonymized and (info.user_name is not None or not ANON_ID_RE.match(info.user_id)):
        report.add("ANON_ID", "anonymized recording carries a raw identity")
    if not info.user_id:
        report.add("USER_ID", "empty user id")
    return report

