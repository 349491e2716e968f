"""Corpus layout on disk, zip sharding and corpus statistics.

A corpus is ``<root>/<anon-id>/<recording-n>.xror``. Shards are stored
(uncompressed) zip files ``boxrr-shard-###.zip`` holding whole user folders.
"""

from __future__ import annotations

import io
import json
import math
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

from .. import bsonlite
from ..container import write_xror
from ..errors import DuplicateUser, EmptyCorpus, InvalidAnonId, XrorError
from ..model import Recording
from ..validation import ANON_ID_RE, ValidationReport, validate_recording
from .anonymize import anonymize
from .enrich import MetadataClient, enrich

MAX_USERS_PER_SHARD = 1000
SHARD_NAME = "boxrr-shard-{:03d}.zip"
MANIFEST_NAME = "manifest.json"
ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)  # earliest time a zip header can hold

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Map with a bounded worker pool; results keep input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def shard_count(n_users: int, max_users: int = MAX_USERS_PER_SHARD) -> int:
    return math.ceil(n_users / max_users)


def prepare(
    rec: Recording,
    key: bytes | None = None,
    client: MetadataClient | None = None,
    scrub: Sequence[str] = (),
) -> tuple[Recording | None, ValidationReport]:
    """validate, then anonymize and enrich accepted recordings."""
    report = validate_recording(rec)
    if not report.accepted:
        return None, report
    if key is not None:
        rec = anonymize(rec, key, scrub)
    if client is not None:
        rec = enrich(rec, client)
    return rec, report


def write_corpus(recs: Iterable[Recording], root: str | Path, jobs: int = 1) -> list[Path]:
    """Write recordings as ``<root>/<user_id>/<recording-n>.xror``.

    ``n`` counts each user's recordings in input order, starting at 0.
    """
    root = Path(root)
    recs = list(recs)
    blobs = parallel_map(write_xror, recs, jobs)
    seen: dict[str, int] = {}
    paths = []
    for rec, blob in zip(recs, blobs):
        n = seen.get(rec.info.user_id, 0)
        seen[rec.info.user_id] = n + 1
        folder = root / rec.info.user_id
        folder.mkdir(parents=True, exist_ok=True)
        path = folder / f"recording-{n}.xror"
        path.write_bytes(blob)
        paths.append(path)
    return paths


def _recording_sort_key(path: Path):
    stem = path.stem
    head, _, tail = stem.rpartition("-")
    return (head, int(tail)) if tail.isdigit() else (stem, -1)


def _user_files(folder: Path) -> list[Path]:
    files = [p for p in folder.iterdir() if p.is_file() and p.suffix == ".xror"]
    return sorted(files, key=lambda p: (_recording_sort_key(p), p.name))


def collect_users(roots: str | Path | Sequence[str | Path]) -> dict[str, Path]:
    """Map anon id to folder across one or more corpus roots."""
    if isinstance(roots, (str, Path)):
        roots = [roots]
    users: dict[str, Path] = {}
    for root in roots:
        for folder in sorted(Path(root).iterdir()):
            if not folder.is_dir():
                continue
            name = folder.name
            if not ANON_ID_RE.match(name):
                raise InvalidAnonId(f"folder {name!r} is not a 32-hex anonymized id")
            if name in users:
                raise DuplicateUser(f"user {name} appears in {users[name]} and {folder}")
            users[name] = folder
    return users


@dataclass(frozen=True)
class ShardManifest:
    shards: tuple[tuple[int, tuple[str, ...]], ...]
    max_users_per_shard: int = MAX_USERS_PER_SHARD

    def to_dict(self) -> dict:
        return {
            "maxUsersPerShard": self.max_users_per_shard,
            "shards": [
                {"file": SHARD_NAME.format(i), "shardIndex": i, "userIds": list(ids)}
                for i, ids in self.shards
            ],
        }

    def to_json(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n").encode("ascii")


def plan_shards(user_ids: Iterable[str], max_users: int = MAX_USERS_PER_SHARD) -> ShardManifest:
    if max_users < 1:
        raise ValueError("max_users must be positive")
    ids = sorted(user_ids)
    if not ids:
        raise EmptyCorpus("no users to pack")
    chunks = tuple(
        (i, tuple(ids[start : start + max_users])) for i, start in enumerate(range(0, len(ids), max_users))
    )
    return ShardManifest(chunks, max_users)


def _zip_bytes(entries: list[tuple[str, Path]]) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, path in entries:
            zi = zipfile.ZipInfo(name, date_time=ZIP_EPOCH)
            zi.compress_type = zipfile.ZIP_STORED
            zi.create_system = 3
            zi.external_attr = 0o100644 << 16
            zf.writestr(zi, path.read_bytes())
    return buf.getvalue()


def pack_shards(
    roots: str | Path | Sequence[str | Path],
    out_dir: str | Path,
    max_users: int = MAX_USERS_PER_SHARD,
    jobs: int = 1,
) -> tuple[list[Path], ShardManifest]:
    """Pack user folders into deterministic zip shards plus manifest.json."""
    users = collect_users(roots)
    manifest = plan_shards(users, max_users)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def build(shard):
        index, ids = shard
        entries = [(f"{uid}/{p.name}", p) for uid in ids for p in _user_files(users[uid])]
        path = out_dir / SHARD_NAME.format(index)
        path.write_bytes(_zip_bytes(entries))
        return path

    paths = parallel_map(build, manifest.shards, jobs)
    (out_dir / MANIFEST_NAME).write_bytes(manifest.to_json())
    return paths, manifest


@dataclass
class CorpusStats:
    users: int = 0
    recordings: int = 0
    total_bytes: int = 0
    unreadable: int = 0
    per_app: dict = field(default_factory=dict)

    @property
    def mean_bytes(self) -> float:
        return self.total_bytes / self.recordings if self.recordings else 0.0

    def to_dict(self) -> dict:
        return {
            "meanBytes": self.mean_bytes,
            "perApp": {k: dict(v) for k, v in sorted(self.per_app.items())},
            "recordings": self.recordings,
            "totalBytes": self.total_bytes,
            "unreadable": self.unreadable,
            "users": self.users,
        }

    def to_text(self) -> str:
        lines = [
            f"users       {self.users}",
            f"recordings  {self.recordings}",
            f"total bytes {self.total_bytes}",
            f"mean bytes  {self.mean_bytes:.1f}",
        ]
        if self.unreadable:
            lines.append(f"unreadable  {self.unreadable}")
        for app, row in sorted(self.per_app.items()):
            lines.append(f"  {app}: users={row['users']} recordings={row['recordings']} bytes={row['bytes']}")
        return "\n".join(lines)


def _app_of(data: bytes) -> str | None:
    # reads the metadata only; blobs stay compressed
    try:
        doc = bsonlite.loads(data)
        app = doc["info"]["app"]
    except (XrorError, KeyError, TypeError):
        return None
    return app if isinstance(app, str) else None


def corpus_stats(root: str | Path) -> CorpusStats:
    stats = CorpusStats()
    root = Path(root)
    if not root.exists():
        return stats
    app_users: dict[str, set] = {}
    for folder in sorted(p for p in root.iterdir() if p.is_dir()):
        files = _user_files(folder)
        if not files:
            continue
        stats.users += 1
        for path in files:
            data = path.read_bytes()
            stats.recordings += 1
            stats.total_bytes += len(data)
            app = _app_of(data)
            if app is None:
                stats.unreadable += 1
                continue
            row = stats.per_app.setdefault(app, {"bytes": 0, "recordings": 0, "users": 0})
            row["bytes"] += len(data)
            row["recordings"] += 1
            app_users.setdefault(app, set()).add(folder.name)
    for app, ids in app_users.items():
        stats.per_app[app]["users"] = len(ids)
    return stats
