"""Metadata enrichment from an external lookup backend."""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
import re
from pathlib import Path
from typing import Mapping, Protocol

from ..errors import ClientError, NotFound
from ..model import Recording

log = logging.getLogger(__name__)

_SAFE_KEY = re.compile(r"^[A-Za-z0-9_-][A-Za-z0-9_.-]*$")


class LookupKind(str, enum.Enum):
    MAP = "map"
    PLAYER = "player"


class MetadataClient(Protocol):
    def lookup(self, kind: LookupKind, key: str) -> Mapping[str, str]:
        """Return string metadata for ``key`` or raise NotFound."""


class FixtureClient:
    """Reads ``<root>/<kind>/<key>.json``, each a flat JSON object.

    Stateless apart from the root path, so concurrent lookups are safe.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def lookup(self, kind: LookupKind, key: str) -> dict[str, str]:
        kind = LookupKind(kind)
        if not _SAFE_KEY.match(key or ""):
            raise NotFound(f"{kind.value} key {key!r}")
        path = self.root / kind.value / f"{key}.json"
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            raise NotFound(f"{kind.value} key {key!r}") from None
        except OSError as exc:
            raise ClientError(f"reading {path}: {exc}") from None
        try:
            doc = json.loads(raw)
        except ValueError as exc:
            raise ClientError(f"{path} is not JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ClientError(f"{path} is not a JSON object")
        return {str(k): str(v) for k, v in doc.items()}


def _lookups(rec: Recording):
    song = rec.info.activity.get("songHash")
    if song:
        yield LookupKind.MAP, song
    if rec.info.user_id:
        yield LookupKind.PLAYER, rec.info.user_id


def enrich(rec: Recording, client: MetadataClient) -> Recording:
    """Merge lookup results into the activity map under ``map.``/``player.`` keys.

    Existing keys are never overwritten. Missing entries and backend
    failures leave the recording as it was.
    """
    activity = dict(rec.info.activity)
    for kind, key in _lookups(rec):
        try:
            found = client.lookup(kind, key)
        except NotFound:
            continue
        except ClientError as exc:
            log.warning("enrichment skipped for %s %s: %s", kind.value, key, exc)
            continue
        prefix = kind.value + "."
        for name, value in sorted(found.items()):
            name = name if name.startswith(prefix) else prefix + name
            activity.setdefault(name, str(value))
    if activity == rec.info.activity:
        return rec
    return dataclasses.replace(rec, info=dataclasses.replace(rec.info, activity=activity))
