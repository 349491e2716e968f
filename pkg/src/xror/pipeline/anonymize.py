"""Keyed pseudonymization of user identities."""

from __future__ import annotations

import dataclasses
import hashlib
import hmac
import os
from typing import Iterable

from ..errors import BadKey, EmptyUserId
from ..model import Recording

KEY_BYTES = 32
KEY_ENV = "XROR_ANON_KEY"
ANON_ID_BYTES = 16


def parse_key(text: str) -> bytes:
    """Decode a 64-character hex key."""
    text = text.strip()
    if len(text) != 2 * KEY_BYTES:
        raise BadKey(f"anonymization key must be {2 * KEY_BYTES} hex characters")
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise BadKey("anonymization key is not hex") from None


def key_from_env(environ=None) -> bytes | None:
    value = (os.environ if environ is None else environ).get(KEY_ENV)
    return parse_key(value) if value else None


def anon_id(key: bytes, source_format: str, user_id: str) -> str:
    if len(key) != KEY_BYTES:
        raise BadKey(f"anonymization key must be {KEY_BYTES} bytes, got {len(key)}")
    if not user_id:
        raise EmptyUserId("cannot anonymize an empty user id")
    msg = f"{source_format}:{user_id}".encode("utf-8")
    return hmac.new(key, msg, hashlib.sha256).digest()[:ANON_ID_BYTES].hex()


def anonymize(rec: Recording, key: bytes, scrub: Iterable[str] = ()) -> Recording:
    """Replace the user id with its keyed pseudonym and drop the user name.

    Activity entries named in ``scrub`` are removed. Recordings already
    marked anonymized keep their id, so applying this twice is harmless.
    """
    info = rec.info
    if not info.user_id:
        raise EmptyUserId("cannot anonymize an empty user id")
    new_id = info.user_id
    if not info.anonymized:
        new_id = anon_id(key, rec.provenance.source_format.value, info.user_id)
    drop = set(scrub)
    activity = {k: v for k, v in info.activity.items() if k not in drop}
    info = dataclasses.replace(info, user_id=new_id, user_name=None, activity=activity, anonymized=True)
    return dataclasses.replace(rec, info=info)
