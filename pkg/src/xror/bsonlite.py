"""Minimal BSON document encoder/decoder.

Covers the element types the container needs (double, string, document,
array, binary, bool, null, int32, int64) and skips a few fixed-size foreign
types on read. Key order is whatever the caller's dict holds; the container
sorts keys before encoding.
"""

from __future__ import annotations

import struct

from .errors import NotBson

_INT32 = struct.Struct("<i")
_INT64 = struct.Struct("<q")
_DOUBLE = struct.Struct("<d")

MAX_DEPTH = 64

# fixed-size types tolerated on read: type -> byte width
_FOREIGN_FIXED = {0x07: 12, 0x09: 8, 0x11: 8, 0x13: 16}


def _cstring(key: str) -> bytes:
    raw = key.encode("utf-8")
    if b"\x00" in raw:
        raise ValueError(f"BSON key contains NUL: {key!r}")
    return raw + b"\x00"


def _element(key: str, value, depth: int) -> bytes:
    name = _cstring(key)
    if isinstance(value, bool):
        return b"\x08" + name + (b"\x01" if value else b"\x00")
    if isinstance(value, int):
        if -(2**31) <= value < 2**31:
            return b"\x10" + name + _INT32.pack(value)
        return b"\x12" + name + _INT64.pack(value)
    if isinstance(value, float):
        return b"\x01" + name + _DOUBLE.pack(value)
    if isinstance(value, str):
        raw = value.encode("utf-8")
        return b"\x02" + name + _INT32.pack(len(raw) + 1) + raw + b"\x00"
    if isinstance(value, (bytes, bytearray, memoryview)):
        raw = bytes(value)
        return b"\x05" + name + _INT32.pack(len(raw)) + b"\x00" + raw
    if value is None:
        return b"\x0a" + name
    if isinstance(value, dict):
        return b"\x03" + name + _document(value, depth + 1)
    if isinstance(value, (list, tuple)):
        return b"\x04" + name + _document({str(i): v for i, v in enumerate(value)}, depth + 1)
    raise TypeError(f"cannot encode {type(value).__name__} as BSON")


def _document(doc: dict, depth: int = 0) -> bytes:
    if depth > MAX_DEPTH:
        raise ValueError("document nested too deeply")
    body = b"".join(_element(k, v, depth) for k, v in doc.items())
    return _INT32.pack(len(body) + 5) + body + b"\x00"


def dumps(doc: dict) -> bytes:
    return _document(doc)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data

    def need(self, pos: int, n: int, end: int) -> None:
        if n < 0 or pos + n > end:
            raise NotBson(f"element at offset {pos} overruns its document")

    def cstring(self, pos: int, end: int) -> tuple[str, int]:
        stop = self.data.find(b"\x00", pos, end)
        if stop < 0:
            raise NotBson(f"unterminated key at offset {pos}")
        try:
            return self.data[pos:stop].decode("utf-8"), stop + 1
        except UnicodeDecodeError:
            raise NotBson(f"invalid UTF-8 key at offset {pos}") from None

    def document(self, pos: int, end: int, depth: int, as_list: bool = False):
        if depth > MAX_DEPTH:
            raise NotBson("document nested too deeply")
        self.need(pos, 5, end)
        (size,) = _INT32.unpack_from(self.data, pos)
        if size < 5 or pos + size > end:
            raise NotBson(f"bad document length {size} at offset {pos}")
        doc_end = pos + size
        if self.data[doc_end - 1] != 0:
            raise NotBson(f"document at offset {pos} not NUL-terminated")
        out = {}
        p = pos + 4
        while p < doc_end - 1:
            etype = self.data[p]
            key, p = self.cstring(p + 1, doc_end - 1)
            value, p = self.value(etype, p, doc_end - 1, depth)
            out[key] = value
        if p != doc_end - 1:
            raise NotBson(f"document at offset {pos} has trailing garbage")
        if as_list:
            return list(out.values()), doc_end
        return out, doc_end

    def value(self, etype: int, p: int, end: int, depth: int):
        data = self.data
        if etype == 0x01:
            self.need(p, 8, end)
            return _DOUBLE.unpack_from(data, p)[0], p + 8
        if etype == 0x02:
            self.need(p, 4, end)
            (n,) = _INT32.unpack_from(data, p)
            if n < 1:
                raise NotBson(f"bad string length at offset {p}")
            self.need(p + 4, n, end)
            if data[p + 3 + n] != 0:
                raise NotBson(f"string at offset {p} not NUL-terminated")
            try:
                return data[p + 4 : p + 3 + n].decode("utf-8"), p + 4 + n
            except UnicodeDecodeError:
                raise NotBson(f"invalid UTF-8 string at offset {p}") from None
        if etype == 0x03:
            return self.document(p, end, depth + 1)
        if etype == 0x04:
            return self.document(p, end, depth + 1, as_list=True)
        if etype == 0x05:
            self.need(p, 5, end)
            (n,) = _INT32.unpack_from(data, p)
            self.need(p + 5, n, end)
            return bytes(data[p + 5 : p + 5 + n]), p + 5 + n
        if etype == 0x08:
            self.need(p, 1, end)
            if data[p] > 1:
                raise NotBson(f"bad boolean at offset {p}")
            return bool(data[p]), p + 1
        if etype == 0x0A:
            return None, p
        if etype == 0x10:
            self.need(p, 4, end)
            return _INT32.unpack_from(data, p)[0], p + 4
        if etype == 0x12:
            self.need(p, 8, end)
            return _INT64.unpack_from(data, p)[0], p + 8
        if etype in _FOREIGN_FIXED:
            n = _FOREIGN_FIXED[etype]
            self.need(p, n, end)
            return bytes(data[p : p + n]), p + n
        raise NotBson(f"unsupported BSON element type 0x{etype:02x}")


def loads(data: bytes) -> dict:
    """Decode exactly one document; raise NotBson on any malformation."""
    data = bytes(data)
    doc, end = _Reader(data).document(0, len(data), 0)
    if end != len(data):
        raise NotBson(f"{len(data) - end} trailing bytes after document")
    return doc
