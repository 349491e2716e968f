"""Bounds-checked little-endian reader and matching writer."""

from __future__ import annotations

import struct
from typing import Callable

import numpy as np

from ..errors import BadField, NegativeCount, StringTooLong, TruncatedSection

MAX_STRING = 64 * 1024
MAX_FRAMES = 10_000_000

_U8 = struct.Struct("<B")
_U16 = struct.Struct("<H")
_I32 = struct.Struct("<i")
_U32 = struct.Struct("<I")
_I64 = struct.Struct("<q")
_F32 = struct.Struct("<f")


class Reader:
    """Cursor over a byte buffer; every read checks remaining length first.

    ``truncated`` builds the exception raised on overrun, so each format can
    report its own error type.
    """

    def __init__(self, data: bytes, pos: int = 0, truncated: Callable[[str, int], Exception] | None = None):
        self.data = data
        self.pos = pos
        self.section: int | str = "header"
        self._truncated = truncated or (lambda section, offset: TruncatedSection(section, offset))

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def need(self, n: int) -> None:
        if n > self.remaining:
            raise self._truncated(self.section, self.pos)

    def _unpack(self, st: struct.Struct):
        self.need(st.size)
        (value,) = st.unpack_from(self.data, self.pos)
        self.pos += st.size
        return value

    def u8(self) -> int:
        return self._unpack(_U8)

    def u16(self) -> int:
        return self._unpack(_U16)

    def i32(self) -> int:
        return self._unpack(_I32)

    def u32(self) -> int:
        return self._unpack(_U32)

    def i64(self) -> int:
        return self._unpack(_I64)

    def f32(self) -> float:
        return self._unpack(_F32)

    def raw(self, n: int) -> bytes:
        self.need(n)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return bytes(out)

    def string(self) -> str:
        n = self.i32()
        if n < 0:
            raise NegativeCount(f"negative string length at offset {self.pos - 4}")
        if n > MAX_STRING:
            raise StringTooLong(f"string of {n} bytes at offset {self.pos - 4}")
        raw = self.raw(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise BadField(f"invalid UTF-8 string at offset {self.pos - n}") from None

    def count(self, item_size: int, limit: int = MAX_FRAMES, signed: bool = True) -> int:
        """Read an element count and check it fits in the remaining input."""
        n = self.i32() if signed else self.u32()
        if n < 0:
            raise NegativeCount(f"negative count {n} in section {self.section}")
        if n > limit or n * item_size > self.remaining:
            raise self._truncated(self.section, self.pos)
        return n

    def records(self, dtype: np.dtype, n: int) -> np.ndarray:
        size = dtype.itemsize * n
        self.need(size)
        out = np.frombuffer(self.data, dtype=dtype, count=n, offset=self.pos)
        self.pos += size
        return out


class Writer:
    def __init__(self):
        self.buf = bytearray()

    def u8(self, v: int) -> None:
        self.buf += _U8.pack(v)

    def u16(self, v: int) -> None:
        self.buf += _U16.pack(v)

    def i32(self, v: int) -> None:
        self.buf += _I32.pack(v)

    def u32(self, v: int) -> None:
        self.buf += _U32.pack(v)

    def i64(self, v: int) -> None:
        self.buf += _I64.pack(v)

    def f32(self, v: float) -> None:
        self.buf += _F32.pack(v)

    def raw(self, b: bytes) -> None:
        self.buf += b

    def string(self, s: str) -> None:
        raw = s.encode("utf-8")
        if len(raw) > MAX_STRING:
            raise StringTooLong(f"string of {len(raw)} bytes")
        self.i32(len(raw))
        self.buf += raw

    def getvalue(self) -> bytes:
        return bytes(self.buf)
