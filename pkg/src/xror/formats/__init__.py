"""Source replay formats and format detection."""

from __future__ import annotations

import enum

from ..errors import UnknownFormat
from ..model import Recording
from .bsor import parse_bsor, serialize_bsor
from .ssdat import parse_ssdat, serialize_ssdat
from .tilt import parse_tilt, serialize_tilt


class Format(str, enum.Enum):
    BSOR = "BSOR"
    SSDAT = "SSDAT"
    TILT = "TILT"
    XROR = "XROR"
    UNKNOWN = "UNKNOWN"


# .xror documents are written with sorted keys, so "$schema" (a string
# element) is always the first element after the length prefix
_XROR_MARK = b"\x02$schema\x00"

EXTENSIONS = {
    Format.BSOR: ".bsor",
    Format.SSDAT: ".dat",
    Format.TILT: ".tilt",
    Format.XROR: ".xror",
}


def sniff_format(data: bytes) -> Format:
    """Identify a file by its leading magic bytes; first match wins."""
    head = bytes(data[:16])
    if len(head) < 4:
        return Format.UNKNOWN
    if head[:4] == b"\x69\x3d\x2d\x44":
        return Format.BSOR
    if head[:8] == b"SSREPLAY":
        return Format.SSDAT
    if head[:4] == b"tilT":
        return Format.TILT
    if head[4:13] == _XROR_MARK:
        return Format.XROR
    return Format.UNKNOWN


def parse_any(data: bytes, fmt: Format | str | None = None) -> Recording:
    from ..container import read_xror

    fmt = Format(fmt) if fmt is not None else sniff_format(data)
    parsers = {
        Format.BSOR: parse_bsor,
        Format.SSDAT: parse_ssdat,
        Format.TILT: parse_tilt,
        Format.XROR: read_xror,
    }
    if fmt not in parsers:
        raise UnknownFormat("unrecognized file format")
    return parsers[fmt](data)


__all__ = [
    "EXTENSIONS",
    "Format",
    "parse_any",
    "parse_bsor",
    "parse_ssdat",
    "parse_tilt",
    "serialize_bsor",
    "serialize_ssdat",
    "serialize_tilt",
    "sniff_format",
]
