"""FPCX: lossless predictive codec for 2D float32 matrices.

Block layout (little-endian header, 12 bytes)::

    magic "FPCX" | version u8 | predictor u8 | rows u32 | cols u16 | payload

Values are mapped to order-preserving unsigned integers and predicted per
column from the previous row (predictor 0) or by linear extrapolation from
the previous two rows (predictor 1). The residual ``ordered XOR prediction``
is written as a 5-bit significant-bit code, arithmetic coded with one adaptive
binary model per (column, code bit), followed by its mantissa bits stored
raw. Code 31 is an escape: all 32 residual bits follow raw.

Payload: ``ac_len u32 | arithmetic section | raw bit section``. Both sections
are MSB-first and zero-padded to a byte. An empty matrix has an empty payload.
"""

from __future__ import annotations

import struct

import numba
import numpy as np

from .errors import (
    ArithDecoderDesync,
    BadMagic,
    BadPredictor,
    DimensionOverflow,
    TrailingData,
    TruncatedPayload,
    UnsupportedVersion,
)

MAGIC = b"FPCX"
VERSION = 1
HEADER = struct.Struct("<4sBBIH")
HEADER_SIZE = HEADER.size  # 12
PREDICTOR_DELTA = 0
PREDICTOR_LINEAR = 1
PREDICTORS = (PREDICTOR_DELTA, PREDICTOR_LINEAR)

CODE_BITS = 5
ESCAPE = 31
COUNT_LIMIT = 1 << 16
MAX_ROWS = (1 << 32) - 1
MAX_COLS = 65535
# decoder-side allocation guard; 2^26 cells is ~320 MiB of working memory
MAX_DECODE_CELLS = 1 << 26

_TOP = 0xFFFFFFFF
_HALF = 0x80000000
_QUARTER = 0x40000000
_THREE_QUARTER = 0xC0000000

# decoder status codes
_OK = 0
_DESYNC = 1
_TRUNCATED = 2


def float_to_ordered(bits):
    """Map float32 bit patterns to unsigned integers preserving float order.

    Accepts a Python int or a uint32 array.
    """
    if isinstance(bits, np.ndarray):
        bits = bits.astype(np.uint32, copy=False)
        neg = (bits >> np.uint32(31)).astype(bool)
        return np.where(neg, ~bits, bits | np.uint32(_HALF)).astype(np.uint32)
    bits &= _TOP
    return (~bits & _TOP) if bits & _HALF else bits | _HALF


def ordered_to_float(u):
    """Inverse of :func:`float_to_ordered`."""
    if isinstance(u, np.ndarray):
        u = u.astype(np.uint32, copy=False)
        pos = (u >> np.uint32(31)).astype(bool)
        return np.where(pos, u & np.uint32(0x7FFFFFFF), ~u).astype(np.uint32)
    u &= _TOP
    return u & 0x7FFFFFFF if u & _HALF else ~u & _TOP


@numba.njit(cache=True, nogil=True)
def _put_bit(buf, nbits, bit):
    if bit:
        buf[nbits >> 3] |= np.uint8(0x80 >> (nbits & 7))
    return nbits + 1


@numba.njit(cache=True, nogil=True)
def _encode_kernel(ordered, predictor):
    rows, cols = ordered.shape
    n = rows * cols
    # each binary decision costs at most ~17 bits with counts capped at 2^16
    ac = np.zeros(n * CODE_BITS * 17 // 8 + 16, dtype=np.uint8)
    raw = np.zeros(n * 4 + 8, dtype=np.uint8)
    c0 = np.ones((cols, CODE_BITS), dtype=np.int64)
    c1 = np.ones((cols, CODE_BITS), dtype=np.int64)
    low = np.int64(0)
    high = np.int64(_TOP)
    pending = 0
    acbits = 0
    rawbits = 0
    for i in range(rows):
        for c in range(cols):
            v = np.int64(ordered[i, c])
            if predictor == 0:
                p = np.int64(ordered[i - 1, c]) if i >= 1 else np.int64(0)
            else:
                if i >= 2:
                    p = (2 * np.int64(ordered[i - 1, c]) - np.int64(ordered[i - 2, c])) & _TOP
                else:
                    p = np.int64(0)
            r = v ^ p
            k = 0
            x = r
            while x:
                k += 1
                x >>= 1
            code = ESCAPE if k >= ESCAPE else k
            for pos in range(CODE_BITS):
                bit = (code >> (CODE_BITS - 1 - pos)) & 1
                a = c0[c, pos]
                b = c1[c, pos]
                span = high - low + 1
                split = low + (span * a) // (a + b) - 1
                if bit == 0:
                    high = split
                    c0[c, pos] = a + 1
                else:
                    low = split + 1
                    c1[c, pos] = b + 1
                if c0[c, pos] + c1[c, pos] >= COUNT_LIMIT:
                    c0[c, pos] = (c0[c, pos] + 1) >> 1
                    c1[c, pos] = (c1[c, pos] + 1) >> 1
                while True:
                    if high < _HALF:
                        acbits = _put_bit(ac, acbits, 0)
                        while pending > 0:
                            acbits = _put_bit(ac, acbits, 1)
                            pending -= 1
                    elif low >= _HALF:
                        acbits = _put_bit(ac, acbits, 1)
                        while pending > 0:
                            acbits = _put_bit(ac, acbits, 0)
                            pending -= 1
                        low -= _HALF
                        high -= _HALF
                    elif low >= _QUARTER and high < _THREE_QUARTER:
                        pending += 1
                        low -= _QUARTER
                        high -= _QUARTER
                    else:
                        break
                    low = (low << 1) & _TOP
                    high = ((high << 1) & _TOP) | 1
            if code == ESCAPE:
                nraw = 32
            elif code >= 2:
                nraw = code - 1
            else:
                nraw = 0
            for j in range(nraw - 1, -1, -1):
                rawbits = _put_bit(raw, rawbits, (r >> j) & 1)
    if n > 0:
        pending += 1
        if low < _QUARTER:
            acbits = _put_bit(ac, acbits, 0)
            while pending > 0:
                acbits = _put_bit(ac, acbits, 1)
                pending -= 1
        else:
            acbits = _put_bit(ac, acbits, 1)
            while pending > 0:
                acbits = _put_bit(ac, acbits, 0)
                pending -= 1
    return ac[: (acbits + 7) >> 3], raw[: (rawbits + 7) >> 3]


@numba.njit(cache=True, nogil=True)
def _decode_kernel(buf, start, ac_len, rows, cols, predictor):
    """Return (float bit patterns, end offset, status)."""
    out = np.zeros((rows, cols), dtype=np.uint32)
    n = rows * cols
    codes = np.zeros(n, dtype=np.uint8)
    ac_end_bit = (start + ac_len) * 8
    # a valid stream never reads more than 30 bits past its end
    limit_bit = ac_end_bit + 32
    pos_bit = start * 8
    c0 = np.ones((cols, CODE_BITS), dtype=np.int64)
    c1 = np.ones((cols, CODE_BITS), dtype=np.int64)
    low = np.int64(0)
    high = np.int64(_TOP)
    value = np.int64(0)
    for _ in range(32):
        b = 0
        if pos_bit < ac_end_bit:
            b = (buf[pos_bit >> 3] >> (7 - (pos_bit & 7))) & 1
        pos_bit += 1
        value = (value << 1) | b
    total_raw = 0
    for idx in range(n):
        c = idx % cols
        code = 0
        for pos in range(CODE_BITS):
            a = c0[c, pos]
            bb = c1[c, pos]
            span = high - low + 1
            split = low + (span * a) // (a + bb) - 1
            if value <= split:
                bit = 0
                high = split
                c0[c, pos] = a + 1
            else:
                bit = 1
                low = split + 1
                c1[c, pos] = bb + 1
            if c0[c, pos] + c1[c, pos] >= COUNT_LIMIT:
                c0[c, pos] = (c0[c, pos] + 1) >> 1
                c1[c, pos] = (c1[c, pos] + 1) >> 1
            code = (code << 1) | bit
            while True:
                if high < _HALF:
                    pass
                elif low >= _HALF:
                    low -= _HALF
                    high -= _HALF
                    value -= _HALF
                elif low >= _QUARTER and high < _THREE_QUARTER:
                    low -= _QUARTER
                    high -= _QUARTER
                    value -= _QUARTER
                else:
                    break
                low = (low << 1) & _TOP
                high = ((high << 1) & _TOP) | 1
                b = 0
                if pos_bit < ac_end_bit:
                    b = (buf[pos_bit >> 3] >> (7 - (pos_bit & 7))) & 1
                pos_bit += 1
                if pos_bit > limit_bit:
                    return out, 0, _DESYNC
                value = (value << 1) | b
        codes[idx] = code
        if code == ESCAPE:
            total_raw += 32
        elif code >= 2:
            total_raw += code - 1
    raw_start = start + ac_len
    end = raw_start + ((total_raw + 7) >> 3)
    if end > buf.shape[0]:
        return out, 0, _TRUNCATED
    rbit = raw_start * 8
    prev1 = np.zeros(cols, dtype=np.int64)
    prev2 = np.zeros(cols, dtype=np.int64)
    for idx in range(n):
        i = idx // cols
        c = idx % cols
        code = codes[idx]
        if code == ESCAPE:
            r = np.int64(0)
            for _ in range(32):
                r = (r << 1) | ((buf[rbit >> 3] >> (7 - (rbit & 7))) & 1)
                rbit += 1
        elif code == 0:
            r = np.int64(0)
        else:
            r = np.int64(1)
            for _ in range(code - 1):
                r = (r << 1) | ((buf[rbit >> 3] >> (7 - (rbit & 7))) & 1)
                rbit += 1
        if predictor == 0:
            p = prev1[c] if i >= 1 else np.int64(0)
        else:
            p = ((2 * prev1[c] - prev2[c]) & _TOP) if i >= 2 else np.int64(0)
        u = (r ^ p) & _TOP
        prev2[c] = prev1[c]
        prev1[c] = u
        # ordered -> float bits
        if u & _HALF:
            out[i, c] = np.uint32(u & 0x7FFFFFFF)
        else:
            out[i, c] = np.uint32(~u & _TOP)
    return out, end, _OK


def _as_float_matrix(matrix) -> np.ndarray:
    arr = np.asarray(matrix)
    if arr.dtype != np.float32:
        arr = arr.astype(np.float32)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D matrix, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


def encode(matrix, predictor: int = PREDICTOR_DELTA) -> bytes:
    """Compress a 2D float32 matrix into a self-describing block."""
    if predictor not in PREDICTORS:
        raise BadPredictor(f"unknown predictor id {predictor}")
    arr = _as_float_matrix(matrix)
    rows, cols = arr.shape
    if rows > MAX_ROWS or cols > MAX_COLS:
        raise DimensionOverflow(f"matrix {rows}x{cols} exceeds block limits")
    header = HEADER.pack(MAGIC, VERSION, predictor, rows, cols)
    if rows * cols == 0:
        return header
    ordered = float_to_ordered(arr.view(np.uint32))
    ac, raw = _encode_kernel(ordered, predictor)
    return b"".join((header, struct.pack("<I", len(ac)), ac.tobytes(), raw.tobytes()))


def decode_prefix(
    buf, offset: int = 0, max_cells: int = MAX_DECODE_CELLS
) -> tuple[np.ndarray, int]:
    """Decode the block starting at ``offset``; return (matrix, end offset)."""
    data = np.frombuffer(buf, dtype=np.uint8)
    if bytes(data[offset : offset + 4]) != MAGIC:
        raise BadMagic("not an FPCX block")
    if len(data) - offset < HEADER_SIZE:
        raise TruncatedPayload("block shorter than its header")
    magic, version, predictor, rows, cols = HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise BadMagic(f"bad block magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported block version {version}")
    if predictor not in PREDICTORS:
        raise BadPredictor(f"unknown predictor id {predictor}")
    pos = offset + HEADER_SIZE
    if rows * cols == 0:
        return np.zeros((rows, cols), dtype=np.float32), pos
    if len(data) - pos < 4:
        raise TruncatedPayload("missing arithmetic section length")
    (ac_len,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    if ac_len > len(data) - pos:
        raise TruncatedPayload("arithmetic section runs past end of input")
    n = rows * cols
    if n > max_cells:
        raise DimensionOverflow(f"block of {n} values exceeds decode limit {max_cells}")
    # a maximally skewed model still spends >1e-4 coded bits per value
    if n > (ac_len * 8 + 64) * 10_000:
        raise ArithDecoderDesync("arithmetic section too short for matrix size")
    bits, end, status = _decode_kernel(data, pos, ac_len, rows, cols, predictor)
    if status == _DESYNC:
        raise ArithDecoderDesync("arithmetic section exhausted before all residuals")
    if status == _TRUNCATED:
        raise TruncatedPayload("raw bit section runs past end of input")
    return bits.view(np.float32), end


def decode(block) -> np.ndarray:
    """Decode exactly one block; trailing bytes are an error."""
    matrix, end = decode_prefix(block)
    if end != len(block):
        raise TrailingData(f"{len(block) - end} bytes after end of block")
    return matrix


def block_shape(block) -> tuple[int, int]:
    if len(block) < HEADER_SIZE or bytes(block[:4]) != MAGIC:
        raise BadMagic("not an FPCX block")
    _, _, _, rows, cols = HEADER.unpack_from(block, 0)
    return rows, cols


def choose_predictor(matrix) -> int:
    """Return the predictor giving the smaller block; ties go to delta."""
    return choose_and_encode(matrix)[0]


def choose_and_encode(matrix) -> tuple[int, bytes]:
    arr = _as_float_matrix(matrix)
    delta = encode(arr, PREDICTOR_DELTA)
    linear = encode(arr, PREDICTOR_LINEAR)
    if len(linear) < len(delta):
        return PREDICTOR_LINEAR, linear
    return PREDICTOR_DELTA, delta
