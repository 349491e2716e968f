"""Naive reference decoder for FPCX blocks.

Deliberately shares no code with ``xror.codec``: plain Python integers, one
bit per call, no numpy in the hot path. Used only as a test oracle.
"""

import struct


class OracleError(Exception):
    pass


class Bits:
    def __init__(self, data, start, stop, overrun_limit=None):
        self.data = data
        self.pos = start * 8
        self.stop = stop * 8
        self.overrun_limit = overrun_limit

    def take(self):
        if self.pos < self.stop:
            byte = self.data[self.pos // 8]
            bit = (byte >> (7 - self.pos % 8)) & 1
        elif self.overrun_limit is None:
            raise OracleError("raw section exhausted")
        else:
            bit = 0
        self.pos += 1
        if self.overrun_limit is not None and self.pos > self.stop + self.overrun_limit:
            raise OracleError("coded section exhausted")
        return bit


def unorder(u):
    if u >= 0x80000000:
        return u - 0x80000000
    return 0xFFFFFFFF - u


def oracle_decode(block):
    """Return (rows, cols, list of float32 bit patterns row-major, length)."""
    if len(block) < 12 or block[:4] != b"FPCX":
        raise OracleError("header")
    version, predictor, rows, cols = struct.unpack("<BBIH", block[4:12])
    if version != 1 or predictor not in (0, 1):
        raise OracleError("version/predictor")
    if rows * cols == 0:
        return rows, cols, [], 12
    if len(block) < 16:
        raise OracleError("ac length")
    ac_len = struct.unpack("<I", block[12:16])[0]
    if 16 + ac_len > len(block):
        raise OracleError("ac section")

    coded = Bits(block, 16, 16 + ac_len, overrun_limit=32)
    counts = {}
    low, high = 0, 0xFFFFFFFF
    value = 0
    for _ in range(32):
        value = value * 2 + coded.take()

    codes = []
    for idx in range(rows * cols):
        col = idx % cols
        code = 0
        for pos in range(5):
            zeros, ones = counts.get((col, pos), (1, 1))
            split = low + (high - low + 1) * zeros // (zeros + ones) - 1
            if value <= split:
                bit, high = 0, split
                zeros += 1
            else:
                bit, low = 1, split + 1
                ones += 1
            if zeros + ones >= 65536:
                zeros, ones = (zeros + 1) // 2, (ones + 1) // 2
            counts[(col, pos)] = (zeros, ones)
            code = code * 2 + bit
            while True:
                if high < 0x80000000:
                    offset = 0
                elif low >= 0x80000000:
                    offset = 0x80000000
                elif low >= 0x40000000 and high < 0xC0000000:
                    offset = 0x40000000
                else:
                    break
                low = (low - offset) * 2
                high = (high - offset) * 2 + 1
                value = (value - offset) * 2 + coded.take()
        codes.append(code)

    raw_bits = sum(32 if c == 31 else max(c - 1, 0) for c in codes)
    raw_start = 16 + ac_len
    end = raw_start + (raw_bits + 7) // 8
    if end > len(block):
        raise OracleError("raw section")
    raw = Bits(block, raw_start, end)

    ordered = [[0] * cols for _ in range(rows)]
    for idx, code in enumerate(codes):
        i, col = divmod(idx, cols)
        if code == 31:
            r = 0
            for _ in range(32):
                r = r * 2 + raw.take()
        elif code == 0:
            r = 0
        else:
            r = 1
            for _ in range(code - 1):
                r = r * 2 + raw.take()
        if predictor == 0:
            pred = ordered[i - 1][col] if i >= 1 else 0
        else:
            pred = (2 * ordered[i - 1][col] - ordered[i - 2][col]) % 2**32 if i >= 2 else 0
        ordered[i][col] = r ^ pred
    flat = [unorder(u) for row in ordered for u in row]
    return rows, cols, flat, end
