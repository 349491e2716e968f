import dataclasses

import numpy as np

from xror.container import write_xror
from xror.formats import serialize_bsor, serialize_ssdat, serialize_tilt
from xror.model import EventStream, FrameStream
from xror.pipeline.synth import SynthProfile, synth

SPECIAL_BITS = np.array(
    [
        0x00000000,  # +0
        0x80000000,  # -0
        0x7F800000,  # +inf
        0xFF800000,  # -inf
        0x7FC00000,  # quiet NaN
        0x7FC00001,  # NaN with payload
        0xFFFFFFFF,  # negative NaN, all payload bits
        0x7F800001,  # signalling NaN
        0x00000001,  # smallest denormal
        0x807FFFFF,  # largest negative denormal
        0x00400000,  # mid denormal
        0x7F7FFFFF,  # max finite
        0x3F800000,  # 1.0
    ],
    dtype=np.uint32,
)


def fuzz_matrix(rng: np.random.Generator, max_rows: int = 64, max_cols: int = 8) -> np.ndarray:
    """Random float32 matrix mixing smooth signals, raw bits and specials."""
    rows = int(rng.integers(0, max_rows + 1))
    cols = int(rng.integers(1, max_cols + 1))
    style = rng.integers(0, 4)
    if style == 0:
        bits = rng.integers(0, 2**32, size=(rows, cols), dtype=np.uint64).astype(np.uint32)
    elif style == 1:
        t = np.arange(rows)[:, None] / 90.0
        smooth = np.sin(t * rng.uniform(0.1, 5, cols)) * rng.uniform(0.01, 100, cols)
        bits = smooth.astype(np.float32).view(np.uint32)
    elif style == 2:
        bits = rng.choice(SPECIAL_BITS, size=(rows, cols))
    else:
        smooth = np.cumsum(rng.normal(0, 1, (rows, cols)), axis=0).astype(np.float32)
        bits = smooth.view(np.uint32).copy()
        mask = rng.random((rows, cols)) < 0.2
        bits[mask] = rng.choice(SPECIAL_BITS, size=int(mask.sum()))
    return np.ascontiguousarray(bits.reshape(rows, cols)).view(np.float32)


FIXTURE_BYTES = 10 * 1024


def _slice(rec, n):
    frames = FrameStream(rec.frames.columns, rec.frames.data[:n])
    end = float(rec.frames.data[n - 1, 0]) if n else -1.0
    events = []
    for ev in rec.events:
        events.append(EventStream(ev.kind, ev.data[ev.data[:, 0] <= end], ev.columns))
    return dataclasses.replace(rec, frames=frames, events=tuple(events))


def sized_fixture(fmt: str, target: int = FIXTURE_BYTES) -> bytes:
    """Largest serialization of a synthetic recording that fits in ``target`` bytes."""
    if fmt == "tilt":
        rec = synth(SynthProfile(app="tiltbrush", users=1, duration_sec=30, strokes=12))[0]
        write = serialize_tilt
    else:
        rec = synth(SynthProfile(users=1, duration_sec=30))[0]
        write = {"bsor": serialize_bsor, "dat": serialize_ssdat, "xror": write_xror}[fmt]
    lo, hi = 1, rec.frames.n_rows
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if len(write(_slice(rec, mid))) <= target:
            lo = mid
        else:
            hi = mid - 1
    return write(_slice(rec, lo))
