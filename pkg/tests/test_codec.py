import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xror import codec
from xror.errors import (
    ArithDecoderDesync,
    BadMagic,
    BadPredictor,
    CodecError,
    DimensionOverflow,
    TrailingData,
    TruncatedPayload,
    UnsupportedVersion,
)

from .helpers import fuzz_matrix
from .oracle_fpcx import OracleError, oracle_decode


def test_ordered_map_examples():
    assert codec.float_to_ordered(0x00000000) == 0x80000000
    assert codec.float_to_ordered(0x80000000) == 0x7FFFFFFF


def test_ordered_map_bijective_on_random_sample():
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2**32, size=10**6, dtype=np.uint64).astype(np.uint32)
    ordered = codec.float_to_ordered(bits)
    assert np.array_equal(codec.ordered_to_float(ordered), bits)
    assert np.unique(ordered).size == np.unique(bits).size


def test_ordered_map_monotone_over_total_order():
    values = np.array(
        [-np.inf, -3.0e38, -1.0, -1e-45, -0.0, 0.0, 1e-45, 1.0, 3.0e38, np.inf],
        dtype=np.float32,
    )
    ordered = codec.float_to_ordered(values.view(np.uint32)).astype(np.int64)
    assert np.all(np.diff(ordered) > 0)


@given(st.integers(0, 2**32 - 1))
def test_ordered_scalar_matches_vector(bits):
    vec = codec.float_to_ordered(np.array([bits], dtype=np.uint32))[0]
    assert codec.float_to_ordered(bits) == int(vec)
    assert codec.ordered_to_float(codec.float_to_ordered(bits)) == bits


def test_header_is_twelve_bytes():
    block = codec.encode(np.ones((3, 2), np.float32))
    magic, version, pred, rows, cols = struct.unpack_from("<4sBBIH", block)
    assert (magic, version, pred, rows, cols) == (b"FPCX", 1, 0, 3, 2)
    assert codec.HEADER_SIZE == 12


def test_empty_matrix_has_empty_payload():
    block = codec.encode(np.zeros((0, 5), np.float32))
    assert len(block) == 12
    out = codec.decode(block)
    assert out.shape == (0, 5)


def test_constant_column_compresses_below_200_bytes():
    block = codec.encode(np.full((1000, 1), 1.0, np.float32))
    assert len(block) - codec.HEADER_SIZE < 200


def test_random_bits_are_incompressible():
    rng = np.random.default_rng(7)
    m = rng.integers(0, 2**32, (1000, 22), dtype=np.uint64).astype(np.uint32).view(np.float32)
    assert len(codec.encode(m)) >= 0.95 * m.nbytes


def _ramp():
    return np.arange(1000, dtype=np.float32)[:, None]


def test_ramp_residuals_vanish_except_at_exponent_boundaries():
    # independent residual count: integers 0..999 as floats are linear in
    # ordered space within each binade, so only binade starts mispredict
    ramp = _ramp()
    rows, cols, flat, _ = oracle_decode(codec.encode(ramp, 1))
    assert flat == list(ramp.view(np.uint32)[:, 0])
    ordered = [(b | 0x80000000) for b in ramp.view(np.uint32)[:, 0].tolist()]
    nonzero = 2  # the first two rows are predicted from zero
    for i in range(2, len(ordered)):
        if ordered[i] != (2 * ordered[i - 1] - ordered[i - 2]) % 2**32:
            nonzero += 1
    # binades starting at 2, 4, ..., 512
    assert nonzero == 2 + 10
    block1 = codec.encode(ramp, 1)
    block0 = codec.encode(ramp, 0)
    assert len(block1) < len(block0) / 20


@pytest.mark.xfail(strict=True, reason="binade-boundary residuals alone exceed 1% of raw size")
def test_ramp_payload_under_one_percent_beyond_first_two_rows():
    ramp = _ramp()
    payload = len(codec.encode(ramp, 1)) - codec.HEADER_SIZE
    head = len(codec.encode(ramp[:2], 1)) - codec.HEADER_SIZE
    assert payload - head < 0.01 * ramp.nbytes


def test_choose_predictor_examples():
    assert codec.choose_predictor(np.full((100, 3), 2.5, np.float32)) == 0
    assert codec.choose_predictor(_ramp()) == 1
    rng = np.random.default_rng(3)
    m = rng.normal(size=(200, 4)).astype(np.float32)
    assert codec.choose_predictor(m) == codec.choose_predictor(m.copy())


@pytest.mark.parametrize("predictor", codec.PREDICTORS)
def test_fuzzed_round_trip(predictor):
    rng = np.random.default_rng(100 + predictor)
    for _ in range(300):
        m = fuzz_matrix(rng)
        out = codec.decode(codec.encode(m, predictor))
        assert out.shape == m.shape
        assert out.tobytes() == m.tobytes()


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(0, 2**32 - 1), min_size=0, max_size=60),
    st.integers(1, 4),
    st.sampled_from(codec.PREDICTORS),
)
def test_round_trip_property(words, cols, predictor):
    rows = len(words) // cols
    m = np.array(words[: rows * cols], dtype=np.uint32).reshape(rows, cols).view(np.float32)
    assert codec.decode(codec.encode(m, predictor)).tobytes() == m.tobytes()


def test_deterministic_bytes():
    rng = np.random.default_rng(5)
    m = fuzz_matrix(rng, 200, 6)
    assert codec.encode(m, 1) == codec.encode(m.copy(), 1)


def test_concatenated_blocks_decode_independently():
    rng = np.random.default_rng(11)
    mats = [fuzz_matrix(rng, 40, 5) for _ in range(5)]
    buf = b"".join(codec.encode(m, i % 2) for i, m in enumerate(mats))
    offset = 0
    for m in mats:
        out, offset = codec.decode_prefix(buf, offset)
        assert out.tobytes() == m.tobytes()
    assert offset == len(buf)


def test_oracle_agrees_on_fuzzed_blocks():
    rng = np.random.default_rng(12)
    for _ in range(300):
        m = fuzz_matrix(rng, 24, 4)
        block = codec.encode(m, int(rng.integers(0, 2)))
        rows, cols, flat, end = oracle_decode(block)
        assert end == len(block)
        assert flat == m.view(np.uint32).ravel().tolist()


def test_decode_errors():
    good = codec.encode(np.arange(40, dtype=np.float32).reshape(20, 2))
    with pytest.raises(BadMagic):
        codec.decode(b"XXXX" + good[4:])
    with pytest.raises(BadMagic):
        codec.decode(b"")
    with pytest.raises(UnsupportedVersion):
        codec.decode(good[:4] + b"\x02" + good[5:])
    with pytest.raises(BadPredictor):
        codec.decode(good[:5] + b"\x07" + good[6:])
    with pytest.raises(TruncatedPayload):
        codec.decode(good[:10])
    with pytest.raises(TruncatedPayload):
        codec.decode(good[:-1])
    with pytest.raises(TrailingData):
        codec.decode(good + b"\x00")
    with pytest.raises(BadPredictor):
        codec.encode(np.zeros((1, 1), np.float32), 2)


def test_desync_when_coded_section_is_empty():
    good = codec.encode(np.arange(400, dtype=np.float32).reshape(200, 2) * 1.37)
    bogus = good[:12] + struct.pack("<I", 0) + good[16:]
    with pytest.raises(CodecError):
        codec.decode(bogus)
    huge_header = struct.pack("<4sBBIH", b"FPCX", 1, 0, 2**32 - 1, 65535) + good[12:]
    with pytest.raises((ArithDecoderDesync, DimensionOverflow)):
        codec.decode(huge_header)


def test_dimension_overflow():
    m = np.zeros((1, 70000), np.float32)
    with pytest.raises(DimensionOverflow):
        codec.encode(m)


def test_bit_flip_mutations_never_crash():
    rng = np.random.default_rng(21)
    m = fuzz_matrix(rng, 50, 4)
    while m.size == 0:
        m = fuzz_matrix(rng, 50, 4)
    block = bytearray(codec.encode(m, 1))
    for _ in range(2000):
        mutated = bytearray(block)
        bit = int(rng.integers(0, len(mutated) * 8))
        mutated[bit // 8] ^= 0x80 >> (bit % 8)
        try:
            out = codec.decode(bytes(mutated))
        except CodecError:
            continue
        # an undetected flip still yields a matrix; the container checksum
        # is what catches it
        assert isinstance(out, np.ndarray)


def test_oracle_rejects_what_production_rejects():
    rng = np.random.default_rng(22)
    m = fuzz_matrix(rng, 30, 3)
    block = codec.encode(m, 0)
    for cut in range(len(block)):
        prod_ok = oracle_ok = True
        try:
            codec.decode_prefix(block[:cut])
        except CodecError:
            prod_ok = False
        try:
            oracle_decode(block[:cut])
        except OracleError:
            oracle_ok = False
        assert prod_ok == oracle_ok
