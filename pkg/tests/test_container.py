import dataclasses
import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xror import bsonlite, codec
from xror.container import SCHEMA_ID, read_xror, validate_schema, write_xror
from xror.errors import (
    BlobCorrupt,
    ContainerError,
    InvalidField,
    InvalidRecording,
    MissingField,
    NotBson,
    StreamShapeMismatch,
    UnsupportedSchema,
)
from xror.formats import Format, sniff_format
from xror.pipeline.synth import SynthProfile, synth

# -- bsonlite ---------------------------------------------------------------

bson_values = st.recursive(
    st.none()
    | st.booleans()
    | st.integers(-(2**63), 2**63 - 1)
    | st.floats(allow_nan=False)
    | st.text(max_size=20)
    | st.binary(max_size=40),
    lambda inner: st.lists(inner, max_size=4)
    | st.dictionaries(st.text(max_size=8).filter(lambda k: "\x00" not in k), inner, max_size=4),
    max_leaves=20,
)


@given(st.dictionaries(st.text(max_size=8).filter(lambda k: "\x00" not in k), bson_values, max_size=6))
@settings(max_examples=200, deadline=None)
def test_bson_round_trip(doc):
    assert bsonlite.loads(bsonlite.dumps(doc)) == doc


def test_bson_matches_reference_encoder():
    bson = pytest.importorskip("bson")
    doc = {"a": 1, "b": 2**40, "c": 1.5, "d": "xé", "e": b"\x00\x01", "f": [True, None], "g": {"h": -1}}
    ours = bsonlite.dumps(doc)
    assert ours == bson.encode(doc)
    back = bson.decode(ours)
    assert back["e"] == b"\x00\x01" and back["b"] == 2**40


def test_bson_int_widths():
    assert bsonlite.dumps({"a": 2**31 - 1})[4] == 0x10
    assert bsonlite.dumps({"a": 2**31})[4] == 0x12


@pytest.mark.parametrize(
    "raw",
    [b"", b"\x05\x00\x00\x00", b"\x05\x00\x00\x00\x01", b"\x06\x00\x00\x00\x00\x00", b"\xff\xff\xff\x7f\x00"],
)
def test_bson_rejects_malformed(raw):
    with pytest.raises(NotBson):
        bsonlite.loads(raw)


def test_bson_depth_limit():
    doc = {}
    inner = doc
    for _ in range(100):
        inner["x"] = {}
        inner = inner["x"]
    with pytest.raises(ValueError):
        bsonlite.dumps(doc)


# -- container --------------------------------------------------------------


@pytest.fixture(scope="module")
def recs():
    return synth(SynthProfile(users=2, duration_sec=3)) + synth(
        SynthProfile(app="tiltbrush", users=2, duration_sec=6, strokes=5)
    )


def test_round_trip_both_apps(recs):
    for rec in recs:
        blob = write_xror(rec)
        assert sniff_format(blob) is Format.XROR
        assert read_xror(blob) == rec


def test_write_is_deterministic(recs):
    assert write_xror(recs[0]) == write_xror(recs[0])


def test_document_layout(recs):
    doc = bsonlite.loads(write_xror(recs[0]))
    assert list(doc) == sorted(doc)
    assert doc["$schema"] == SCHEMA_ID
    assert doc["frames"]["blob"][:4] == b"FPCX"
    assert [e["kind"] for e in doc["events"]] == [e.kind.value for e in recs[0].events]
    assert doc["info"]["userName"] == recs[0].info.user_name


def test_special_floats_survive(recs):
    rec = recs[0]
    data = rec.frames.data.copy()
    bits = data.view(np.uint32)
    bits[0, 1:6] = [0x7FC00001, 0xFF800000, 0x80000000, 0x00000001, 0x7F7FFFFF]
    rec2 = dataclasses.replace(rec, frames=dataclasses.replace(rec.frames, data=data))
    back = read_xror(write_xror(rec2))
    assert back.frames.data.tobytes() == data.tobytes()


def _tamper(rec, fn):
    doc = bsonlite.loads(write_xror(rec))
    fn(doc)
    return bsonlite.dumps(doc)


def test_missing_and_invalid_fields(recs):
    with pytest.raises(MissingField):
        read_xror(_tamper(recs[0], lambda d: d.pop("frames")))
    with pytest.raises(UnsupportedSchema):
        read_xror(_tamper(recs[0], lambda d: d.update({"$schema": "other"})))
    with pytest.raises(InvalidField):
        read_xror(_tamper(recs[0], lambda d: d["info"].update({"timestamp": "soon"})))
    with pytest.raises(NotBson):
        read_xror(b"not bson at all")


def test_crc_and_blob_corruption(recs):
    def flip(d):
        blob = bytearray(d["frames"]["blob"])
        blob[-1] ^= 0x40
        d["frames"]["blob"] = bytes(blob)

    with pytest.raises(BlobCorrupt):
        read_xror(_tamper(recs[0], flip))


def test_shape_mismatch(recs):
    def narrow(d):
        d["frames"]["blob"] = codec.encode(np.zeros((3, 4), np.float32))
        crc = zlib.crc32(d["frames"]["blob"])
        for e in d["events"]:
            crc = zlib.crc32(e["blob"], crc)
        d["crc32"] = crc

    with pytest.raises(StreamShapeMismatch):
        read_xror(_tamper(recs[0], narrow))


def test_write_rejects_bad_structure(recs):
    rec = dataclasses.replace(recs[0], info=dataclasses.replace(recs[0].info, user_id=""))
    with pytest.raises(InvalidRecording):
        write_xror(rec)


def test_validate_schema_never_raises(recs):
    good = write_xror(recs[0])
    assert validate_schema(good).accepted
    for bad in (b"", b"junk", good[:-3], _tamper(recs[0], lambda d: d.pop("info"))):
        report = validate_schema(bad)
        assert not report.accepted
    assert "MISSING_FIELD" in validate_schema(_tamper(recs[0], lambda d: d.pop("info"))).reasons


def test_container_errors_share_base():
    assert issubclass(BlobCorrupt, ContainerError) and issubclass(NotBson, ContainerError)


def test_truncations_raise_cleanly(recs):
    blob = write_xror(recs[2])
    for cut in range(0, len(blob), max(1, len(blob) // 200)):
        with pytest.raises(ContainerError):
            read_xror(blob[:cut])


def test_length_prefix_matches(recs):
    blob = write_xror(recs[1])
    assert struct.unpack_from("<i", blob)[0] == len(blob)
