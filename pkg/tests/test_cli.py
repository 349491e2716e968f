import dataclasses
import json
import zipfile

import numpy as np
import pytest

from xror.cli import main
from xror.container import read_xror
from xror.formats import parse_bsor, serialize_bsor, serialize_tilt
from xror.model import FrameStream
from xror.pipeline.synth import SynthProfile, synth

KEY = "42" * 32


@pytest.fixture(scope="module")
def mixed(tmp_path_factory):
    root = tmp_path_factory.mktemp("mixed")
    for i, rec in enumerate(synth(SynthProfile(users=2, duration_sec=3))):
        (root / f"bs{i}.bsor").write_bytes(serialize_bsor(rec))
    tilt = synth(SynthProfile(app="tiltbrush", users=1, duration_sec=10, strokes=3))[0]
    (root / "sub").mkdir()
    (root / "sub" / "tb.tilt").write_bytes(serialize_tilt(tilt))
    return root


def test_convert_single_file_round_trip(mixed, tmp_path, capsys):
    out = tmp_path / "one.xror"
    assert main(["convert", "--in", str(mixed / "bs0.bsor"), "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "converted=1 failed=0"
    original = parse_bsor((mixed / "bs0.bsor").read_bytes())
    assert read_xror(out.read_bytes()) == original


def test_convert_bvh_mixed_corpus(mixed, tmp_path, capsys, caplog):
    code = main(["convert", "--in", str(mixed), "--out", str(tmp_path / "bvh"), "--to", "bvh"])
    captured = capsys.readouterr()
    assert code == 0
    assert "converted=2 failed=1" in captured.out
    assert "WrongSchema" in caplog.text
    assert sorted(p.name for p in (tmp_path / "bvh").rglob("*.bvh")) == ["bs0.bvh", "bs1.bvh"]


def test_convert_with_key_and_jobs(mixed, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["convert", "--in", str(mixed), "--out", str(a), "--anon-key", KEY]) == 0
    assert main(["convert", "--in", str(mixed), "--out", str(b), "--anon-key", KEY, "--jobs", "3"]) == 0
    files = sorted(p.relative_to(a) for p in a.rglob("*.xror"))
    assert len(files) == 3
    for rel in files:
        data = (a / rel).read_bytes()
        assert data == (b / rel).read_bytes()
        assert b"player_" not in data
        assert read_xror(data).info.anonymized


def test_convert_key_from_env(mixed, tmp_path, monkeypatch):
    monkeypatch.setenv("XROR_ANON_KEY", KEY)
    out = tmp_path / "e.xror"
    assert main(["convert", "--in", str(mixed / "bs1.bsor"), "--out", str(out)]) == 0
    assert read_xror(out.read_bytes()).info.user_name is None


def test_convert_exit_codes(tmp_path, mixed):
    assert main(["convert", "--in", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 3
    junk = tmp_path / "junk.bsor"
    junk.write_bytes(b"\x00" * 100)
    assert main(["convert", "--in", str(junk), "--out", str(tmp_path / "o.xror")]) == 2
    assert main(["convert", "--in", str(mixed), "--out", str(tmp_path / "o"), "--anon-key", "xyz"]) == 1
    assert main(["convert", "--bogus"]) == 1


def test_validate(mixed, tmp_path, capsys):
    assert main(["validate", "--in", str(mixed)]) == 0
    rec = parse_bsor((mixed / "bs0.bsor").read_bytes())
    data = rec.frames.data.copy()
    data[3, 2] = np.nan
    bad = tmp_path / "nan.bsor"
    bad.write_bytes(serialize_bsor(dataclasses.replace(rec, frames=FrameStream(rec.frames.columns, data))))
    capsys.readouterr()
    assert main(["validate", "--in", str(bad), "--json"]) == 2
    doc = json.loads(capsys.readouterr().out)
    assert doc["files"][0]["codes"] == ["NON_FINITE"]
    (tmp_path / "empty").mkdir()
    assert main(["validate", "--in", str(tmp_path / "empty")]) == 1


def test_validate_corrupt_xror(mixed, tmp_path, capsys):
    out = tmp_path / "x.xror"
    main(["convert", "--in", str(mixed / "bs0.bsor"), "--out", str(out)])
    raw = bytearray(out.read_bytes())
    raw[-20] ^= 0xFF
    out.write_bytes(bytes(raw))
    capsys.readouterr()
    assert main(["validate", "--in", str(out)]) == 2
    assert "REJECT" in capsys.readouterr().out


def test_synth_pack_stats(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert main(["synth", "--users", "5", "--duration", "2", "--to", "xror", "--anon-key", KEY, "--out", str(corpus)]) == 0
    capsys.readouterr()
    assert main(["stats", "--in", str(corpus), "--json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["users"] == len([p for p in corpus.iterdir() if p.is_dir()]) == 5
    assert main(["pack", "--in", str(corpus), "--out", str(tmp_path / "s1"), "--max-users", "2"]) == 0
    assert main(["pack", "--in", str(corpus), "--out", str(tmp_path / "s2"), "--max-users", "2", "--jobs", "2"]) == 0
    zips = sorted((tmp_path / "s1").glob("*.zip"))
    assert len(zips) == 3
    for z in zips:
        assert z.read_bytes() == (tmp_path / "s2" / z.name).read_bytes()
        zipfile.ZipFile(z).testzip()


def test_synth_requires_key_for_xror(tmp_path, monkeypatch):
    monkeypatch.delenv("XROR_ANON_KEY", raising=False)
    assert main(["synth", "--users", "1", "--duration", "2", "--to", "xror", "--out", str(tmp_path)]) == 1


def test_bench_cli(tmp_path, capsys):
    args = ["bench", "--users", "2", "--duration", "5", "--out", str(tmp_path / "r")]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "mvnx > bvh > bsor > xror: holds" in out
    for name in ("report.json", "sizes.csv", "sizes.png", "timing.json"):
        assert (tmp_path / "r" / name).exists()
    assert main(["bench", "--profile", "nope"]) == 1


def test_stats_missing_dir(tmp_path):
    assert main(["stats", "--in", str(tmp_path / "nope")]) == 3
