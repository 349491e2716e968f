"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 parse or validation failure,
3 I/O failure. Human output goes to stdout, logs to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .container import read_xror, validate_schema, write_xror
from .errors import BadKey, XrorError
from .exporters import export_bvh, export_json, export_mvnx
from .formats import EXTENSIONS, Format, parse_any, serialize_bsor, serialize_ssdat, serialize_tilt, sniff_format
from .pipeline.anonymize import KEY_ENV, anonymize, key_from_env, parse_key
from .pipeline.corpus import corpus_stats, pack_shards, parallel_map, prepare, write_corpus
from .pipeline.report import bench
from .pipeline.synth import PROFILES, profile_by_name, synth
from .validation import ValidationReport, validate_recording

log = logging.getLogger("xror")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3

TARGETS = {
    "xror": (".xror", write_xror),
    "bvh": (".bvh", export_bvh),
    "mvnx": (".mvnx", export_mvnx),
    "json": (".json", export_json),
    "bsor": (".bsor", serialize_bsor),
}
SYNTH_SOURCES = {
    "bsor": (Format.BSOR, serialize_bsor),
    "dat": (Format.SSDAT, serialize_ssdat),
    "tilt": (Format.TILT, serialize_tilt),
}
SOURCE_SUFFIXES = {".bsor", ".dat", ".tilt", ".xror"}


class UsageError(Exception):
    pass


def _inputs(path: Path) -> list[Path]:
    if not path.exists():
        raise FileNotFoundError(path)
    if path.is_file():
        return [path]
    files = sorted(p for p in path.rglob("*") if p.is_file() and p.suffix.lower() in SOURCE_SUFFIXES)
    if not files:
        raise UsageError(f"no recordings under {path}")
    return files


def _key(args) -> bytes | None:
    if getattr(args, "anon_key", None):
        return parse_key(args.anon_key)
    return key_from_env()


def cmd_convert(args) -> int:
    src = Path(args.inp)
    files = _inputs(src)
    key = _key(args)
    suffix, write = TARGETS[args.to]
    out = Path(args.out)
    single = src.is_file() and not out.is_dir()

    def target(path: Path) -> Path:
        if single:
            return out
        rel = path.relative_to(src) if src.is_dir() else Path(path.name)
        return (out / rel).with_suffix(suffix)

    def one(path: Path):
        try:
            rec = parse_any(path.read_bytes(), args.fmt)
            if args.no_validate:
                if key is not None:
                    rec = anonymize(rec, key)
            else:
                rec, report = prepare(rec, key)
                if rec is None:
                    return path, f"rejected: {', '.join(report.reasons)}"
            data = write(rec)
            dest = target(path)
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(data)
            return path, None
        except (XrorError, OSError) as exc:
            return path, f"{type(exc).__name__}: {exc}"

    results = parallel_map(one, files, args.jobs)
    failed = 0
    for path, err in results:
        if err:
            failed += 1
            log.warning("%s: %s", path, err)
    print(f"converted={len(files) - failed} failed={failed}")
    return EXIT_INVALID if failed == len(files) else EXIT_OK


def _validate_file(path: Path) -> dict:
    try:
        data = path.read_bytes()
    except OSError as exc:
        return {"path": str(path), "format": None, "verdict": "REJECT", "codes": ["IO"], "messages": [str(exc)]}
    report = ValidationReport()
    fmt = sniff_format(data)
    if fmt is Format.XROR:
        report.extend(validate_schema(data))
    if report.accepted:
        try:
            rec = read_xror(data) if fmt is Format.XROR else parse_any(data)
        except XrorError as exc:
            report.add(type(exc).__name__.upper(), str(exc))
        else:
            report.extend(validate_recording(rec))
    return {
        "path": str(path),
        "format": fmt.value,
        "verdict": report.verdict,
        "codes": report.reasons,
        "messages": [v.message for v in report.violations],
    }


def cmd_validate(args) -> int:
    files = _inputs(Path(args.inp))
    rows = [_validate_file(p) for p in files]
    if args.json:
        print(json.dumps({"files": rows}, indent=2, sort_keys=True))
    else:
        for row in rows:
            line = f"{row['verdict']}  {row['path']}"
            if row["codes"]:
                line += "  " + ",".join(row["codes"])
            print(line)
    rejected = sum(r["verdict"] != "ACCEPT" for r in rows)
    print(f"accepted={len(rows) - rejected} rejected={rejected}", file=sys.stderr)
    return EXIT_INVALID if rejected else EXIT_OK


def cmd_bench(args) -> int:
    overrides = {"users": args.users, "duration_sec": args.duration}
    report = bench(args.profile, args.seed, args.out, **overrides)
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for fmt, row in report["sizes"].items():
            print(f"{fmt:5s} total={row['totalBytes']:>12d} mean={row['meanBytes']:>12.1f}")
        gate = report["gate"]
        print(f"xror ratio {gate['ratio']:.4f} (limit {gate['limit']}) {'PASS' if gate['pass'] else 'FAIL'}")
        order = report["sizeOrder"]
        print(f"size order {' > '.join(order['chain'])}: {'holds' if order['holds'] else 'VIOLATED'}")
    ok = report["gate"]["pass"] and report["xrorLossless"]
    return EXIT_OK if ok else EXIT_INVALID


def cmd_pack(args) -> int:
    paths, manifest = pack_shards(args.inp, args.out, args.max_users, args.jobs)
    for path, (_, ids) in zip(paths, manifest.shards):
        print(f"{path.name} users={len(ids)}")
    return EXIT_OK


def cmd_stats(args) -> int:
    root = Path(args.inp)
    if not root.is_dir():
        raise FileNotFoundError(root)
    stats = corpus_stats(root)
    print(json.dumps(stats.to_dict(), indent=2, sort_keys=True) if args.json else stats.to_text())
    return EXIT_OK


def cmd_synth(args) -> int:
    profile = profile_by_name(args.profile, seed=args.seed, users=args.users, duration_sec=args.duration)
    recs = synth(profile)
    out = Path(args.out)
    if args.to == "xror":
        key = _key(args)
        if key is None:
            raise UsageError(f"--to xror writes an anonymized corpus; pass --anon-key or set {KEY_ENV}")
        ready = [prepare(r, key)[0] for r in recs]
        write_corpus([r for r in ready if r is not None], out, args.jobs)
    else:
        fmt, writer = SYNTH_SOURCES[args.to]
        out.mkdir(parents=True, exist_ok=True)
        for i, rec in enumerate(recs):
            (out / f"rec-{i:05d}{EXTENSIONS[fmt]}").write_bytes(writer(rec))
    print(f"wrote {len(recs)} recordings to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xror", description="Convert, validate and package XR motion recordings.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convert", help="convert recordings between formats")
    c.add_argument("--in", dest="inp", required=True, help="input file or directory (recursive)")
    c.add_argument("--out", required=True, help="output file, or directory for batch input")
    c.add_argument("--to", choices=sorted(TARGETS), default="xror")
    c.add_argument("--from", dest="fmt", choices=["BSOR", "SSDAT", "TILT", "XROR"], help="skip format sniffing")
    c.add_argument("--anon-key", help=f"64 hex chars; defaults to ${KEY_ENV}")
    c.add_argument("--no-validate", action="store_true", help="convert without the accept/reject check")
    c.add_argument("--jobs", type=int, default=1)
    c.set_defaults(func=cmd_convert)

    v = sub.add_parser("validate", help="check files against the schema and validation policy")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="size benchmark on a synthetic corpus")
    b.add_argument("--profile", choices=sorted(PROFILES), default="beatsaber-default")
    b.add_argument("--seed", type=int)
    b.add_argument("--out", help="directory for report.json, sizes.csv, sizes.png, timing.json")
    b.add_argument("--users", type=int, help="override the profile's user count")
    b.add_argument("--duration", type=float, help="override the profile's duration in seconds")
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bench)

    k = sub.add_parser("pack", help="pack a corpus into zip shards")
    k.add_argument("--in", dest="inp", required=True, nargs="+", help="corpus root(s)")
    k.add_argument("--out", required=True)
    k.add_argument("--max-users", type=int, default=1000)
    k.add_argument("--jobs", type=int, default=1)
    k.set_defaults(func=cmd_pack)

    s = sub.add_parser("stats", help="corpus statistics")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_stats)

    y = sub.add_parser("synth", help="generate a synthetic corpus")
    y.add_argument("--profile", choices=sorted(PROFILES), default="beatsaber-default")
    y.add_argument("--seed", type=int)
    y.add_argument("--users", type=int)
    y.add_argument("--duration", type=float)
    y.add_argument("--to", choices=["bsor", "dat", "tilt", "xror"], default="bsor")
    y.add_argument("--anon-key")
    y.add_argument("--jobs", type=int, default=1)
    y.add_argument("--out", required=True)
    y.set_defaults(func=cmd_synth)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "jobs", 1) < 1:
        log.error("--jobs must be at least 1")
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except BadKey as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except XrorError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
