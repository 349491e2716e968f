"""Size benchmark over a synthetic corpus.

Writes ``report.json`` (deterministic, schema ``report-1``), ``sizes.csv``,
``sizes.png`` and ``timing.json`` (wall-clock throughput; varies per run).
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..container import read_xror, write_xror
from ..exporters import export_bvh, export_json, export_mvnx
from ..formats import serialize_bsor, serialize_ssdat, serialize_tilt
from .synth import SynthProfile, profile_by_name, synth

REPORT_SCHEMA = "report-1"
RATIO_GATE = 0.70
GATED_PROFILE = "beatsaber-default"


def _writers(app: str) -> dict:
    if app == "beatsaber":
        return {
            "bsor": serialize_bsor,
            "dat": serialize_ssdat,
            "xror": write_xror,
            "bvh": export_bvh,
            "mvnx": export_mvnx,
            "json": export_json,
        }
    return {"tilt": serialize_tilt, "xror": write_xror, "mvnx": export_mvnx, "json": export_json}


def _source_format(app: str) -> str:
    return "bsor" if app == "beatsaber" else "tilt"


def run_bench(profile: SynthProfile, name: str = "custom") -> tuple[dict, dict]:
    """Return (report, timing). The report depends only on the profile."""
    recs = synth(profile)
    writers = _writers(profile.app)
    totals = {fmt: 0 for fmt in writers}
    seconds = {fmt: 0.0 for fmt in writers}
    decode_seconds = 0.0
    lossless = True
    for rec in recs:
        for fmt, write in writers.items():
            t0 = time.perf_counter()
            out = write(rec)
            seconds[fmt] += time.perf_counter() - t0
            totals[fmt] += len(out)
            if fmt == "xror":
                t0 = time.perf_counter()
                back = read_xror(out)
                decode_seconds += time.perf_counter() - t0
                lossless = lossless and back == rec
    n = len(recs)
    source = _source_format(profile.app)
    ratio = totals["xror"] / totals[source] if totals[source] else float("nan")
    chain = [f for f in ("mvnx", "bvh", source, "xror") if f in totals]
    ordered = all(totals[a] > totals[b] for a, b in zip(chain, chain[1:]))
    gated = name == GATED_PROFILE
    report = {
        "schema": REPORT_SCHEMA,
        "profile": name,
        "params": asdict(profile),
        "recordings": n,
        "frames": int(sum(r.frames.n_rows for r in recs)),
        "sizes": {
            fmt: {"totalBytes": totals[fmt], "meanBytes": totals[fmt] / n if n else 0.0} for fmt in writers
        },
        "ratios": {f"xror/{fmt}": totals["xror"] / totals[fmt] for fmt in writers if fmt != "xror" and totals[fmt]},
        "xrorLossless": lossless,
        "sizeOrder": {"chain": chain, "holds": ordered},
        "gate": {"ratio": ratio, "limit": RATIO_GATE, "applies": gated, "pass": (ratio <= RATIO_GATE) or not gated},
    }
    raw_mb = sum(r.frames.data.nbytes + sum(e.data.nbytes for e in r.events) for r in recs) / 1e6
    timing = {
        "schema": REPORT_SCHEMA,
        "encodeSeconds": seconds,
        "xrorDecodeSeconds": decode_seconds,
        "xrorEncodeMBps": raw_mb / seconds["xror"] if seconds["xror"] else None,
        "xrorDecodeMBps": raw_mb / decode_seconds if decode_seconds else None,
    }
    return report, timing


def sizes_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["format", "total_bytes", "mean_bytes", "ratio_to_xror"])
    xror = report["sizes"]["xror"]["totalBytes"]
    for fmt, row in report["sizes"].items():
        w.writerow([fmt, row["totalBytes"], f"{row['meanBytes']:.1f}", f"{row['totalBytes'] / xror:.4f}"])
    return buf.getvalue()


def plot_sizes(report: dict, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    formats = sorted(report["sizes"], key=lambda f: -report["sizes"][f]["meanBytes"])
    means = np.array([report["sizes"][f]["meanBytes"] for f in formats]) / 1e6
    fig, ax = plt.subplots(figsize=(6, 3.5), dpi=100)
    bars = ax.bar(formats, means, color=["#4C72B0" if f != "xror" else "#DD8452" for f in formats])
    ax.bar_label(bars, fmt="%.2f")
    ax.set_ylabel("mean size per recording (MB)")
    ax.set_title(f"{report['profile']}: {report['recordings']} recordings")
    fig.tight_layout()
    # fixed metadata keeps the PNG byte-stable across runs
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def bench(profile_name: str, seed: int | None = None, out: str | Path | None = None, **overrides) -> dict:
    if seed is not None:
        overrides["seed"] = seed
    profile = profile_by_name(profile_name, **overrides)
    report, timing = run_bench(profile, profile_name)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        (out / "sizes.csv").write_text(sizes_csv(report))
        (out / "timing.json").write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
        plot_sizes(report, out / "sizes.png")
    return report
