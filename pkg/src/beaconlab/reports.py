"""Rendering of scenario reports to text, CSV and JSON.

CSV and text outputs mirror the display rounding of the summary tables
(two decimals for rates and percentages); JSON keeps full precision for
downstream tooling.  An optional generation-timestamp header line keeps
repeated invocations byte-identical when disabled.
"""

from __future__ import annotations

import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path

from .core import ApIdentity, CaptureMode
from .metrics import ApReport, DelayHistogram, GapRun, ScenarioReport


def _timestamp_line() -> str:
    return f"# generated {datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')}"


def csv_header(windows: tuple[float, ...]) -> list[str]:
    cols = ["ap", "mode", "avg_rate_pps", "miss_rate_pct"]
    cols += [f"p_capture_{w:g}s" for w in windows]
    cols.append("max_gap_s")
    return cols


def report_to_csv(report: ScenarioReport, timestamp_header: bool = True) -> str:
    buf = io.StringIO()
    if timestamp_header:
        buf.write(_timestamp_line() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(report.windows))
    for ap in report.aps:
        row = [ap.ap.bssid, report.mode.value,
               f"{ap.avg_rate_pps:.2f}", f"{ap.miss_rate_pct:.2f}"]
        row += [f"{ap.p_capture[w]:.3f}" for w in report.windows]
        row.append(f"{ap.max_gap_s:.1f}")
        writer.writerow(row)
    return buf.getvalue()


def report_to_text(report: ScenarioReport, timestamp_header: bool = True) -> str:
    lines = []
    if timestamp_header:
        lines.append(_timestamp_line())
    lines.append(f"scenario: {report.label}")
    lines.append(f"mode: {report.mode.value}   runs: {report.n_runs}   duration: {report.duration_s:g} s")
    lines.append("")
    head = f"{'AP':<18} {'SSID':<12} {'rate':>7} {'theory':>7} {'miss%':>7}"
    for w in report.windows:
        head += f" {'p(' + format(w, 'g') + 's)':>8}"
    head += f" {'gap(s)':>7}"
    lines.append(head)
    for ap in report.aps:
        row = (f"{ap.ap.bssid:<18} {ap.ap.ssid[:12]:<12} "
               f"{ap.avg_rate_pps:>7.2f} {ap.theoretical_rate_pps:>7.2f} {ap.miss_rate_pct:>7.2f}")
        for w in report.windows:
            row += f" {ap.p_capture[w]:>8.3f}"
        row += f" {ap.max_gap_s:>7.1f}"
        lines.append(row)
    lines.append("")
    for ap in report.aps:
        within = "  ".join(f"P(delay<={w:g}s)={ap.delay_within[w]:.3f}" for w in report.windows)
        lines.append(f"{ap.ap.bssid}: n={ap.n_records}  {within}")
    return "\n".join(lines) + "\n"


def report_to_json(report: ScenarioReport) -> str:
    doc = {
        "label": report.label,
        "mode": report.mode.value,
        "n_runs": report.n_runs,
        "duration_s": report.duration_s,
        "windows": list(report.windows),
        "bin_width_ms": report.bin_width_ms,
        "report_interval_tu": report.report_interval_tu,
        "aps": [
            {
                "bssid": ap.ap.bssid,
                "ssid": ap.ap.ssid,
                "n_records": ap.n_records,
                "avg_rate_pps": ap.avg_rate_pps,
                "theoretical_rate_pps": ap.theoretical_rate_pps,
                "miss_rate_pct": ap.miss_rate_pct,
                "p_capture": {f"{w:g}": v for w, v in ap.p_capture.items()},
                "delay_within": {f"{w:g}": v for w, v in ap.delay_within.items()},
                "max_gap_windows": ap.max_gap_windows,
                "max_gap_s": ap.max_gap_s,
                "histogram": {
                    "bin_width_ms": ap.histogram.bin_width_ms,
                    "n_deltas": ap.histogram.n_deltas,
                    "bins": {str(i): c for i, c in sorted(ap.histogram.bins.items())},
                },
                "gap_runs": [
                    {"run": run, "start_window": g.start_window, "length": g.length}
                    for run, g in ap.gap_runs
                ],
            }
            for ap in report.aps
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def report_from_json(text: str) -> ScenarioReport:
    doc = json.loads(text)
    report = ScenarioReport(
        label=doc["label"],
        mode=CaptureMode.parse(doc["mode"]),
        n_runs=doc["n_runs"],
        duration_s=doc["duration_s"],
        windows=tuple(doc["windows"]),
        bin_width_ms=doc["bin_width_ms"],
        report_interval_tu=doc["report_interval_tu"],
    )
    for entry in doc["aps"]:
        hist = DelayHistogram(
            bin_width_ms=entry["histogram"]["bin_width_ms"],
            bins={int(i): int(c) for i, c in entry["histogram"]["bins"].items()},
            n_deltas=entry["histogram"]["n_deltas"],
        )
        report.aps.append(ApReport(
            ap=ApIdentity(bssid=entry["bssid"], ssid=entry["ssid"]),
            n_records=entry["n_records"],
            avg_rate_pps=entry["avg_rate_pps"],
            theoretical_rate_pps=entry["theoretical_rate_pps"],
            miss_rate_pct=entry["miss_rate_pct"],
            p_capture={float(w): v for w, v in entry["p_capture"].items()},
            delay_within={float(w): v for w, v in entry["delay_within"].items()},
            histogram=hist,
            gap_runs=[(g["run"], GapRun(g["start_window"], g["length"]))
                      for g in entry["gap_runs"]],
            max_gap_windows=entry["max_gap_windows"],
            max_gap_s=entry["max_gap_s"],
        ))
    return report


def histogram_csv(hist: DelayHistogram, timestamp_header: bool = True) -> str:
    buf = io.StringIO()
    if timestamp_header:
        buf.write(_timestamp_line() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_start_ms", "bin_end_ms", "count"])
    for start, end, count in hist.rows():
        writer.writerow([f"{start:g}", f"{end:g}", count])
    return buf.getvalue()


def gaps_csv(report: ScenarioReport, timestamp_header: bool = True) -> str:
    buf = io.StringIO()
    if timestamp_header:
        buf.write(_timestamp_line() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ap", "run", "start_window", "length"])
    for ap in report.aps:
        for run, g in ap.gap_runs:
            writer.writerow([ap.ap.bssid, run, g.start_window, g.length])
    return buf.getvalue()


def write_report_files(
    report: ScenarioReport,
    out_dir: str | Path,
    formats: tuple[str, ...] = ("text", "csv", "json"),
    timestamp_header: bool = True,
) -> list[Path]:
    """Write report/histogram/gap files into out_dir; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, content: str) -> None:
        target = out / name
        target.write_text(content, encoding="utf-8")
        written.append(target)

    if "csv" in formats:
        emit("report.csv", report_to_csv(report, timestamp_header))
        for ap in report.aps:
            stem = ap.ap.bssid.replace(":", "-")
            emit(f"hist_{stem}.csv", histogram_csv(ap.histogram, timestamp_header))
        emit("gaps.csv", gaps_csv(report, timestamp_header))
    if "json" in formats:
        emit("report.json", report_to_json(report))
    if "text" in formats:
        emit("report.txt", report_to_text(report, timestamp_header))
    return written
