"""Command-line front end.

Subcommands: analyze (capture files to report), simulate (scenario to
synthetic captures plus report), calibrate (fit loss parameters to rate
targets), radiomap (capture files to a radio-map CSV), report
(re-render a saved JSON report).

Exit codes: 0 success, 1 usage error, 2 input error, 3 calibration did
not converge.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .calibrate import CalibrationResult, InfeasibleTarget, calibrate
from .capture_io import (CaptureFileError, read_capture_file,
                         write_capture_file, write_csv_session)
from .core import BeaconLabError, CaptureMode, CaptureSession, RunSet
from .metrics import aggregate_runs
from .radiomap import (build_radio_map, survey_time_estimate,
                       write_radio_map)
from .reports import report_from_json, report_to_text, write_report_files
from .scenarios import (ScenarioFormatError, load_preset, load_scenario,
                        load_targets, preset_names, save_scenario)
from .sim import simulate

OUT_ENV_VAR = "BEACONLAB_OUT"
CAPTURE_SUFFIXES = (".pcap", ".cap", ".csv")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3

_RUN_STEM = re.compile(r"^(?:(?P<rp>.+?)[._-])?run(?P<idx>\d+)$")


@dataclass
class RunConfig:
    command: str
    inputs: list[Path] = field(default_factory=list)
    scenario: Path | None = None
    preset: str | None = None
    out_dir: Path = Path("out")
    windows: tuple[float, ...] = (1.0, 2.0)
    bin_width_ms: float = 25.0
    mode: CaptureMode | None = None
    seed: int | None = None
    formats: tuple[str, ...] = ("text", "csv", "json")
    timestamp_header: bool = True


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the documented usage code is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="beaconlab",
                     description="Beacon capture analysis and simulation toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def common(p, needs_input=False):
        if needs_input:
            p.add_argument("--input", action="append", default=[], metavar="PATH",
                           help="capture file or directory (repeatable)")
        p.add_argument("--out", default=None, metavar="DIR",
                       help=f"output directory (default $"
                            f"{OUT_ENV_VAR} or ./out)")
        p.add_argument("--windows", default="1,2", metavar="S,S",
                       help="capture-probability window lengths in seconds")
        p.add_argument("--bin-width-ms", type=float, default=25.0,
                       help="delay histogram bin width")
        p.add_argument("--format", choices=["text", "csv", "json", "all"],
                       default="all", help="report formats to write")
        p.add_argument("--no-header-timestamp", action="store_true",
                       help="omit the generated-at comment line from text/CSV output")
        p.add_argument("--report-interval-tu", type=int, default=1000,
                       help="normal-mode reporting slot length in TU")

    p = sub.add_parser("analyze", help="compute metrics from capture files")
    common(p, needs_input=True)
    p.add_argument("--mode", choices=["normal", "monitor"], default="monitor",
                   help="capture mode the files were taken in")
    p.add_argument("--clock", choices=["header", "tsft"], default="header",
                   help="timestamp source for pcap packets")
    p.add_argument("--group-by-rp", action="store_true",
                   help="average per reference point before averaging runs")
    p.add_argument("--label", default="analysis")

    p = sub.add_parser("simulate", help="run a scenario and write captures + report")
    common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", metavar="FILE", help="scenario TOML file")
    src.add_argument("--preset", metavar="NAME",
                     help=f"bundled scenario set: {', '.join(preset_names())}")
    p.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p.add_argument("--runs", type=int, default=None, help="override run count")
    p.add_argument("--capture-format", choices=["pcap", "csv", "none"],
                   default="pcap", help="per-run capture file format")

    p = sub.add_parser("calibrate", help="fit loss parameters to rate targets")
    common(p)
    p.add_argument("--targets", required=True, metavar="FILE",
                   help="TOML file with [[targets]] entries")
    p.add_argument("--scenario", default=None, metavar="FILE",
                   help="base scenario for targets that give only mode and RSS")
    p.add_argument("--tolerance", type=float, default=0.05,
                   help="relative rate tolerance for convergence")
    p.add_argument("--cal-runs", type=int, default=6,
                   help="simulation runs per evaluation during fitting")
    p.add_argument("--seed", type=int, default=1, help="calibration RNG seed")
    p.add_argument("--shared", action="store_true",
                   help="fit one shared threshold across all targets")

    p = sub.add_parser("radiomap", help="build a radio map from capture files")
    common(p, needs_input=True)
    p.add_argument("--mode", choices=["normal", "monitor"], default="monitor")
    p.add_argument("--clock", choices=["header", "tsft"], default="header")
    p.add_argument("--positions", default=None, metavar="FILE",
                   help="TOML file with [[points]] rp_id/x/y entries")
    p.add_argument("--samples-per-rp", type=int, default=100,
                   help="samples wanted per point for the dwell estimate")

    p = sub.add_parser("report", help="re-render a saved JSON report")
    common(p, needs_input=True)

    return parser


def _parse_windows(parser: _Parser, text: str) -> tuple[float, ...]:
    try:
        windows = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        parser.error(f"--windows: cannot parse {text!r}")
    if not windows or any(w <= 0 for w in windows):
        parser.error("--windows: values must be positive")
    return windows


def _formats(choice: str) -> tuple[str, ...]:
    return ("text", "csv", "json") if choice == "all" else (choice,)


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV_VAR) or "out")


def _gather_inputs(paths: list[str]) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(p for p in path.iterdir()
                                if p.suffix.lower() in CAPTURE_SUFFIXES))
        elif path.exists():
            files.append(path)
        else:
            raise CaptureFileError(f"{path}: no such file or directory")
    return files


def _stem_identity(path: Path) -> tuple[str | None, int | None]:
    m = _RUN_STEM.match(path.stem)
    if not m:
        return path.stem, None
    idx = int(m.group("idx"))
    return m.group("rp"), idx


def _read_sessions(files: list[Path], mode: CaptureMode, clock: str) -> list[CaptureSession]:
    sessions = []
    for path in files:
        rp_id, run_index = _stem_identity(path)
        try:
            sessions.append(read_capture_file(
                path, mode=mode, receiver_clock=clock,
                rp_id=rp_id, run_index=run_index))
        except (CaptureFileError, OSError) as exc:
            print(f"skipping {path}: {exc}", file=sys.stderr)
    return sessions


def _harmonize_durations(sessions: list[CaptureSession]) -> list[CaptureSession]:
    longest = max(s.duration_s for s in sessions)
    if all(s.duration_s == longest for s in sessions):
        return sessions
    print(f"note: session durations differ; treating all as {longest:g} s",
          file=sys.stderr)
    return [CaptureSession(mode=s.mode, duration_s=longest,
                           records=s.records, meta=s.meta)
            for s in sessions]


def cmd_analyze(args, parser: _Parser) -> int:
    windows = _parse_windows(parser, args.windows)
    files = _gather_inputs(args.input)
    if not files:
        raise CaptureFileError("no input files")
    mode = CaptureMode.parse(args.mode)
    sessions = _read_sessions(files, mode, args.clock)
    if not sessions:
        raise CaptureFileError("no input files could be read")
    sessions = _harmonize_durations(sessions)
    runset = RunSet(label=args.label, sessions=sessions)
    report = aggregate_runs(runset, group_by_rp=args.group_by_rp,
                            windows=windows, bin_width_ms=args.bin_width_ms,
                            report_interval_tu=args.report_interval_tu)
    stamp = not args.no_header_timestamp
    write_report_files(report, _out_dir(args.out), formats=_formats(args.format),
                       timestamp_header=stamp)
    print(report_to_text(report, timestamp_header=False), end="")
    return EXIT_OK


def cmd_simulate(args, parser: _Parser) -> int:
    windows = _parse_windows(parser, args.windows)
    if args.preset:
        scenarios = load_preset(args.preset)
    else:
        scenarios = [load_scenario(args.scenario)]
    stamp = not args.no_header_timestamp
    base_out = _out_dir(args.out)
    for scenario in scenarios:
        if args.seed is not None:
            scenario = scenario.with_seed(args.seed)
        if args.runs is not None:
            scenario = dataclasses.replace(scenario, runs=args.runs)
        runset = simulate(scenario)
        out = base_out / scenario.label
        out.mkdir(parents=True, exist_ok=True)
        if args.capture_format != "none":
            for session in runset.sessions:
                name = f"run{session.meta.run_index:02d}.{args.capture_format}"
                if args.capture_format == "pcap":
                    write_capture_file(session, out / name)
                else:
                    write_csv_session(session, out / name)
        report = aggregate_runs(runset, windows=windows,
                                bin_width_ms=args.bin_width_ms,
                                report_interval_tu=scenario.report_interval_tu)
        write_report_files(report, out, formats=_formats(args.format),
                           timestamp_header=stamp)
        print(report_to_text(report, timestamp_header=False), end="")
    return EXIT_OK


def _annotation(entry) -> list[str]:
    t = entry.target
    lines = [f"calibrated for {t.label}: target rate {t.target_rate_pps:.4g}/s, "
             f"achieved {entry.achieved_rate_pps:.4g}/s "
             f"(miss {entry.achieved_miss_pct:.2f}%)"]
    if t.target_miss_pct is not None:
        lines.append(f"target miss {t.target_miss_pct:.2f}%")
    fitted = ", ".join(f"{k}={v:.6g}" for k, v in entry.fitted.items())
    lines.append(f"fitted: {fitted}")
    lines.append("converged" if entry.converged else "NOT converged (best found)")
    return lines


def cmd_calibrate(args, parser: _Parser) -> int:
    base = load_scenario(args.scenario) if args.scenario else None
    targets, settings = load_targets(args.targets, base_scenario=base)
    tolerance = float(settings.get("tolerance", args.tolerance))
    cal_runs = int(settings.get("runs", args.cal_runs))
    seed = int(settings.get("seed", args.seed))
    result: CalibrationResult = calibrate(
        targets, tolerance=tolerance, cal_runs=cal_runs,
        cal_seed=seed, shared=args.shared)
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for entry in result.entries:
        save_scenario(entry.scenario, out / f"{entry.target.label}.toml",
                      comments=_annotation(entry))
        summary.append({
            "label": entry.target.label,
            "target_rate_pps": entry.target.target_rate_pps,
            "achieved_rate_pps": entry.achieved_rate_pps,
            "achieved_miss_pct": entry.achieved_miss_pct,
            "fitted": entry.fitted,
            "converged": entry.converged,
        })
        status = "ok" if entry.converged else "NOT CONVERGED"
        print(f"{entry.target.label}: target {entry.target.target_rate_pps:.4g}/s "
              f"achieved {entry.achieved_rate_pps:.4g}/s [{status}]")
    (out / "calibration_summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _load_positions(path: str) -> dict[str, tuple[float, float]]:
    try:
        doc = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioFormatError(f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioFormatError(f"{path}: TOML parse error: {exc}") from exc
    points = doc.get("points")
    if not isinstance(points, list):
        raise ScenarioFormatError(f"{path}: needs a [[points]] array")
    out = {}
    for i, pt in enumerate(points):
        if "rp_id" not in pt:
            raise ScenarioFormatError(f"{path}: points[{i}] missing rp_id")
        out[str(pt["rp_id"])] = (float(pt.get("x", 0.0)), float(pt.get("y", 0.0)))
    return out


def cmd_radiomap(args, parser: _Parser) -> int:
    files = _gather_inputs(args.input)
    if not files:
        raise CaptureFileError("no input files")
    mode = CaptureMode.parse(args.mode)
    sessions = _read_sessions(files, mode, args.clock)
    if not sessions:
        raise CaptureFileError("no input files could be read")
    positions = _load_positions(args.positions) if args.positions else {}
    entries = build_radio_map(sessions, positions)
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_radio_map(entries, out / "radiomap.csv")
    total_records = sum(len(s.records) for s in sessions)
    total_time = sum(s.duration_s for s in sessions)
    print(f"radio map: {len(entries)} entries from {len(sessions)} sessions "
          f"({sum(1 for e in entries if e.low_sample)} low-sample)")
    if total_records and total_time:
        rate = total_records / total_time
        dwell = survey_time_estimate(args.samples_per_rp, rate)
        print(f"observed rate {rate:.3g}/s; about {dwell:.1f} s per point "
              f"for {args.samples_per_rp} samples")
    return EXIT_OK


def cmd_report(args, parser: _Parser) -> int:
    files = _gather_inputs(args.input)
    if not files:
        raise CaptureFileError("no input files")
    stamp = not args.no_header_timestamp
    for path in files:
        if path.suffix.lower() != ".json":
            raise CaptureFileError(f"{path}: report input must be JSON")
        try:
            report = report_from_json(path.read_text(encoding="utf-8"))
        except (ValueError, KeyError) as exc:
            raise CaptureFileError(f"{path}: not a report file: {exc}") from exc
        write_report_files(report, _out_dir(args.out),
                           formats=_formats(args.format), timestamp_header=stamp)
        print(report_to_text(report, timestamp_header=False), end="")
    return EXIT_OK


_COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "radiomap": cmd_radiomap,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except InfeasibleTarget as exc:
        print(f"beaconlab: infeasible target: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (BeaconLabError, OSError, ValueError) as exc:
        print(f"beaconlab: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
