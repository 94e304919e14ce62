"""Measurement-quality metrics over capture sessions.

All window arithmetic happens in integer microseconds.  Windows are
disjoint, aligned to the session start plus an optional offset, and only
full windows inside the session duration count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    ApIdentity,
    BeaconLabError,
    CaptureMode,
    CaptureSession,
    RunSet,
    theoretical_rate,
)


class NonPositiveTheoretical(BeaconLabError, ValueError):
    """miss_rate needs a positive theoretical rate to compare against."""


class EmptyRunSet(BeaconLabError, ValueError):
    """Aggregation over zero runs is undefined."""


def measurement_rate(session: CaptureSession, ap: ApIdentity | str) -> float:
    """Measurements per second for one AP: record count over session duration."""
    if session.duration_s <= 0:
        raise ValueError("session duration must be positive to compute a rate")
    return len(session.times_for(ap)) / session.duration_s


def miss_rate(rate: float, theoretical: float) -> float:
    """Percentage of theoretically available measurements that were missed.

    Clamped at zero: a partial trailing slot can push an observed rate a
    hair above the asymptotic theoretical value.
    """
    if theoretical <= 0:
        raise NonPositiveTheoretical(f"theoretical rate must be positive, got {theoretical}")
    return max(0.0, (1.0 - rate / theoretical) * 100.0)


# --- inter-arrival delays -------------------------------------------------


@dataclass
class DelayHistogram:
    """Histogram of inter-arrival delays; bin i covers [i*w, (i+1)*w) ms."""

    bin_width_ms: float
    bins: dict[int, int] = field(default_factory=dict)
    n_deltas: int = 0

    def merge(self, other: "DelayHistogram") -> "DelayHistogram":
        if other.bin_width_ms != self.bin_width_ms:
            raise ValueError("cannot merge histograms with different bin widths")
        merged = dict(self.bins)
        for idx, count in other.bins.items():
            merged[idx] = merged.get(idx, 0) + count
        return DelayHistogram(self.bin_width_ms, merged, self.n_deltas + other.n_deltas)

    def rows(self) -> list[tuple[float, float, int]]:
        return [(i * self.bin_width_ms, (i + 1) * self.bin_width_ms, self.bins[i])
                for i in sorted(self.bins)]


def inter_arrival_deltas(session: CaptureSession, ap: ApIdentity | str) -> np.ndarray:
    """Consecutive receiver-timestamp differences for one AP, in µs."""
    times = session.times_for(ap)
    if len(times) < 2:
        return np.empty(0, dtype=np.int64)
    return np.diff(times)


def arrival_delay_histogram(
    session: CaptureSession,
    ap: ApIdentity | str,
    bin_width_ms: float = 25.0,
) -> DelayHistogram:
    """Bin inter-arrival delays by floor(delta / bin_width)."""
    width_us = _width_to_us(bin_width_ms)
    deltas = inter_arrival_deltas(session, ap)
    if len(deltas) == 0:
        return DelayHistogram(bin_width_ms=bin_width_ms)
    idx, counts = np.unique(deltas // width_us, return_counts=True)
    return DelayHistogram(bin_width_ms=bin_width_ms,
                          bins={int(i): int(c) for i, c in zip(idx, counts)},
                          n_deltas=int(len(deltas)))


def _width_to_us(bin_width_ms: float) -> int:
    width_us = int(round(bin_width_ms * 1000))
    if width_us <= 0:
        raise ValueError(f"bin width must be at least 1 µs, got {bin_width_ms} ms")
    return width_us


def delay_fraction_within(sessions: Iterable[CaptureSession], ap: ApIdentity | str,
                          threshold_s: float) -> float:
    """Pooled fraction of inter-arrival delays not exceeding the threshold.

    This is the delay-centric view of capture availability: how often the
    next measurement arrives within the given time of the previous one.
    Returns 0.0 when there are no delays at all.
    """
    limit_us = int(round(threshold_s * 1_000_000))
    total = 0
    within = 0
    for session in sessions:
        deltas = inter_arrival_deltas(session, ap)
        total += len(deltas)
        within += int(np.count_nonzero(deltas <= limit_us))
    return within / total if total else 0.0


# --- windowed capture probability and gaps --------------------------------


def occupied_windows(times_us: np.ndarray, duration_s: float,
                     window_s: float, offset_s: float = 0.0) -> tuple[int, np.ndarray]:
    """Number of full disjoint windows and the sorted indices of nonempty ones.

    Array-level core of the windowed metrics, exposed for callers that have
    raw timestamp vectors rather than sessions.  Partial trailing windows are
    dropped; timestamps before the offset or past the last full window are
    ignored.
    """
    if window_s <= 0:
        raise ValueError(f"window must be positive, got {window_s}")
    if offset_s < 0:
        raise ValueError(f"window offset must be non-negative, got {offset_s}")
    window_us = int(round(window_s * 1_000_000))
    offset_us = int(round(offset_s * 1_000_000))
    duration_us = int(round(duration_s * 1_000_000))
    n_windows = (duration_us - offset_us) // window_us
    if n_windows < 1:
        raise ValueError(f"duration {duration_s}s holds no full "
                         f"{window_s}s window at offset {offset_s}s")
    times = np.asarray(times_us, dtype=np.int64)
    if len(times) == 0:
        return n_windows, np.empty(0, dtype=np.int64)
    shifted = times - offset_us
    shifted = shifted[(shifted >= 0) & (shifted < n_windows * window_us)]
    return n_windows, np.unique(shifted // window_us)


def _window_occupancy(session: CaptureSession, ap: ApIdentity | str,
                      window_s: float, offset_s: float) -> tuple[int, np.ndarray]:
    return occupied_windows(session.times_for(ap), session.duration_s,
                            window_s, offset_s)


def capture_probability(session: CaptureSession, ap: ApIdentity | str,
                        window_s: float = 1.0, offset_s: float = 0.0) -> float:
    """Fraction of disjoint start-aligned windows holding at least one record."""
    n_windows, nonempty = _window_occupancy(session, ap, window_s, offset_s)
    return len(nonempty) / n_windows


@dataclass(frozen=True)
class GapRun:
    """A maximal run of consecutive empty windows."""

    start_window: int
    length: int


@dataclass
class GapReport:
    window_s: float
    n_windows: int
    runs: list[GapRun] = field(default_factory=list)

    @property
    def max_run(self) -> int:
        return max((r.length for r in self.runs), default=0)

    @property
    def total_empty(self) -> int:
        return sum(r.length for r in self.runs)


def gap_report(session: CaptureSession, ap: ApIdentity | str,
               window_s: float = 1.0, offset_s: float = 0.0) -> GapReport:
    """Maximal runs of consecutive empty windows for one AP."""
    n_windows, nonempty = _window_occupancy(session, ap, window_s, offset_s)
    runs: list[GapRun] = []
    prev = -1
    for idx in list(nonempty) + [n_windows]:
        idx = int(idx)
        if idx - prev > 1:
            runs.append(GapRun(start_window=prev + 1, length=idx - prev - 1))
        prev = idx
    return GapReport(window_s=window_s, n_windows=n_windows, runs=runs)


# --- aggregation over repeated runs ---------------------------------------


@dataclass
class ApReport:
    ap: ApIdentity
    n_records: int
    avg_rate_pps: float
    theoretical_rate_pps: float
    miss_rate_pct: float
    p_capture: dict[float, float]
    delay_within: dict[float, float]
    histogram: DelayHistogram
    gap_runs: list[tuple[int, GapRun]]      # (run index, run)
    max_gap_windows: int
    max_gap_s: float


@dataclass
class ScenarioReport:
    label: str
    mode: CaptureMode
    n_runs: int
    duration_s: float
    windows: tuple[float, ...]
    bin_width_ms: float
    report_interval_tu: int
    aps: list[ApReport] = field(default_factory=list)


def aggregate_runs(
    runset: RunSet,
    group_by_rp: bool = False,
    windows: Sequence[float] = (1.0, 2.0),
    bin_width_ms: float = 25.0,
    report_interval_tu: int = 1000,
) -> ScenarioReport:
    """Aggregate repeated runs into one per-AP report.

    Rates are averaged per run (optionally first within each reference
    point, then across points); the miss rate is recomputed from the
    unrounded aggregate rate.  Histograms are summed bin-wise and window
    probabilities averaged across runs.
    """
    if not runset.sessions:
        raise EmptyRunSet(f"run set {runset.label!r} has no sessions")
    mode = runset.mode
    duration = runset.duration_s
    gap_window = windows[0] if windows else 1.0

    report = ScenarioReport(
        label=runset.label, mode=mode, n_runs=len(runset.sessions),
        duration_s=duration, windows=tuple(windows), bin_width_ms=bin_width_ms,
        report_interval_tu=report_interval_tu,
    )
    for ap in runset.aps():
        per_run_rates = [measurement_rate(s, ap) for s in runset.sessions]
        if group_by_rp:
            by_rp: dict[str, list[float]] = {}
            for session, rate in zip(runset.sessions, per_run_rates):
                by_rp.setdefault(session.meta.rp_id or "", []).append(rate)
            avg_rate = float(np.mean([np.mean(v) for v in by_rp.values()]))
        else:
            avg_rate = float(np.mean(per_run_rates))

        if mode is CaptureMode.MONITOR:
            interval = next((r.beacon_interval_tu for s in runset.sessions
                             for r in s.records_for(ap)), 100)
            theoretical = theoretical_rate(mode, beacon_interval_tu=interval)
        else:
            theoretical = theoretical_rate(mode, report_interval_tu=report_interval_tu)

        histogram = DelayHistogram(bin_width_ms=bin_width_ms)
        for s in runset.sessions:
            histogram = histogram.merge(arrival_delay_histogram(s, ap, bin_width_ms))

        p_capture = {
            float(w): float(np.mean([capture_probability(s, ap, w) for s in runset.sessions]))
            for w in windows
        }
        delay_within = {
            float(w): delay_fraction_within(runset.sessions, ap, w) for w in windows
        }

        gap_runs: list[tuple[int, GapRun]] = []
        max_gap = 0
        for i, s in enumerate(runset.sessions):
            rep = gap_report(s, ap, gap_window)
            run_idx = s.meta.run_index if s.meta.run_index is not None else i
            gap_runs.extend((run_idx, g) for g in rep.runs)
            max_gap = max(max_gap, rep.max_run)

        report.aps.append(ApReport(
            ap=ap,
            n_records=sum(len(s.times_for(ap)) for s in runset.sessions),
            avg_rate_pps=avg_rate,
            theoretical_rate_pps=theoretical,
            miss_rate_pct=miss_rate(avg_rate, theoretical),
            p_capture=p_capture,
            delay_within=delay_within,
            histogram=histogram,
            gap_runs=gap_runs,
            max_gap_windows=max_gap,
            max_gap_s=max_gap * gap_window,
        ))
    return report
