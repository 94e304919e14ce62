"""Radio map construction from per-location capture sessions.

Each reference point contributes one map entry per visible AP: streaming
mean and spread of its RSS readings plus an availability figure (mean
fraction of one second windows containing at least one capture).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .core import BeaconLabError, CaptureSession
from .metrics import capture_probability

MIN_SAMPLES = 10
AVAILABILITY_WINDOW_S = 1.0

RADIOMAP_CSV_HEADER = ["rp_id", "x", "y", "bssid", "mean_rssi",
                       "stddev", "count", "availability"]


class UnreachableRate(BeaconLabError, ValueError):
    """Survey time requested for a non-positive measurement rate."""


class RadioMapFormatError(BeaconLabError, ValueError):
    pass


@dataclass
class RssiAccumulator:
    """Welford one-pass accumulator for mean and sample spread."""

    count: int = 0
    mean: float = 0.0
    _m2: float = field(default=0.0, repr=False)

    def update(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (value - self.mean)

    def extend(self, values) -> None:
        for v in values:
            self.update(float(v))

    @property
    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        return self._m2 / (self.count - 1)

    @property
    def stddev(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class ReferencePoint:
    rp_id: str
    x: float = 0.0
    y: float = 0.0


@dataclass(frozen=True)
class RadioMapEntry:
    rp_id: str
    x: float
    y: float
    bssid: str
    mean_rssi: float
    stddev: float
    count: int
    availability: float

    @property
    def low_sample(self) -> bool:
        return self.count < MIN_SAMPLES


def build_radio_map(sessions: list[CaptureSession],
                    positions: dict[str, tuple[float, float]] | None = None,
                    ) -> list[RadioMapEntry]:
    """Aggregate sessions into map entries keyed by (rp_id, bssid).

    Sessions are grouped by their rp_id; sessions with no rp_id fall in
    a single unnamed point.  Availability averages over all sessions at
    the point, counting sessions where the AP was silent as zero.
    """
    positions = positions or {}
    by_rp: dict[str, list[CaptureSession]] = {}
    for session in sessions:
        by_rp.setdefault(session.meta.rp_id or "", []).append(session)

    entries = []
    for rp_id in sorted(by_rp):
        group = by_rp[rp_id]
        bssids = sorted({b for s in group for b in s.bssids()})
        x, y = positions.get(rp_id, (0.0, 0.0))
        for bssid in bssids:
            acc = RssiAccumulator()
            avail = []
            for session in group:
                recs = session.records_for(bssid)
                acc.extend(r.rssi for r in recs)
                if not recs:
                    avail.append(0.0)
                elif session.duration_s < AVAILABILITY_WINDOW_S:
                    avail.append(1.0)
                else:
                    avail.append(capture_probability(session, bssid,
                                                     AVAILABILITY_WINDOW_S))
            entries.append(RadioMapEntry(
                rp_id=rp_id, x=float(x), y=float(y), bssid=bssid,
                mean_rssi=acc.mean, stddev=acc.stddev, count=acc.count,
                availability=sum(avail) / len(avail),
            ))
    return entries


def survey_time_estimate(samples_per_point: int, rate_pps: float,
                         n_points: int = 1) -> float:
    """Seconds of dwell needed to gather the requested samples per point."""
    if samples_per_point <= 0:
        raise ValueError("samples_per_point must be positive")
    if n_points <= 0:
        raise ValueError("n_points must be positive")
    if rate_pps <= 0:
        raise UnreachableRate(f"measurement rate {rate_pps} cannot fill a survey")
    return n_points * (samples_per_point / rate_pps)


def survey_speedup(rate_slow_pps: float, rate_fast_pps: float) -> float:
    """Dwell-time ratio between two capture setups at equal sample count."""
    if rate_slow_pps <= 0 or rate_fast_pps <= 0:
        raise UnreachableRate("rates must be positive")
    return rate_fast_pps / rate_slow_pps


def write_radio_map(entries: list[RadioMapEntry], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RADIOMAP_CSV_HEADER)
        for e in entries:
            writer.writerow([e.rp_id, f"{e.x:g}", f"{e.y:g}", e.bssid,
                             f"{e.mean_rssi:.2f}", f"{e.stddev:.2f}",
                             e.count, f"{e.availability:.3f}"])


def read_radio_map(path: str | Path) -> list[RadioMapEntry]:
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RADIOMAP_CSV_HEADER:
            raise RadioMapFormatError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RADIOMAP_CSV_HEADER):
                raise RadioMapFormatError(f"{path}:{lineno}: wrong column count")
            try:
                entries.append(RadioMapEntry(
                    rp_id=row[0], x=float(row[1]), y=float(row[2]),
                    bssid=row[3], mean_rssi=float(row[4]), stddev=float(row[5]),
                    count=int(row[6]), availability=float(row[7]),
                ))
            except ValueError as exc:
                raise RadioMapFormatError(f"{path}:{lineno}: {exc}") from exc
    return entries
