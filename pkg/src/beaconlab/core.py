"""Core data model: capture sessions, AP identity, and beacon timing math.

All internal timestamps are integer microseconds since session start.
Rates are computed at full float precision; rounding happens only when
values are formatted for display.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable

import numpy as np

# One 802.11 time unit (TU) is exactly 1024 microseconds.
TU_US = 1024

DEFAULT_BEACON_INTERVAL_TU = 100
DEFAULT_REPORT_INTERVAL_TU = 1000

_BSSID_RE = re.compile(r"^[0-9a-f]{2}(:[0-9a-f]{2}){5}$")


class BeaconLabError(Exception):
    """Base class for all toolkit errors."""


class NonPositiveInterval(BeaconLabError, ValueError):
    """An interval that must be a positive number of TUs was not."""


class SessionOrderError(BeaconLabError, ValueError):
    """Session records violate the required timestamp ordering."""


class CaptureMode(Enum):
    NORMAL = "normal"
    MONITOR = "monitor"

    @classmethod
    def parse(cls, text: str) -> "CaptureMode":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown capture mode {text!r}; expected 'normal' or 'monitor'") from None


def tu_to_ms(tu: float) -> float:
    """Convert time units to milliseconds (1 TU = 1.024 ms).

    Integer TU counts go through exact integer arithmetic before the single
    float division, so e.g. tu_to_ms(100) == 102.4 exactly.
    """
    if isinstance(tu, (int, np.integer)):
        return tu * TU_US / 1000
    return tu * TU_US / 1000.0


def tu_to_us(tu: int) -> int:
    return int(tu) * TU_US


def theoretical_rate(
    mode: CaptureMode,
    beacon_interval_tu: int = DEFAULT_BEACON_INTERVAL_TU,
    report_interval_tu: int = DEFAULT_REPORT_INTERVAL_TU,
) -> float:
    """Best-case measurements per second for a capture mode.

    Monitor mode sees every beacon, so the cap is one measurement per
    beacon interval.  Normal mode is throttled to one report per scan
    report interval.  With the defaults this gives 9.765625 and 0.9765625
    packets per second, displayed as 9.77 and 0.977.
    """
    return float(theoretical_rate_exact(mode, beacon_interval_tu, report_interval_tu))


def theoretical_rate_exact(
    mode: CaptureMode,
    beacon_interval_tu: int = DEFAULT_BEACON_INTERVAL_TU,
    report_interval_tu: int = DEFAULT_REPORT_INTERVAL_TU,
) -> Fraction:
    """Exact rational form of theoretical_rate, for ratio/exactness checks."""
    interval_tu = beacon_interval_tu if mode is CaptureMode.MONITOR else report_interval_tu
    if not isinstance(interval_tu, (int, np.integer)) or interval_tu <= 0:
        raise NonPositiveInterval(f"interval must be a positive integer TU count, got {interval_tu!r}")
    return Fraction(1_000_000, int(interval_tu) * TU_US)


def format_rate(rate: float) -> str:
    """Display form of a rate: three significant figures (9.77, 0.977)."""
    return f"{rate:.3g}"


@dataclass(frozen=True)
class ApIdentity:
    """An access point, identified by BSSID alone.

    The SSID is carried for reporting but ignored for equality: multi-SSID
    deployments reuse BSSIDs per radio, and hidden-SSID beacons would
    otherwise split one AP into two.
    """

    bssid: str
    ssid: str = field(default="", compare=False)

    def __post_init__(self):
        if not _BSSID_RE.match(self.bssid):
            object.__setattr__(self, "bssid", canonical_bssid(self.bssid))


def canonical_bssid(raw: bytes | str) -> str:
    """Normalize a BSSID to lowercase colon-separated form."""
    if isinstance(raw, (bytes, bytearray)):
        if len(raw) != 6:
            raise ValueError(f"bssid must be 6 bytes, got {len(raw)}")
        return ":".join(f"{b:02x}" for b in raw)
    text = raw.strip().lower().replace("-", ":")
    if not _BSSID_RE.match(text):
        raise ValueError(f"cannot canonicalize bssid {raw!r}")
    return text


def bssid_bytes(bssid: str) -> bytes:
    return bytes(int(part, 16) for part in bssid.split(":"))


@dataclass(slots=True)
class BeaconRecord:
    """One received beacon: receiver timestamp in µs since session start.

    rssi is integer dBm as reported by the radio.  channel is the DS
    channel number when the frame advertised one.
    """

    t: int
    rssi: int
    ap: ApIdentity
    beacon_interval_tu: int = DEFAULT_BEACON_INTERVAL_TU
    sequence_number: int | None = None
    channel: int | None = None


@dataclass
class SessionMeta:
    source: str = ""
    skipped: int = 0
    duplicates: int = 0
    rp_id: str | None = None
    run_index: int | None = None
    empty: bool = False


@dataclass
class CaptureSession:
    """All beacon records of one capture run, sorted by timestamp.

    Ordering contract: globally non-decreasing t, and strictly increasing
    t per BSSID (two distinct APs may share a microsecond; one AP cannot).
    """

    mode: CaptureMode
    duration_s: float
    records: list[BeaconRecord] = field(default_factory=list)
    meta: SessionMeta = field(default_factory=SessionMeta)

    def bssids(self) -> list[str]:
        return sorted({r.ap.bssid for r in self.records})

    def aps(self) -> list[ApIdentity]:
        """One identity per BSSID, preferring the first non-empty SSID seen."""
        chosen: dict[str, ApIdentity] = {}
        for r in self.records:
            cur = chosen.get(r.ap.bssid)
            if cur is None or (not cur.ssid and r.ap.ssid):
                chosen[r.ap.bssid] = r.ap
        return [chosen[b] for b in sorted(chosen)]

    def records_for(self, ap: ApIdentity | str) -> list[BeaconRecord]:
        bssid = ap.bssid if isinstance(ap, ApIdentity) else ap
        return [r for r in self.records if r.ap.bssid == bssid]

    def times_for(self, ap: ApIdentity | str) -> np.ndarray:
        bssid = ap.bssid if isinstance(ap, ApIdentity) else ap
        return np.fromiter((r.t for r in self.records if r.ap.bssid == bssid), dtype=np.int64)

    def validate(self) -> None:
        """Check the ordering contract and timestamp bounds; raises on violation."""
        limit = int(self.duration_s * 1_000_000)
        last_t = -1
        last_per_ap: dict[str, int] = {}
        for i, r in enumerate(self.records):
            if r.t < 0 or r.t >= limit:
                raise SessionOrderError(f"record {i}: t={r.t} outside [0, {limit})")
            if r.t < last_t:
                raise SessionOrderError(f"record {i}: timestamps not sorted ({r.t} after {last_t})")
            prev = last_per_ap.get(r.ap.bssid)
            if prev is not None and r.t <= prev:
                raise SessionOrderError(f"record {i}: t={r.t} not strictly increasing for {r.ap.bssid}")
            last_t = r.t
            last_per_ap[r.ap.bssid] = r.t


@dataclass
class RunSet:
    """Repeated runs of one scenario (same mode, same nominal duration)."""

    label: str
    sessions: list[CaptureSession] = field(default_factory=list)

    def __post_init__(self):
        if self.sessions:
            mode = self.sessions[0].mode
            dur = self.sessions[0].duration_s
            for s in self.sessions:
                if s.mode is not mode:
                    raise ValueError(f"run set {self.label!r} mixes capture modes")
                if s.duration_s != dur:
                    raise ValueError(f"run set {self.label!r} mixes durations")

    @property
    def mode(self) -> CaptureMode:
        return self.sessions[0].mode

    @property
    def duration_s(self) -> float:
        return self.sessions[0].duration_s

    def bssids(self) -> list[str]:
        out: set[str] = set()
        for s in self.sessions:
            out.update(s.bssids())
        return sorted(out)

    def aps(self) -> list[ApIdentity]:
        chosen: dict[str, ApIdentity] = {}
        for s in self.sessions:
            for ap in s.aps():
                cur = chosen.get(ap.bssid)
                if cur is None or (not cur.ssid and ap.ssid):
                    chosen[ap.bssid] = ap
        return [chosen[b] for b in sorted(chosen)]


def sort_records(records: Iterable[BeaconRecord]) -> list[BeaconRecord]:
    """Sort records by (t, bssid) so merged multi-AP streams are deterministic."""
    return sorted(records, key=lambda r: (r.t, r.ap.bssid))
