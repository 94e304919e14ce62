"""Capture file I/O: classic pcap (radiotap link type) and CSV fallback.

Sessions read from disk are normalized: records sorted by (t, bssid),
exact duplicate frames removed and counted, malformed packets skipped
and counted, never fatal.  Timestamps become integer microseconds since
session start.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    ApIdentity,
    BeaconLabError,
    BeaconRecord,
    CaptureMode,
    CaptureSession,
    SessionMeta,
    canonical_bssid,
    sort_records,
)
from .frames import (
    BeaconFrame,
    CodecError,
    SEQ_MODULUS,
    channel_to_freq,
    decode_frame,
    encode_frame,
    freq_to_channel,
)

PCAP_MAGIC_US = 0xA1B2C3D4
PCAP_MAGIC_NS = 0xA1B23C4D
PCAP_GLOBAL_HDR = "IHHiIII"
PCAP_PACKET_HDR = "IIII"
LINKTYPE_RADIOTAP = 127
SNAPLEN = 65535

CSV_HEADER = ["timestamp_us", "bssid", "ssid", "rssi_dbm", "channel", "beacon_interval_tu"]

# Raw clock values below ~1980 in µs are treated as synthetic (zero-based)
# rather than wall-clock captures when epoch="auto".
_WALLCLOCK_THRESHOLD_US = 315_532_800 * 1_000_000


class CaptureFileError(BeaconLabError):
    """A capture file could not be opened or its container parsed."""


class UnsupportedLinkType(CaptureFileError):
    """The pcap link type is not radiotap-encapsulated 802.11."""


class UnreadableFile(CaptureFileError):
    """File missing, unreadable, or its global header is invalid."""


@dataclass
class PcapFile:
    """Low-level contents of one classic pcap file."""

    linktype: int
    nanosecond: bool
    packets: list[tuple[int, bytes]] = field(default_factory=list)  # (ts_us, data)
    truncated: bool = False


def read_pcap(path: str | Path) -> PcapFile:
    """Read a classic pcap file (either endianness, µs or ns resolution).

    A truncated trailing packet record sets the truncated flag instead of
    raising; everything read up to that point is kept.
    """
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    if len(blob) < 24:
        raise UnreadableFile(f"{path}: too short for a pcap global header")

    (magic,) = struct.unpack_from("<I", blob, 0)
    if magic == PCAP_MAGIC_US:
        endian, nanosecond = "<", False
    elif magic == PCAP_MAGIC_NS:
        endian, nanosecond = "<", True
    else:
        (magic_be,) = struct.unpack_from(">I", blob, 0)
        if magic_be == PCAP_MAGIC_US:
            endian, nanosecond = ">", False
        elif magic_be == PCAP_MAGIC_NS:
            endian, nanosecond = ">", True
        else:
            raise UnreadableFile(f"{path}: unrecognized pcap magic {magic:#010x}")

    _magic, _major, _minor, _zone, _sigfigs, _snaplen, linktype = struct.unpack_from(
        endian + PCAP_GLOBAL_HDR, blob, 0
    )
    out = PcapFile(linktype=linktype, nanosecond=nanosecond)
    offset = 24
    hdr_size = struct.calcsize(endian + PCAP_PACKET_HDR)
    while offset < len(blob):
        if offset + hdr_size > len(blob):
            out.truncated = True
            break
        ts_sec, ts_frac, incl_len, _orig_len = struct.unpack_from(endian + PCAP_PACKET_HDR, blob, offset)
        offset += hdr_size
        if offset + incl_len > len(blob):
            out.truncated = True
            break
        ts_us = ts_sec * 1_000_000 + (ts_frac // 1000 if nanosecond else ts_frac)
        out.packets.append((ts_us, blob[offset:offset + incl_len]))
        offset += incl_len
    return out


def write_pcap(path: str | Path, packets: list[tuple[int, bytes]], linktype: int = LINKTYPE_RADIOTAP) -> None:
    """Write a classic little-endian microsecond pcap file."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<" + PCAP_GLOBAL_HDR, PCAP_MAGIC_US, 2, 4, 0, 0, SNAPLEN, linktype))
        for ts_us, data in packets:
            fh.write(struct.pack("<" + PCAP_PACKET_HDR, ts_us // 1_000_000, ts_us % 1_000_000,
                                 len(data), len(data)))
            fh.write(data)


def read_capture_file(
    path: str | Path,
    mode: CaptureMode = CaptureMode.MONITOR,
    receiver_clock: str = "header",
    epoch: str = "auto",
    duration_s: float | None = None,
    rp_id: str | None = None,
    run_index: int | None = None,
) -> CaptureSession:
    """Read beacons from a pcap or CSV file into a normalized session.

    receiver_clock selects the timestamp source: "header" uses the pcap
    per-packet capture header, "tsft" the radiotap MAC timer (packets
    without a TSFT field are then skipped and counted).

    epoch controls the session origin: "first" subtracts the first
    packet's clock value, "zero" keeps raw values, "auto" picks "zero"
    for synthetic near-zero timestamps and "first" for wall-clock ones.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv_session(path, mode=mode, duration_s=duration_s, rp_id=rp_id, run_index=run_index)

    if receiver_clock not in ("header", "tsft"):
        raise ValueError(f"receiver_clock must be 'header' or 'tsft', got {receiver_clock!r}")
    if epoch not in ("auto", "first", "zero"):
        raise ValueError(f"epoch must be 'auto', 'first' or 'zero', got {epoch!r}")

    pf = read_pcap(path)
    if pf.linktype != LINKTYPE_RADIOTAP:
        raise UnsupportedLinkType(f"{path}: link type {pf.linktype}, expected {LINKTYPE_RADIOTAP} (radiotap)")

    skipped = 1 if pf.truncated else 0
    raw: list[tuple[int, BeaconRecord]] = []   # (clock value, record with t filled later)
    identities: dict[tuple[str, str], ApIdentity] = {}
    first_header_clock = pf.packets[0][0] if pf.packets else 0

    for ts_us, data in pf.packets:
        try:
            radio, frame = decode_frame(data)
        except CodecError:
            skipped += 1
            continue
        if receiver_clock == "tsft":
            if radio.tsft is None:
                skipped += 1
                continue
            clock = radio.tsft
        else:
            clock = ts_us
        ssid = frame.ssid.decode("utf-8", errors="replace")
        key = (frame.bssid, ssid)
        ap = identities.get(key)
        if ap is None:
            ap = identities[key] = ApIdentity(bssid=frame.bssid, ssid=ssid)
        channel = frame.ds_channel
        if channel is None and radio.channel_freq is not None:
            channel = freq_to_channel(radio.channel_freq)
        raw.append((clock, BeaconRecord(
            t=0, rssi=radio.rssi, ap=ap,
            beacon_interval_tu=frame.beacon_interval_tu,
            sequence_number=frame.sequence_number, channel=channel,
        )))

    if receiver_clock == "tsft":
        base_clock = raw[0][0] if raw else 0
    else:
        base_clock = first_header_clock
    if epoch == "zero" or (epoch == "auto" and base_clock < _WALLCLOCK_THRESHOLD_US):
        base_clock = 0

    records = []
    for clock, rec in raw:
        rec.t = clock - base_clock
        if rec.t >= 0:
            records.append(rec)
        else:
            skipped += 1          # clock ran backwards past the session origin

    records, duplicates = _dedup_sorted(sort_records(records))
    meta = SessionMeta(source=str(path), skipped=skipped, duplicates=duplicates,
                       rp_id=rp_id, run_index=run_index, empty=not records)
    if duration_s is None:
        duration_s = float(max(1, math.ceil(records[-1].t / 1_000_000))) if records else 0.0
    session = CaptureSession(mode=mode, duration_s=duration_s, records=records, meta=meta)
    if records:
        session.validate()
    return session


def _dedup_sorted(records: list[BeaconRecord]) -> tuple[list[BeaconRecord], int]:
    """Drop repeats of (t, bssid): identical frames and same-µs collisions."""
    out: list[BeaconRecord] = []
    duplicates = 0
    last_key = None
    for rec in records:
        key = (rec.t, rec.ap.bssid)
        if key == last_key:
            duplicates += 1
            continue
        out.append(rec)
        last_key = key
    return out, duplicates


def write_capture_file(session: CaptureSession, path: str | Path) -> None:
    """Write a session as pcap (or CSV when the path ends in .csv).

    Beacon frames are synthesized from the records: the TSF timestamp
    mirrors the session-relative receiver time and sequence numbers fall
    back to a per-AP counter when a record carries none.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        write_csv_session(session, path)
        return
    packets = []
    counters: dict[str, int] = {}
    for rec in session.records:
        seq = rec.sequence_number
        if seq is None:
            seq = counters.get(rec.ap.bssid, 0)
        counters[rec.ap.bssid] = (seq + 1) % SEQ_MODULUS
        frame = BeaconFrame(
            bssid=rec.ap.bssid, source_addr=rec.ap.bssid,
            ssid=rec.ap.ssid.encode("utf-8"),
            beacon_interval_tu=rec.beacon_interval_tu,
            tsf_timestamp=rec.t, sequence_number=seq,
            ds_channel=rec.channel,
        )
        freq = channel_to_freq(rec.channel) if rec.channel is not None else None
        packets.append((rec.t, encode_frame(frame, rssi=rec.rssi, tsft=rec.t, channel_freq=freq)))
    write_pcap(path, packets)


def read_csv_session(
    path: str | Path,
    mode: CaptureMode = CaptureMode.MONITOR,
    duration_s: float | None = None,
    rp_id: str | None = None,
    run_index: int | None = None,
) -> CaptureSession:
    """Read the CSV fallback format (one beacon observation per row)."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    skipped = 0
    records: list[BeaconRecord] = []
    identities: dict[tuple[str, str], ApIdentity] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise UnreadableFile(f"{path}: expected header {','.join(CSV_HEADER)}")
        for row in reader:
            if not row:
                continue
            try:
                t = int(row[0])
                bssid = canonical_bssid(row[1])
                ssid = row[2]
                rssi = int(row[3])
                channel = int(row[4]) if row[4].strip() else None
                interval = int(row[5])
                if t < 0 or not -120 <= rssi <= 0 or interval < 1:
                    raise ValueError
                if channel is not None and not 0 < channel < 256:
                    raise ValueError
            except (ValueError, IndexError):
                skipped += 1
                continue
            key = (bssid, ssid)
            ap = identities.get(key)
            if ap is None:
                ap = identities[key] = ApIdentity(bssid=bssid, ssid=ssid)
            records.append(BeaconRecord(t=t, rssi=rssi, ap=ap, beacon_interval_tu=interval,
                                        sequence_number=None, channel=channel))

    records, duplicates = _dedup_sorted(sort_records(records))
    meta = SessionMeta(source=str(path), skipped=skipped, duplicates=duplicates,
                       rp_id=rp_id, run_index=run_index, empty=not records)
    if duration_s is None:
        duration_s = float(max(1, math.ceil(records[-1].t / 1_000_000))) if records else 0.0
    session = CaptureSession(mode=mode, duration_s=duration_s, records=records, meta=meta)
    if records:
        session.validate()
    return session


def write_csv_session(session: CaptureSession, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in session.records:
            writer.writerow([
                rec.t, rec.ap.bssid, rec.ap.ssid, rec.rssi,
                rec.channel if rec.channel is not None else "",
                rec.beacon_interval_tu,
            ])
