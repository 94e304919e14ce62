"""Radiotap and 802.11 beacon frame codec.

Decoding is total: any byte buffer either yields a decoded structure or
raises a CodecError subclass.  Encoding produces a canonical minimal
radiotap header (version 0, single present word) so that
decode(encode(x)) round-trips every field.

Field sizes and alignments follow the public radiotap field registry.
Alignment is relative to the start of the radiotap header.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .core import BeaconLabError, canonical_bssid, bssid_bytes

# --- radiotap constants ---------------------------------------------------

RT_TSFT = 0
RT_FLAGS = 1
RT_CHANNEL = 3
RT_DBM_ANTSIGNAL = 5

RT_NS_RESET = 29
RT_VENDOR_NS = 30
RT_EXT = 31

RT_FLAG_FCS_AT_END = 0x10

# field index -> (size, alignment), radiotap namespace
RT_FIELD_LAYOUT = {
    0: (8, 8),    # TSFT
    1: (1, 1),    # flags
    2: (1, 1),    # rate
    3: (4, 2),    # channel (freq u16 + flags u16)
    4: (2, 2),    # FHSS
    5: (1, 1),    # dBm antenna signal
    6: (1, 1),    # dBm antenna noise
    7: (2, 2),    # lock quality
    8: (2, 2),    # TX attenuation
    9: (2, 2),    # dB TX attenuation
    10: (1, 1),   # dBm TX power
    11: (1, 1),   # antenna
    12: (1, 1),   # dB antenna signal
    13: (1, 1),   # dB antenna noise
    14: (2, 2),   # RX flags
    15: (2, 2),   # TX flags
    16: (1, 1),   # RTS retries
    17: (1, 1),   # data retries
    18: (8, 4),   # XChannel
    19: (3, 1),   # MCS
    20: (8, 4),   # A-MPDU status
    21: (12, 2),  # VHT
    22: (12, 8),  # timestamp
    23: (12, 2),  # HE
    24: (12, 2),  # HE-MU
    25: (6, 2),   # HE-MU other user
    26: (1, 1),   # 0-length PSDU
    27: (4, 2),   # L-SIG
}

_MAX_PRESENT_WORDS = 32

RSSI_MIN_DBM = -120
RSSI_MAX_DBM = 0

# --- 802.11 constants -----------------------------------------------------

FRAME_CONTROL_BEACON = 0x80
# retry (0x08) and order (0x80) bits are legal noise in the flags byte
FC_FLAGS_IGNORED_MASK = 0x88

TAG_SSID = 0
TAG_DS_CHANNEL = 3
SSID_MAX_LEN = 32
SEQ_MODULUS = 4096

MAC_HEADER_LEN = 24
BEACON_FIXED_LEN = 12
BROADCAST = b"\xff" * 6

# --- errors ---------------------------------------------------------------


class CodecError(BeaconLabError):
    """A buffer could not be decoded; the packet should be skipped."""


class TruncatedHeader(CodecError):
    """Radiotap header shorter than its declared or required length."""


class MalformedRadiotap(CodecError):
    """Radiotap header structurally invalid (bad version, bad present chain)."""


class MissingRssi(CodecError):
    """No dBm antenna signal field present."""


class InvalidRssi(CodecError):
    """Antenna signal outside the plausible dBm range."""


class TruncatedFrame(CodecError):
    """802.11 frame body too short for the claimed structure."""


class NotABeacon(CodecError):
    """Frame control does not identify a beacon management frame."""


class MalformedTaggedElement(CodecError):
    """A tagged element overruns the frame or violates its length rule."""


class InvalidField(CodecError):
    """A fixed field holds a value the standard does not allow."""


# --- decoded structures ---------------------------------------------------


@dataclass
class RadiotapInfo:
    rssi: int
    tsft: int | None = None
    channel_freq: int | None = None
    has_fcs: bool = False
    header_len: int = 0


@dataclass
class BeaconFrame:
    bssid: str
    source_addr: str
    ssid: bytes
    beacon_interval_tu: int
    tsf_timestamp: int
    sequence_number: int
    ds_channel: int | None = None


# --- radiotap decode ------------------------------------------------------


def decode_radiotap(buf: bytes) -> RadiotapInfo:
    """Parse a radiotap header, skipping unknown fields by the registry table.

    Only the fields this toolkit needs are extracted (TSFT, flags, channel,
    dBm antenna signal); everything else is stepped over.  An unknown field
    index stops the walk since its size cannot be known, keeping whatever
    was already extracted.
    """
    if len(buf) < 8:
        raise TruncatedHeader(f"radiotap header needs 8 bytes, got {len(buf)}")
    version, _pad, it_len = struct.unpack_from("<BBH", buf, 0)
    if version != 0:
        raise MalformedRadiotap(f"unsupported radiotap version {version}")
    if it_len < 8:
        raise MalformedRadiotap(f"declared radiotap length {it_len} below minimum")
    if it_len > len(buf):
        raise TruncatedHeader(f"declared radiotap length {it_len} exceeds buffer {len(buf)}")

    present_words = []
    offset = 4
    while True:
        if offset + 4 > it_len:
            raise MalformedRadiotap("present bitmask chain overruns header")
        (word,) = struct.unpack_from("<I", buf, offset)
        present_words.append(word)
        offset += 4
        if not word & (1 << RT_EXT):
            break
        if len(present_words) >= _MAX_PRESENT_WORDS:
            raise MalformedRadiotap("present bitmask chain too long")

    rssi: int | None = None
    tsft: int | None = None
    channel_freq: int | None = None
    has_fcs = False

    ns_start = 0          # word index where radiotap-namespace numbering restarts
    skip_words: set[int] = set()
    done = False
    for w, word in enumerate(present_words):
        if done:
            break
        if w in skip_words:
            continue
        for bit in range(31):
            if not word & (1 << bit):
                continue
            if bit == RT_NS_RESET:
                ns_start = w + 1
                continue
            if bit == RT_VENDOR_NS:
                # six-byte vendor header (OUI, sub-namespace, skip length)
                offset = _align(offset, 2)
                if offset + 6 > it_len:
                    raise TruncatedHeader("vendor namespace header overruns radiotap length")
                (skip_len,) = struct.unpack_from("<H", buf, offset + 4)
                offset += 6
                if offset + skip_len > it_len:
                    raise TruncatedHeader("vendor namespace data overruns radiotap length")
                offset += skip_len
                skip_words.add(w + 1)
                ns_start = w + 2
                continue
            field_idx = (w - ns_start) * 32 + bit
            layout = RT_FIELD_LAYOUT.get(field_idx)
            if layout is None:
                done = True
                break
            size, alignment = layout
            offset = _align(offset, alignment)
            if offset + size > it_len:
                raise TruncatedHeader(f"radiotap field {field_idx} overruns declared length")
            if field_idx == RT_TSFT and tsft is None:
                (tsft,) = struct.unpack_from("<Q", buf, offset)
            elif field_idx == RT_FLAGS:
                if buf[offset] & RT_FLAG_FCS_AT_END:
                    has_fcs = True
            elif field_idx == RT_CHANNEL and channel_freq is None:
                (channel_freq,) = struct.unpack_from("<H", buf, offset)
            elif field_idx == RT_DBM_ANTSIGNAL and rssi is None:
                (rssi,) = struct.unpack_from("<b", buf, offset)
            offset += size

    if rssi is None:
        raise MissingRssi("radiotap header carries no dBm antenna signal")
    if not RSSI_MIN_DBM <= rssi <= RSSI_MAX_DBM:
        raise InvalidRssi(f"antenna signal {rssi} dBm outside [{RSSI_MIN_DBM}, {RSSI_MAX_DBM}]")
    return RadiotapInfo(rssi=rssi, tsft=tsft, channel_freq=channel_freq,
                        has_fcs=has_fcs, header_len=it_len)


def _align(offset: int, alignment: int) -> int:
    rem = offset % alignment
    return offset if rem == 0 else offset + (alignment - rem)


def encode_radiotap(rssi: int, tsft: int | None = None, channel_freq: int | None = None) -> bytes:
    """Emit a canonical minimal radiotap header for the given fields."""
    if not RSSI_MIN_DBM <= rssi <= RSSI_MAX_DBM:
        raise ValueError(f"rssi {rssi} outside [{RSSI_MIN_DBM}, {RSSI_MAX_DBM}] dBm")
    present = 1 << RT_DBM_ANTSIGNAL
    if tsft is not None:
        if not 0 <= tsft < 2**64:
            raise ValueError("tsft must fit an unsigned 64-bit counter")
        present |= 1 << RT_TSFT
    if channel_freq is not None:
        if not 0 < channel_freq < 2**16:
            raise ValueError("channel frequency must fit an unsigned 16-bit field")
        present |= 1 << RT_CHANNEL

    body = bytearray()
    offset = 8
    if tsft is not None:
        pad = _align(offset, 8) - offset
        body += b"\x00" * pad + struct.pack("<Q", tsft)
        offset += pad + 8
    if channel_freq is not None:
        pad = _align(offset, 2) - offset
        flags = 0x00A0 if channel_freq < 3000 else 0x0140
        body += b"\x00" * pad + struct.pack("<HH", channel_freq, flags)
        offset += pad + 4
    body += struct.pack("<b", rssi)
    offset += 1
    return struct.pack("<BBHI", 0, 0, offset, present) + bytes(body)


# --- beacon decode --------------------------------------------------------


def decode_beacon(body: bytes) -> BeaconFrame:
    """Parse a beacon management frame (radiotap already removed, no FCS)."""
    if len(body) < 2:
        raise TruncatedFrame(f"frame needs at least 2 bytes, got {len(body)}")
    if body[0] != FRAME_CONTROL_BEACON or body[1] & ~FC_FLAGS_IGNORED_MASK:
        raise NotABeacon(f"frame control {body[0]:#04x} {body[1]:#04x} is not a beacon")
    if len(body) < MAC_HEADER_LEN + BEACON_FIXED_LEN:
        raise TruncatedFrame(f"beacon needs {MAC_HEADER_LEN + BEACON_FIXED_LEN} bytes, got {len(body)}")

    source = canonical_bssid(body[10:16])
    bssid = canonical_bssid(body[16:22])
    (seq_ctrl,) = struct.unpack_from("<H", body, 22)
    sequence = seq_ctrl >> 4

    tsf, interval, _capability = struct.unpack_from("<QHH", body, MAC_HEADER_LEN)
    if interval == 0:
        raise InvalidField("advertised beacon interval of 0 TU")

    ssid = b""
    ssid_seen = False
    ds_channel = None
    pos = MAC_HEADER_LEN + BEACON_FIXED_LEN
    while pos < len(body):
        if pos + 2 > len(body):
            raise MalformedTaggedElement(f"dangling tag byte at offset {pos}")
        tag, tlen = body[pos], body[pos + 1]
        if pos + 2 + tlen > len(body):
            raise MalformedTaggedElement(f"tag {tag} length {tlen} overruns frame")
        value = body[pos + 2:pos + 2 + tlen]
        if tag == TAG_SSID and not ssid_seen:
            if tlen > SSID_MAX_LEN:
                raise MalformedTaggedElement(f"SSID length {tlen} exceeds {SSID_MAX_LEN}")
            ssid = value
            ssid_seen = True
        elif tag == TAG_DS_CHANNEL and ds_channel is None:
            if tlen != 1:
                raise MalformedTaggedElement(f"DS parameter set length {tlen}, expected 1")
            ds_channel = value[0]
        pos += 2 + tlen

    return BeaconFrame(bssid=bssid, source_addr=source, ssid=ssid,
                       beacon_interval_tu=interval, tsf_timestamp=tsf,
                       sequence_number=sequence, ds_channel=ds_channel)


def encode_beacon(frame: BeaconFrame) -> bytes:
    """Emit the management frame body for a beacon (no radiotap, no FCS)."""
    if not 1 <= frame.beacon_interval_tu <= 0xFFFF:
        raise ValueError(f"beacon interval {frame.beacon_interval_tu} outside [1, 65535] TU")
    if not 0 <= frame.sequence_number < SEQ_MODULUS:
        raise ValueError(f"sequence number {frame.sequence_number} outside [0, {SEQ_MODULUS})")
    if len(frame.ssid) > SSID_MAX_LEN:
        raise ValueError(f"ssid longer than {SSID_MAX_LEN} bytes")
    if not 0 <= frame.tsf_timestamp < 2**64:
        raise ValueError("tsf timestamp must fit an unsigned 64-bit counter")

    out = bytearray()
    out += bytes([FRAME_CONTROL_BEACON, 0x00])
    out += struct.pack("<H", 0)                      # duration
    out += BROADCAST                                 # addr1: destination
    out += bssid_bytes(frame.source_addr)            # addr2: source
    out += bssid_bytes(frame.bssid)                  # addr3: BSSID
    out += struct.pack("<H", frame.sequence_number << 4)
    out += struct.pack("<QHH", frame.tsf_timestamp, frame.beacon_interval_tu, 0x0001)
    out += bytes([TAG_SSID, len(frame.ssid)]) + frame.ssid
    if frame.ds_channel is not None:
        if not 0 < frame.ds_channel < 256:
            raise ValueError(f"DS channel {frame.ds_channel} does not fit one byte")
        out += bytes([TAG_DS_CHANNEL, 1, frame.ds_channel])
    return bytes(out)


# --- whole packets --------------------------------------------------------


def decode_frame(packet: bytes) -> tuple[RadiotapInfo, BeaconFrame]:
    """Decode radiotap + beacon from one captured packet."""
    radio = decode_radiotap(packet)
    body = packet[radio.header_len:]
    if radio.has_fcs:
        if len(body) < 4:
            raise TruncatedFrame("frame too short to carry the advertised FCS")
        body = body[:-4]
    return radio, decode_beacon(body)


def encode_frame(frame: BeaconFrame, rssi: int, tsft: int | None = None,
                 channel_freq: int | None = None) -> bytes:
    """Encode one beacon as a radiotap-encapsulated packet."""
    if channel_freq is None and frame.ds_channel is not None:
        channel_freq = channel_to_freq(frame.ds_channel)
    return encode_radiotap(rssi, tsft=tsft, channel_freq=channel_freq) + encode_beacon(frame)


# --- channel/frequency mapping --------------------------------------------


def channel_to_freq(channel: int) -> int:
    """Center frequency in MHz for a 2.4 or 5 GHz channel number."""
    if 1 <= channel <= 13:
        return 2407 + 5 * channel
    if channel == 14:
        return 2484
    if 32 <= channel <= 177:
        return 5000 + 5 * channel
    raise ValueError(f"unmapped channel number {channel}")


def freq_to_channel(freq: int) -> int | None:
    """Inverse of channel_to_freq; None when the frequency maps to no channel."""
    if 2412 <= freq <= 2472 and (freq - 2407) % 5 == 0:
        return (freq - 2407) // 5
    if freq == 2484:
        return 14
    if 5160 <= freq <= 5885 and (freq - 5000) % 5 == 0:
        return (freq - 5000) // 5
    return None
