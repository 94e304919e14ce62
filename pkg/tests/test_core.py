"""Timing constants, rate math, and session containers."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from beaconlab.core import (ApIdentity, BeaconRecord, CaptureMode,
                            CaptureSession, NonPositiveInterval, RunSet,
                            SessionMeta, SessionOrderError, TU_US,
                            canonical_bssid, format_rate, sort_records,
                            theoretical_rate, theoretical_rate_exact,
                            tu_to_ms)

AP1 = ApIdentity(bssid="02:00:00:00:00:01", ssid="A")
AP2 = ApIdentity(bssid="02:00:00:00:00:02", ssid="B")


class TestTimeUnits:
    def test_tu_is_1024_us(self):
        assert TU_US == 1024

    def test_tu_to_ms_standard_interval(self):
        assert tu_to_ms(100) == 102.4

    def test_tu_to_ms_normal_slot(self):
        assert tu_to_ms(1000) == 1024.0

    @given(st.integers(min_value=1, max_value=65535))
    def test_tu_to_ms_matches_exact_rational(self, tu):
        assert tu_to_ms(tu) == float(Fraction(tu * 1024, 1000))


class TestTheoreticalRate:
    def test_monitor_raw_value(self):
        # 1e6 / 102400 is a dyadic rational, exact in binary floating point
        assert theoretical_rate(CaptureMode.MONITOR, beacon_interval_tu=100) == 9.765625

    def test_normal_raw_value(self):
        assert theoretical_rate(CaptureMode.NORMAL, report_interval_tu=1000) == 0.9765625

    def test_monitor_displays_9_77(self):
        assert format_rate(theoretical_rate(CaptureMode.MONITOR)) == "9.77"

    def test_normal_displays_0_977(self):
        assert format_rate(theoretical_rate(CaptureMode.NORMAL)) == "0.977"

    def test_mode_ratio_is_exactly_ten(self):
        mon = theoretical_rate(CaptureMode.MONITOR, beacon_interval_tu=100)
        nor = theoretical_rate(CaptureMode.NORMAL, report_interval_tu=1000)
        assert mon / nor == 10.0

    @given(st.integers(min_value=1, max_value=10000))
    def test_exact_fraction_agrees(self, tu):
        exact = theoretical_rate_exact(CaptureMode.MONITOR, beacon_interval_tu=tu)
        assert exact == Fraction(1_000_000, tu * 1024)
        assert theoretical_rate(CaptureMode.MONITOR, beacon_interval_tu=tu) == float(exact)

    def test_normal_uses_report_interval_not_beacon_interval(self):
        rate = theoretical_rate(CaptureMode.NORMAL, beacon_interval_tu=100,
                                report_interval_tu=2000)
        assert rate == pytest.approx(1e6 / (2000 * 1024))

    @pytest.mark.parametrize("tu", [0, -1, -100])
    def test_rejects_non_positive_interval(self, tu):
        with pytest.raises(NonPositiveInterval):
            theoretical_rate(CaptureMode.MONITOR, beacon_interval_tu=tu)
        with pytest.raises(NonPositiveInterval):
            theoretical_rate(CaptureMode.NORMAL, report_interval_tu=tu)

    def test_rejects_non_integer(self):
        with pytest.raises(NonPositiveInterval):
            theoretical_rate(CaptureMode.MONITOR, beacon_interval_tu=100.5)


class TestCaptureMode:
    @pytest.mark.parametrize("text,mode", [
        ("monitor", CaptureMode.MONITOR),
        ("Normal", CaptureMode.NORMAL),
        ("MONITOR", CaptureMode.MONITOR),
    ])
    def test_parse(self, text, mode):
        assert CaptureMode.parse(text) is mode

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError):
            CaptureMode.parse("promiscuous")


class TestApIdentity:
    def test_bssid_canonicalized(self):
        assert canonical_bssid("AA:BB:CC:DD:EE:FF") == "aa:bb:cc:dd:ee:ff"
        assert ApIdentity(bssid="AA:BB:CC:DD:EE:0F").bssid == "aa:bb:cc:dd:ee:0f"

    @pytest.mark.parametrize("bad", ["", "aabbcc", "aa:bb:cc:dd:ee", "zz:bb:cc:dd:ee:ff",
                                     "aa:bb:cc:dd:ee:ff:00"])
    def test_rejects_malformed_bssid(self, bad):
        with pytest.raises(ValueError):
            ApIdentity(bssid=bad)

    def test_ssid_does_not_affect_equality(self):
        assert ApIdentity(bssid="02:00:00:00:00:01", ssid="x") == \
               ApIdentity(bssid="02:00:00:00:00:01", ssid="y")


def _session(records, mode=CaptureMode.MONITOR, duration_s=10.0):
    return CaptureSession(mode=mode, duration_s=duration_s, records=records,
                          meta=SessionMeta(source="test"))


class TestCaptureSession:
    def test_accessors(self):
        recs = sort_records([
            BeaconRecord(t=0, rssi=-60, ap=AP1),
            BeaconRecord(t=5, rssi=-70, ap=AP2),
            BeaconRecord(t=102400, rssi=-61, ap=AP1),
        ])
        s = _session(recs)
        assert s.bssids() == [AP1.bssid, AP2.bssid]
        assert [r.rssi for r in s.records_for(AP1)] == [-60, -61]
        assert list(s.times_for(AP1.bssid)) == [0, 102400]

    def test_validate_rejects_time_outside_duration(self):
        s = _session([BeaconRecord(t=10_000_000, rssi=-60, ap=AP1)], duration_s=10.0)
        with pytest.raises(SessionOrderError):
            s.validate()

    def test_validate_rejects_negative_time(self):
        s = _session([BeaconRecord(t=-1, rssi=-60, ap=AP1)])
        with pytest.raises(SessionOrderError):
            s.validate()

    def test_validate_rejects_per_ap_duplicate_timestamp(self):
        s = _session([BeaconRecord(t=5, rssi=-60, ap=AP1),
                      BeaconRecord(t=5, rssi=-62, ap=AP1)])
        with pytest.raises(SessionOrderError):
            s.validate()

    def test_same_instant_across_aps_is_fine(self):
        s = _session(sort_records([BeaconRecord(t=5, rssi=-60, ap=AP1),
                                   BeaconRecord(t=5, rssi=-62, ap=AP2)]))
        s.validate()

    def test_validate_rejects_global_disorder(self):
        s = _session([BeaconRecord(t=9, rssi=-60, ap=AP1),
                      BeaconRecord(t=5, rssi=-62, ap=AP2)])
        with pytest.raises(SessionOrderError):
            s.validate()

    def test_aps_prefers_first_nonempty_ssid(self):
        recs = sort_records([
            BeaconRecord(t=0, rssi=-60, ap=ApIdentity(bssid="02:00:00:00:00:01", ssid="")),
            BeaconRecord(t=1, rssi=-60, ap=ApIdentity(bssid="02:00:00:00:00:01", ssid="Net")),
        ])
        (ap,) = _session(recs).aps()
        assert ap.ssid == "Net"


class TestRunSet:
    def test_rejects_mixed_modes(self):
        a = _session([], mode=CaptureMode.MONITOR)
        b = _session([], mode=CaptureMode.NORMAL)
        with pytest.raises(ValueError):
            RunSet(label="x", sessions=[a, b])

    def test_rejects_mixed_durations(self):
        a = _session([], duration_s=10.0)
        b = _session([], duration_s=20.0)
        with pytest.raises(ValueError):
            RunSet(label="x", sessions=[a, b])

    def test_collects_bssids_across_runs(self):
        a = _session([BeaconRecord(t=0, rssi=-60, ap=AP1)])
        b = _session([BeaconRecord(t=0, rssi=-60, ap=AP2)])
        rs = RunSet(label="x", sessions=[a, b])
        assert rs.bssids() == [AP1.bssid, AP2.bssid]
