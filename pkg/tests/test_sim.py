"""Simulator schedule, loss model, delivery, and reproducibility."""

import numpy as np
import pytest

from beaconlab.core import ApIdentity, CaptureMode
from beaconlab.sim import (ApSpec, ChainState, LossModel, SimScenario,
                           apply_mode_delivery, beacon_schedule,
                           capture_decision, max_deliveries, simulate)

ID1 = ApIdentity(bssid="02:00:00:00:00:01", ssid="A")
ID2 = ApIdentity(bssid="02:00:00:00:00:02", ssid="B")

OPEN = LossModel(rssi_threshold_dbm=-200.0)   # effectively lossless


def scenario(mode=CaptureMode.MONITOR, loss=OPEN, aps=None, **kw):
    kw.setdefault("duration_s", 200.0)
    kw.setdefault("runs", 2)
    kw.setdefault("seed", 11)
    kw.setdefault("label", "t")
    if aps is None:
        aps = (ApSpec(identity=ID1, mean_rssi_dbm=-60.0),)
    return SimScenario(aps=aps, mode=mode, loss=loss, **kw)


class TestSchedule:
    def test_standard_interval_200s_has_1954_emissions(self):
        times = beacon_schedule(ApSpec(identity=ID1), 200.0)
        assert len(times) == 1954
        assert times[0] == 0
        assert times[-1] == 1953 * 102_400

    def test_200tu_interval_in_one_slot_has_5_emissions(self):
        ap = ApSpec(identity=ID1, beacon_interval_tu=200)
        times = beacon_schedule(ap, 1.024)
        assert list(times) == [0, 204_800, 409_600, 614_400, 819_200]

    def test_phase_offset_shifts_schedule(self):
        ap = ApSpec(identity=ID1, phase_offset_us=42)
        times = beacon_schedule(ap, 1.0)
        assert times[0] == 42
        assert np.all(np.diff(times) == 102_400)

    def test_rejects_non_positive_duration(self):
        with pytest.raises(ValueError):
            beacon_schedule(ApSpec(identity=ID1), 0.0)


class TestModeDelivery:
    def test_monitor_delivers_everything(self):
        times = np.array([0, 50_000, 102_400, 1_024_000])
        assert list(apply_mode_delivery(times, CaptureMode.MONITOR)) == [0, 1, 2, 3]

    def test_normal_first_capture_per_slot(self):
        times = np.array([0, 50_000, 102_400, 1_024_000, 1_100_000, 2_048_000])
        idx = apply_mode_delivery(times, CaptureMode.NORMAL, 1000)
        assert list(idx) == [0, 3, 5]

    def test_normal_skips_slot_with_no_captures(self):
        idx = apply_mode_delivery(np.array([0, 2_048_000]), CaptureMode.NORMAL, 1000)
        assert list(idx) == [0, 1]

    def test_empty_input(self):
        assert len(apply_mode_delivery(np.array([], dtype=np.int64),
                                       CaptureMode.NORMAL)) == 0

    def test_bad_report_interval(self):
        with pytest.raises(ValueError):
            apply_mode_delivery(np.array([0]), CaptureMode.NORMAL, 0)


class TestZeroLoss:
    def test_monitor_delivers_full_schedule(self):
        rs = simulate(scenario())
        for s in rs.sessions:
            assert len(s.records) == 1954
        assert len(s.records) / 200.0 == 9.77

    def test_normal_delivers_one_per_slot(self):
        rs = simulate(scenario(mode=CaptureMode.NORMAL))
        for s in rs.sessions:
            assert len(s.records) == 196
        assert len(s.records) / 200.0 == 0.98

    def test_sequence_numbers_follow_schedule_index(self):
        rs = simulate(scenario(runs=1, duration_s=2.0))
        recs = rs.sessions[0].records
        assert [r.t for r in recs[:3]] == [0, 102_400, 204_800]
        assert [r.sequence_number for r in recs[:3]] == [0, 1, 2]

    def test_zero_jitter_reports_exact_mean(self):
        sc = scenario(runs=1, duration_s=5.0,
                      aps=(ApSpec(identity=ID1, mean_rssi_dbm=-60.0,
                                  rssi_jitter_db=0.0),))
        assert {r.rssi for r in simulate(sc).sessions[0].records} == {-60}

    def test_session_metadata(self):
        rs = simulate(scenario(runs=3, duration_s=1.0))
        assert [s.meta.run_index for s in rs.sessions] == [0, 1, 2]
        assert all(s.meta.source == "sim:t" for s in rs.sessions)
        assert rs.mode is CaptureMode.MONITOR


class TestDeterminism:
    def test_same_seed_identical_output(self):
        a = simulate(scenario(duration_s=20.0))
        b = simulate(scenario(duration_s=20.0))
        for sa, sb in zip(a.sessions, b.sessions):
            assert sa.records == sb.records

    def test_different_seed_differs(self):
        loss = LossModel(rssi_threshold_dbm=-60.0)
        a = simulate(scenario(loss=loss, duration_s=20.0, seed=1))
        b = simulate(scenario(loss=loss, duration_s=20.0, seed=2))
        assert [r.t for r in a.sessions[0].records] != [r.t for r in b.sessions[0].records]

    def test_ap_substreams_independent(self):
        loss = LossModel(rssi_threshold_dbm=-62.0)
        solo = simulate(scenario(loss=loss, duration_s=20.0))
        pair = simulate(scenario(loss=loss, duration_s=20.0, aps=(
            ApSpec(identity=ID1, mean_rssi_dbm=-60.0),
            ApSpec(identity=ID2, mean_rssi_dbm=-60.0))))
        for s_solo, s_pair in zip(solo.sessions, pair.sessions):
            assert s_solo.records == s_pair.records_for(ID1)

    def test_chain_uniforms_drawn_even_when_chain_idle(self):
        # changing the exit probability of a never-entered Bad state must
        # not shift the capture draws
        a = simulate(scenario(loss=LossModel(rssi_threshold_dbm=-61.0,
                                             p_good_to_bad=0.0, p_bad_to_good=1.0),
                              duration_s=20.0))
        b = simulate(scenario(loss=LossModel(rssi_threshold_dbm=-61.0,
                                             p_good_to_bad=0.0, p_bad_to_good=0.25),
                              duration_s=20.0))
        for sa, sb in zip(a.sessions, b.sessions):
            assert sa.records == sb.records


class TestMonotonicity:
    @pytest.mark.parametrize("mode", [CaptureMode.MONITOR, CaptureMode.NORMAL])
    def test_raising_threshold_never_adds_records(self, mode):
        counts = []
        for thr in (-90.0, -75.0, -60.0, -45.0):
            sc = scenario(mode=mode, loss=LossModel(rssi_threshold_dbm=thr),
                          duration_s=50.0, runs=3)
            counts.append([len(s.records) for s in simulate(sc).sessions])
        for lo, hi in zip(counts[1:], counts[:-1]):
            assert all(a <= b for a, b in zip(lo, hi))

    @pytest.mark.parametrize("mode", [CaptureMode.MONITOR, CaptureMode.NORMAL])
    def test_raising_traffic_loss_never_adds_records(self, mode):
        counts = []
        for traffic in (0.0, 0.3, 0.7, 1.0):
            sc = scenario(mode=mode,
                          loss=LossModel(rssi_threshold_dbm=-200.0,
                                         traffic_loss_prob=traffic),
                          duration_s=50.0, runs=3)
            counts.append([len(s.records) for s in simulate(sc).sessions])
        for lo, hi in zip(counts[1:], counts[:-1]):
            assert all(a <= b for a, b in zip(lo, hi))
        assert counts[-1] == [0, 0, 0]


class TestAgainstAnalyticCounts:
    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_iid_thinning_matches_binomial(self, p):
        sc = scenario(loss=LossModel(rssi_threshold_dbm=-200.0,
                                     traffic_loss_prob=1.0 - p),
                      runs=10, seed=23)
        total = sum(len(s.records) for s in simulate(sc).sessions)
        n = 10 * 1954
        sigma = (n * p * (1 - p)) ** 0.5
        assert abs(total - n * p) <= 3 * sigma

    def test_chain_occupancy_matches_stationary_fraction(self):
        # Good/Bad chain with pi_bad = 0.2/(0.2+0.4) = 1/3 and hard Bad outage
        sc = scenario(loss=LossModel(rssi_threshold_dbm=-200.0,
                                     p_good_to_bad=0.2, p_bad_to_good=0.4),
                      runs=20, seed=31)
        total = sum(len(s.records) for s in simulate(sc).sessions)
        n = 20 * 1954
        expect = n * (2 / 3)
        assert abs(total - expect) <= 0.03 * expect

    def test_cpu_stress_scales_chain_entry(self):
        base = LossModel(rssi_threshold_dbm=-200.0, p_good_to_bad=0.05,
                         p_bad_to_good=0.5)
        stressed = LossModel(rssi_threshold_dbm=-200.0, p_good_to_bad=0.05,
                             p_bad_to_good=0.5, cpu_load_factor=0.8,
                             stress_gain=10.0)
        assert stressed.effective_p_good_to_bad() == pytest.approx(0.45)
        n_base = sum(len(s.records) for s in simulate(scenario(loss=base, runs=5)).sessions)
        n_str = sum(len(s.records) for s in simulate(scenario(loss=stressed, runs=5, seed=11)).sessions)
        assert n_str < n_base


class TestScalarReference:
    def test_capture_decision_matches_state_gating(self):
        loss = LossModel(rssi_threshold_dbm=-200.0, capture_prob_bad=0.0,
                         p_good_to_bad=1.0, p_bad_to_good=1.0)
        rng = np.random.default_rng(0)
        captured, nxt = capture_decision(-60.0, ChainState.GOOD, loss, rng)
        assert captured            # Good state, p ~ 1
        assert nxt is ChainState.BAD
        captured, nxt = capture_decision(-60.0, ChainState.BAD, loss, rng)
        assert not captured        # hard outage in Bad
        assert nxt is ChainState.GOOD


class TestValidation:
    @pytest.mark.parametrize("field,kw", [
        ("duration_s", dict(duration_s=0.0)),
        ("runs", dict(runs=0)),
        ("report_interval_tu", dict(report_interval_tu=0)),
        ("rng_algorithm", dict(rng_algorithm="mt19937")),
    ])
    def test_scenario_fields_named_in_error(self, field, kw):
        with pytest.raises(ValueError, match=field):
            scenario(**kw)

    def test_empty_ap_list_rejected(self):
        with pytest.raises(ValueError, match="aps"):
            scenario(aps=())

    def test_duplicate_bssid_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            scenario(aps=(ApSpec(identity=ID1), ApSpec(identity=ID1)))

    @pytest.mark.parametrize("field,kw", [
        ("rssi_slope_db", dict(rssi_slope_db=0.0)),
        ("p_bad_to_good", dict(p_bad_to_good=0.0)),
        ("capture_prob_bad", dict(capture_prob_bad=1.5)),
        ("traffic_loss_prob", dict(traffic_loss_prob=-0.1)),
        ("cpu_load_factor", dict(cpu_load_factor=2.0)),
        ("stress_gain", dict(stress_gain=-1.0)),
    ])
    def test_loss_fields_named_in_error(self, field, kw):
        with pytest.raises(ValueError, match=field):
            LossModel(**kw)

    @pytest.mark.parametrize("field,kw", [
        ("beacon_interval_tu", dict(beacon_interval_tu=0)),
        ("phase_offset_us", dict(phase_offset_us=102_400)),
        ("mean_rssi_dbm", dict(mean_rssi_dbm=10.0)),
        ("rssi_jitter_db", dict(rssi_jitter_db=-1.0)),
    ])
    def test_ap_fields_named_in_error(self, field, kw):
        with pytest.raises(ValueError, match=field):
            ApSpec(identity=ID1, **kw)

    def test_with_seed(self):
        assert scenario().with_seed(99).seed == 99


class TestMaxDeliveries:
    def test_monitor_is_schedule_length(self):
        sc = scenario()
        assert max_deliveries(sc, sc.aps[0]) == 1954

    def test_normal_is_slot_count(self):
        sc = scenario(mode=CaptureMode.NORMAL)
        assert max_deliveries(sc, sc.aps[0]) == 196

    def test_sparse_schedule_caps_below_slots(self):
        ap = ApSpec(identity=ID1, beacon_interval_tu=5000)
        sc = scenario(mode=CaptureMode.NORMAL, aps=(ap,), duration_s=20.0)
        assert max_deliveries(sc, ap) == len(beacon_schedule(ap, 20.0)) == 4

    def test_simulated_counts_never_exceed_cap(self):
        for mode in (CaptureMode.MONITOR, CaptureMode.NORMAL):
            sc = scenario(mode=mode, duration_s=30.0, runs=4)
            cap = max_deliveries(sc, sc.aps[0])
            assert all(len(s.records) <= cap for s in simulate(sc).sessions)
