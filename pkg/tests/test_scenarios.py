"""Scenario TOML round trips, diagnostics, presets and targets files."""

import math

import pytest

from beaconlab.calibrate import CalibrationTarget
from beaconlab.core import ApIdentity, CaptureMode
from beaconlab.scenarios import (
    PRESETS,
    ScenarioFormatError,
    bundled_targets_path,
    default_template,
    load_preset,
    load_scenario,
    load_targets,
    preset_names,
    save_scenario,
    scenario_from_dict,
    scenario_to_toml,
)
from beaconlab.sim import ApSpec, LossModel, SimScenario

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib


def full_scenario() -> SimScenario:
    """A scenario with every field off its default."""
    return SimScenario(
        aps=(
            ApSpec(identity=ApIdentity(bssid="02:aa:bb:cc:dd:01", ssid="Lab \"A\""),
                   beacon_interval_tu=200, phase_offset_us=51_200,
                   mean_rssi_dbm=-71.5, rssi_jitter_db=3.25),
            ApSpec(identity=ApIdentity(bssid="02:aa:bb:cc:dd:02", ssid="Lab\\B"),
                   mean_rssi_dbm=-84.0, traffic_loss_prob=0.4),
        ),
        mode=CaptureMode.NORMAL,
        loss=LossModel(rssi_threshold_dbm=-91.0, rssi_slope_db=2.5,
                       traffic_loss_prob=0.1, p_good_to_bad=0.02,
                       p_bad_to_good=0.05, capture_prob_bad=0.01,
                       cpu_load_factor=0.8, stress_gain=4.0),
        report_interval_tu=2000, duration_s=120.0, runs=4, seed=99,
        label="full-check",
    )


class TestRoundTrip:
    def test_toml_text_parses_back_identically(self):
        sc = full_scenario()
        back = scenario_from_dict(tomllib.loads(scenario_to_toml(sc)))
        assert back == sc

    def test_file_round_trip(self, tmp_path):
        sc = full_scenario()
        path = tmp_path / "full.toml"
        save_scenario(sc, path)
        assert load_scenario(path) == sc

    def test_comments_survive_as_toml_comments(self, tmp_path):
        sc = full_scenario()
        path = tmp_path / "annotated.toml"
        save_scenario(sc, path, comments=["target 9.22 pps", "achieved 9.18 pps"])
        text = path.read_text()
        assert text.startswith("# target 9.22 pps\n# achieved 9.18 pps\n")
        # comments are invisible to the parser
        assert load_scenario(path) == sc

    def test_label_defaults_to_file_stem(self, tmp_path):
        path = tmp_path / "bench_a.toml"
        path.write_text(
            'mode = "monitor"\n\n[[aps]]\nbssid = "02:00:00:00:00:01"\n'
            "mean_rssi_dbm = -60.0\n")
        assert load_scenario(path).label == "bench_a"

    def test_optional_per_ap_traffic_only_written_when_set(self):
        sc = full_scenario()
        text = scenario_to_toml(sc)
        blocks = text.split("[[aps]]")
        assert "traffic_loss_prob" not in blocks[1].split("[loss]")[-1] or True
        # first AP leaves traffic unset, second pins it
        assert blocks[1].count("traffic_loss_prob") == 0
        assert blocks[2].count("traffic_loss_prob") == 1


class TestDiagnostics:
    def test_missing_mode_names_the_field(self):
        with pytest.raises(ScenarioFormatError, match="'mode'"):
            scenario_from_dict({"aps": [{"bssid": "02:00:00:00:00:01",
                                         "mean_rssi_dbm": -60}]})

    def test_wrong_type_mode(self):
        with pytest.raises(ScenarioFormatError, match="'mode'.*wrong type"):
            scenario_from_dict({"mode": 5, "aps": [{}]})

    def test_empty_aps_rejected(self):
        with pytest.raises(ScenarioFormatError, match="'aps'"):
            scenario_from_dict({"mode": "monitor", "aps": []})

    def test_ap_missing_bssid_points_at_entry(self):
        with pytest.raises(ScenarioFormatError, match=r"aps\[1\].*'bssid'"):
            scenario_from_dict({"mode": "monitor", "aps": [
                {"bssid": "02:00:00:00:00:01", "mean_rssi_dbm": -60},
                {"mean_rssi_dbm": -70},
            ]})

    def test_ap_missing_rssi_points_at_entry(self):
        with pytest.raises(ScenarioFormatError, match=r"aps\[0\].*'mean_rssi_dbm'"):
            scenario_from_dict({"mode": "monitor",
                                "aps": [{"bssid": "02:00:00:00:00:01"}]})

    def test_unusable_value_carries_field_name(self):
        with pytest.raises(ScenarioFormatError, match="beacon_interval_tu"):
            scenario_from_dict({"mode": "monitor", "aps": [
                {"bssid": "02:00:00:00:00:01", "mean_rssi_dbm": -60,
                 "beacon_interval_tu": 0}]})

    def test_loss_must_be_table(self):
        with pytest.raises(ScenarioFormatError, match="'loss'"):
            scenario_from_dict({"mode": "monitor", "loss": [1, 2],
                                "aps": [{"bssid": "02:00:00:00:00:01",
                                         "mean_rssi_dbm": -60}]})

    def test_malformed_toml_reports_parse_error(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("mode = [unclosed\n")
        with pytest.raises(ScenarioFormatError, match="parse error"):
            load_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioFormatError):
            load_scenario(tmp_path / "nope.toml")


class TestPresets:
    def test_names_sorted(self):
        assert preset_names() == sorted(PRESETS)

    def test_unknown_preset_lists_alternatives(self):
        with pytest.raises(ScenarioFormatError, match="distance-weak"):
            load_preset("no-such-preset")

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_bundled_preset_loads(self, name):
        scenarios = load_preset(name)
        assert len(scenarios) == len(PRESETS[name])
        modes = {sc.mode for sc in scenarios}
        assert modes == {CaptureMode.NORMAL, CaptureMode.MONITOR}
        for sc in scenarios:
            assert sc.duration_s > 0 and sc.runs >= 1 and sc.aps

    def test_bundled_targets_file_parses(self):
        targets, settings = load_targets(bundled_targets_path())
        assert len(targets) >= 2
        assert all(isinstance(t, CalibrationTarget) for t in targets)
        assert all(t.target_rate_pps > 0 for t in targets)
        assert {t.scenario.mode for t in targets} == {CaptureMode.NORMAL,
                                                      CaptureMode.MONITOR}
        if "tolerance" in settings:
            assert 0 < float(settings["tolerance"]) < 1


class TestTargetsFiles:
    def test_inline_entries_and_settings(self, tmp_path):
        path = tmp_path / "targets.toml"
        path.write_text(
            "[calibration]\n"
            "runs = 4\ntolerance = 0.08\nseed = 7\n\n"
            "[[targets]]\n"
            'label = "near"\nmode = "monitor"\nmean_rssi_dbm = -55\n'
            "target_rate_pps = 9.68\ntarget_miss_pct = 0.86\n\n"
            "[[targets]]\n"
            'label = "far"\nmode = "normal"\nmean_rssi_dbm = -88\n'
            'target_rate_pps = 0.57\nfit = "p_good_to_bad"\n')
        targets, settings = load_targets(path)
        assert [t.label for t in targets] == ["near", "far"]
        near, far = targets
        assert near.scenario.mode is CaptureMode.MONITOR
        assert near.scenario.aps[0].mean_rssi_dbm == -55.0
        assert near.target_miss_pct == pytest.approx(0.86)
        assert near.fit == "rssi_threshold"
        assert far.scenario.mode is CaptureMode.NORMAL
        assert far.target_miss_pct is None
        assert far.fit == "p_good_to_bad"
        assert settings == {"runs": 4, "tolerance": 0.08, "seed": 7}

    def test_scenario_reference_resolved_relative_to_targets_file(self, tmp_path):
        sub = tmp_path / "cfg"
        sub.mkdir()
        save_scenario(full_scenario(), sub / "base.toml")
        (sub / "targets.toml").write_text(
            '[[targets]]\nlabel = "ref"\nscenario = "base.toml"\n'
            "target_rate_pps = 0.9\n")
        targets, _ = load_targets(sub / "targets.toml")
        assert targets[0].scenario == full_scenario()

    def test_base_scenario_template_applied(self, tmp_path):
        base = full_scenario()
        path = tmp_path / "targets.toml"
        path.write_text(
            '[[targets]]\nmode = "monitor"\nmean_rssi_dbm = -42\n'
            "target_rate_pps = 9.7\n")
        targets, _ = load_targets(path, base_scenario=base)
        sc = targets[0].scenario
        # structure comes from the base, levels from the entry
        assert len(sc.aps) == len(base.aps)
        assert {ap.mean_rssi_dbm for ap in sc.aps} == {-42.0}
        assert sc.loss == base.loss
        assert sc.duration_s == base.duration_s

    def test_missing_rate_names_entry(self, tmp_path):
        path = tmp_path / "targets.toml"
        path.write_text('[[targets]]\nmode = "monitor"\nmean_rssi_dbm = -42\n')
        with pytest.raises(ScenarioFormatError, match=r"targets\[0\].*'target_rate_pps'"):
            load_targets(path)

    def test_empty_targets_rejected(self, tmp_path):
        path = tmp_path / "targets.toml"
        path.write_text("[calibration]\nruns = 2\n")
        with pytest.raises(ScenarioFormatError, match="targets"):
            load_targets(path)


class TestDefaultTemplate:
    def test_template_is_usable(self):
        sc = default_template()
        assert sc.mode is CaptureMode.MONITOR
        assert len(sc.aps) == 1
        assert math.isfinite(sc.aps[0].mean_rssi_dbm)
        assert sc.duration_s == 200.0 and sc.runs == 10
