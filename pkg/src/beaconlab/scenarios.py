"""Scenario configuration files (TOML) and bundled presets.

A scenario file holds top-level run settings, one [loss] section and one
[[aps]] array.  The writer emits comments for calibration annotations;
the reader reports unusable values by field name.
"""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .calibrate import CalibrationTarget
from .core import ApIdentity, BeaconLabError, CaptureMode, canonical_bssid
from .sim import ApSpec, LossModel, RNG_ALGORITHM, SimScenario

DATA_PACKAGE = "beaconlab.data"

# preset name -> bundled scenario files (each preset covers both capture
# modes; the cpu presets additionally cover both chipset loss profiles)
PRESETS = {
    "traffic": [
        "traffic_normal.toml",
        "traffic_monitor.toml",
    ],
    "distance-strong": [
        "distance_strong_normal.toml",
        "distance_strong_monitor.toml",
    ],
    "distance-weak": [
        "distance_weak_normal.toml",
        "distance_weak_monitor.toml",
    ],
    "cpu-50": [
        "cpu50_atheros_normal.toml",
        "cpu50_atheros_monitor.toml",
        "cpu50_ralink_normal.toml",
        "cpu50_ralink_monitor.toml",
    ],
    "cpu-80": [
        "cpu80_atheros_normal.toml",
        "cpu80_atheros_monitor.toml",
        "cpu80_ralink_normal.toml",
        "cpu80_ralink_monitor.toml",
    ],
}

DISTANCE_TARGETS_RESOURCE = "distance_targets.toml"


class ScenarioFormatError(BeaconLabError, ValueError):
    """A scenario or targets file could not be parsed or validated."""


# --- loading --------------------------------------------------------------


def scenario_from_dict(doc: dict, label_default: str = "scenario") -> SimScenario:
    try:
        mode = CaptureMode.parse(_need(doc, "mode", str))
        loss_doc = doc.get("loss", {})
        if not isinstance(loss_doc, dict):
            raise ScenarioFormatError("field 'loss' must be a table")
        loss = LossModel(
            rssi_threshold_dbm=float(loss_doc.get("rssi_threshold_dbm", -95.0)),
            rssi_slope_db=float(loss_doc.get("rssi_slope_db", 3.0)),
            traffic_loss_prob=float(loss_doc.get("traffic_loss_prob", 0.0)),
            p_good_to_bad=float(loss_doc.get("p_good_to_bad", 0.0)),
            p_bad_to_good=float(loss_doc.get("p_bad_to_good", 1.0)),
            capture_prob_bad=float(loss_doc.get("capture_prob_bad", 0.0)),
            cpu_load_factor=float(loss_doc.get("cpu_load_factor", 0.0)),
            stress_gain=float(loss_doc.get("stress_gain", 0.0)),
        )
        aps_doc = doc.get("aps", [])
        if not isinstance(aps_doc, list) or not aps_doc:
            raise ScenarioFormatError("field 'aps' must be a non-empty array of tables")
        aps = []
        for i, ap_doc in enumerate(aps_doc):
            ident = ApIdentity(bssid=canonical_bssid(_need(ap_doc, "bssid", str, f"aps[{i}]")),
                               ssid=str(ap_doc.get("ssid", "")))
            traffic = ap_doc.get("traffic_loss_prob")
            aps.append(ApSpec(
                identity=ident,
                beacon_interval_tu=int(ap_doc.get("beacon_interval_tu", 100)),
                phase_offset_us=int(ap_doc.get("phase_offset_us", 0)),
                mean_rssi_dbm=float(_need(ap_doc, "mean_rssi_dbm", (int, float), f"aps[{i}]")),
                rssi_jitter_db=float(ap_doc.get("rssi_jitter_db", 2.0)),
                traffic_loss_prob=None if traffic is None else float(traffic),
            ))
        return SimScenario(
            aps=tuple(aps), mode=mode, loss=loss,
            report_interval_tu=int(doc.get("report_interval_tu", 1000)),
            duration_s=float(doc.get("duration_s", 200.0)),
            runs=int(doc.get("runs", 10)),
            seed=int(doc.get("seed", 0)),
            label=str(doc.get("label", label_default)),
            rng_algorithm=str(doc.get("rng", RNG_ALGORITHM)),
        )
    except ScenarioFormatError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioFormatError(f"invalid scenario: {exc}") from exc


def _need(doc: dict, key: str, types, where: str = "scenario"):
    if key not in doc:
        raise ScenarioFormatError(f"{where}: missing required field {key!r}")
    value = doc[key]
    if not isinstance(value, types):
        raise ScenarioFormatError(f"{where}: field {key!r} has wrong type {type(value).__name__}")
    return value


def load_scenario(path: str | Path) -> SimScenario:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioFormatError(f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioFormatError(f"{path}: TOML parse error: {exc}") from exc
    return scenario_from_dict(doc, label_default=path.stem)


# --- saving ---------------------------------------------------------------


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    raise TypeError(f"cannot serialize {type(value).__name__} to TOML")


def scenario_to_toml(scenario: SimScenario, comments: list[str] | None = None) -> str:
    lines = [f"# {c}" for c in comments or []]
    lines += [
        f"label = {_toml_scalar(scenario.label)}",
        f"mode = {_toml_scalar(scenario.mode.value)}",
        f"duration_s = {_toml_scalar(scenario.duration_s)}",
        f"runs = {_toml_scalar(scenario.runs)}",
        f"seed = {_toml_scalar(scenario.seed)}",
        f"report_interval_tu = {_toml_scalar(scenario.report_interval_tu)}",
        f"rng = {_toml_scalar(scenario.rng_algorithm)}",
        "",
        "[loss]",
    ]
    loss = scenario.loss
    for name in ("rssi_threshold_dbm", "rssi_slope_db", "traffic_loss_prob",
                 "p_good_to_bad", "p_bad_to_good", "capture_prob_bad",
                 "cpu_load_factor", "stress_gain"):
        lines.append(f"{name} = {_toml_scalar(getattr(loss, name))}")
    for ap in scenario.aps:
        lines += [
            "",
            "[[aps]]",
            f"bssid = {_toml_scalar(ap.identity.bssid)}",
            f"ssid = {_toml_scalar(ap.identity.ssid)}",
            f"beacon_interval_tu = {_toml_scalar(ap.beacon_interval_tu)}",
            f"phase_offset_us = {_toml_scalar(ap.phase_offset_us)}",
            f"mean_rssi_dbm = {_toml_scalar(ap.mean_rssi_dbm)}",
            f"rssi_jitter_db = {_toml_scalar(ap.rssi_jitter_db)}",
        ]
        if ap.traffic_loss_prob is not None:
            lines.append(f"traffic_loss_prob = {_toml_scalar(ap.traffic_loss_prob)}")
    return "\n".join(lines) + "\n"


def save_scenario(scenario: SimScenario, path: str | Path,
                  comments: list[str] | None = None) -> None:
    Path(path).write_text(scenario_to_toml(scenario, comments), encoding="utf-8")


# --- presets --------------------------------------------------------------


def preset_names() -> list[str]:
    return sorted(PRESETS)


def load_preset(name: str) -> list[SimScenario]:
    """Load the calibrated scenarios bundled under a preset name."""
    if name not in PRESETS:
        raise ScenarioFormatError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    out = []
    root = resources.files(DATA_PACKAGE)
    for fname in PRESETS[name]:
        doc = tomllib.loads((root / fname).read_text(encoding="utf-8"))
        out.append(scenario_from_dict(doc, label_default=Path(fname).stem))
    return out


# --- calibration targets files --------------------------------------------


def load_targets(path: str | Path, base_scenario: SimScenario | None = None) -> tuple[list[CalibrationTarget], dict]:
    """Load a calibration targets file.

    Each [[targets]] entry names a mode, a mean RSS level and the rate to
    reach; entries may instead point at a full scenario file via
    'scenario'.  Returns the targets plus the [calibration] settings
    table (runs, tolerance, seed).
    """
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioFormatError(f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioFormatError(f"{path}: TOML parse error: {exc}") from exc

    entries = doc.get("targets")
    if not isinstance(entries, list) or not entries:
        raise ScenarioFormatError(f"{path}: needs a non-empty [[targets]] array")
    settings = doc.get("calibration", {})
    targets = []
    for i, entry in enumerate(entries):
        where = f"targets[{i}]"
        label = str(entry.get("label", f"target{i}"))
        if "scenario" in entry:
            scenario = load_scenario(path.parent / str(entry["scenario"]))
        else:
            template = base_scenario or default_template()
            mode = CaptureMode.parse(_need(entry, "mode", str, where))
            rssi = float(_need(entry, "mean_rssi_dbm", (int, float), where))
            aps = tuple(
                ApSpec(identity=ap.identity, beacon_interval_tu=ap.beacon_interval_tu,
                       phase_offset_us=ap.phase_offset_us, mean_rssi_dbm=rssi,
                       rssi_jitter_db=ap.rssi_jitter_db, traffic_loss_prob=ap.traffic_loss_prob)
                for ap in template.aps
            )
            scenario = SimScenario(
                aps=aps, mode=mode, loss=template.loss,
                report_interval_tu=template.report_interval_tu,
                duration_s=template.duration_s, runs=template.runs,
                seed=template.seed, label=label,
            )
        miss = entry.get("target_miss_pct")
        targets.append(CalibrationTarget(
            label=label, scenario=scenario,
            target_rate_pps=float(_need(entry, "target_rate_pps", (int, float), where)),
            target_miss_pct=None if miss is None else float(miss),
            bssid=entry.get("bssid"),
            fit=str(entry.get("fit", "rssi_threshold")),
        ))
    return targets, settings


def default_template() -> SimScenario:
    """Single-AP 200 s x 10 template used when no base scenario is given."""
    return SimScenario(
        aps=(ApSpec(identity=ApIdentity(bssid="02:00:00:00:00:01", ssid="AP1"),
                    mean_rssi_dbm=-60.0),),
        mode=CaptureMode.MONITOR,
        loss=LossModel(rssi_threshold_dbm=-95.0, rssi_slope_db=3.0),
        duration_s=200.0, runs=10, seed=0, label="template",
    )


def bundled_targets_path() -> Path:
    """Materialized path of the bundled distance-test targets file."""
    return Path(str(resources.files(DATA_PACKAGE) / DISTANCE_TARGETS_RESOURCE))
