"""Beacon capture analysis toolkit.

Decodes radiotap-wrapped 802.11 beacon captures into per-AP RSS
streams, computes rate/miss/window/gap metrics, and simulates both
capture modes with a calibratable loss model.
"""

from .calibrate import (CalibrationEntry, CalibrationResult,
                        CalibrationTarget, InfeasibleTarget, calibrate)
from .capture_io import (CaptureFileError, UnreadableFile,
                         UnsupportedLinkType, read_capture_file, read_pcap,
                         write_capture_file, write_pcap)
from .core import (ApIdentity, BeaconLabError, BeaconRecord, CaptureMode,
                   CaptureSession, NonPositiveInterval, RunSet, SessionMeta,
                   TU_US, format_rate, theoretical_rate, tu_to_ms)
from .frames import (BeaconFrame, CodecError, RadiotapInfo, decode_beacon,
                     decode_frame, decode_radiotap, encode_beacon,
                     encode_frame, encode_radiotap)
from .metrics import (ApReport, DelayHistogram, GapReport, GapRun,
                      ScenarioReport, aggregate_runs, arrival_delay_histogram,
                      capture_probability, delay_fraction_within, gap_report,
                      inter_arrival_deltas, measurement_rate, miss_rate,
                      occupied_windows)
from .radiomap import (RadioMapEntry, ReferencePoint, RssiAccumulator,
                       UnreachableRate, build_radio_map, read_radio_map,
                       survey_speedup, survey_time_estimate, write_radio_map)
from .reports import (report_from_json, report_to_csv, report_to_json,
                      report_to_text, write_report_files)
from .scenarios import (ScenarioFormatError, load_preset, load_scenario,
                        load_targets, preset_names, save_scenario,
                        scenario_to_toml)
from .sim import ApSpec, LossModel, SimScenario, beacon_schedule, simulate

__version__ = "0.1.0"

__all__ = [
    "ApIdentity", "ApReport", "ApSpec", "BeaconFrame", "BeaconLabError",
    "BeaconRecord", "CalibrationEntry", "CalibrationResult",
    "CalibrationTarget", "CaptureFileError", "CaptureMode", "CaptureSession",
    "CodecError", "DelayHistogram", "GapReport", "GapRun", "InfeasibleTarget",
    "LossModel", "NonPositiveInterval", "RadioMapEntry", "RadiotapInfo",
    "ReferencePoint", "RssiAccumulator", "RunSet", "ScenarioFormatError",
    "ScenarioReport", "SessionMeta", "SimScenario", "TU_US",
    "UnreachableRate", "UnreadableFile", "UnsupportedLinkType",
    "aggregate_runs", "arrival_delay_histogram", "beacon_schedule",
    "build_radio_map", "calibrate", "capture_probability", "decode_beacon",
    "decode_frame", "decode_radiotap", "delay_fraction_within",
    "encode_beacon", "encode_frame", "encode_radiotap", "format_rate",
    "gap_report", "inter_arrival_deltas", "load_preset", "load_scenario",
    "load_targets", "measurement_rate", "miss_rate", "occupied_windows",
    "preset_names",
    "read_capture_file", "read_pcap", "read_radio_map", "report_from_json",
    "report_to_csv", "report_to_json", "report_to_text", "save_scenario",
    "scenario_to_toml", "simulate", "survey_speedup", "survey_time_estimate",
    "theoretical_rate", "tu_to_ms", "write_capture_file", "write_pcap",
    "write_radio_map", "write_report_files",
]
