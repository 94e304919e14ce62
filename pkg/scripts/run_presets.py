#!/usr/bin/env python3
"""Simulate bundled presets and print their rate/miss tables.

Usage: run_presets.py [preset ...]   (default: all presets)
"""

from __future__ import annotations

import sys

import numpy as np

from beaconlab.core import CaptureMode, theoretical_rate
from beaconlab.metrics import capture_probability, gap_report, miss_rate
from beaconlab.scenarios import load_preset, preset_names
from beaconlab.sim import simulate


def show(label: str, scenario) -> None:
    runset = simulate(scenario)
    th_normal = theoretical_rate(CaptureMode.NORMAL,
                                 report_interval_tu=scenario.report_interval_tu)
    print(f"\n{label} ({scenario.mode.value}, {scenario.duration_s:g} s x "
          f"{scenario.runs} runs)")
    print(f"  {'AP':<10} {'rate/s':>8} {'miss %':>8} {'p(1s)':>7} {'p(2s)':>7} "
          f"{'max gap':>8}")
    for ap in scenario.aps:
        bssid = ap.identity.bssid
        rates = [len(s.records_for(bssid)) / s.duration_s for s in runset.sessions]
        rate = float(np.mean(rates))
        th = (theoretical_rate(CaptureMode.MONITOR, ap.beacon_interval_tu)
              if scenario.mode is CaptureMode.MONITOR else th_normal)
        p1 = float(np.mean([capture_probability(s, bssid, 1.0)
                            for s in runset.sessions]))
        p2 = float(np.mean([capture_probability(s, bssid, 2.0)
                            for s in runset.sessions]))
        longest = max(gap_report(s, bssid).max_run for s in runset.sessions)
        name = ap.identity.ssid or bssid
        print(f"  {name:<10} {rate:>8.2f} {miss_rate(rate, th):>8.2f} "
              f"{p1:>7.3f} {p2:>7.3f} {longest:>8d}")


def main(argv: list[str]) -> int:
    wanted = argv or preset_names()
    for name in wanted:
        if name not in preset_names():
            print(f"unknown preset {name!r}; available: {', '.join(preset_names())}",
                  file=sys.stderr)
            return 1
        for scenario in load_preset(name):
            show(scenario.label, scenario)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
