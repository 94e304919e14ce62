#!/usr/bin/env python3
"""Calibrate and regenerate the bundled scenario presets.

Writes src/beaconlab/data/*.toml.  Each file carries its bench targets
and the values the fitted scenario actually achieves as TOML comments,
so a reader can judge the fit without re-running anything.  Takes a few
minutes of simulation time in total.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

from beaconlab.calibrate import CalibrationTarget, calibrate
from beaconlab.core import ApIdentity, CaptureMode, theoretical_rate
from beaconlab.metrics import capture_probability, gap_report, miss_rate
from beaconlab.scenarios import save_scenario
from beaconlab.sim import ApSpec, LossModel, SimScenario, simulate

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "beaconlab" / "data"

FIT_TOLERANCE = 0.03
CAL_RUNS = 10
CAL_SEED = 1

failures: list[str] = []


def fit(scenario: SimScenario, rate: float, coord: str, bssid: str | None = None,
        tolerance: float = FIT_TOLERANCE, record: bool = True):
    """Fit one coordinate of one scenario to a target rate."""
    t = CalibrationTarget(label=scenario.label, scenario=scenario,
                          target_rate_pps=rate, bssid=bssid, fit=coord)
    res = calibrate([t], tolerance=tolerance, cal_runs=CAL_RUNS, cal_seed=CAL_SEED)
    entry = res.entries[0]
    if record and not entry.converged:
        failures.append(f"{scenario.label}: {coord} fit missed {rate} "
                        f"(achieved {entry.achieved_rate_pps:.3f})")
    return entry


def measured_rates(scenario: SimScenario) -> dict[str, float]:
    """Per-AP mean rate over the scenario's own runs and seed."""
    runset = simulate(scenario)
    out = {}
    for bssid in {a.identity.bssid for a in scenario.aps}:
        rates = [len(s.records_for(bssid)) / s.duration_s for s in runset.sessions]
        out[bssid] = float(np.mean(rates))
    return out


def theoretical_for(scenario: SimScenario, ap: ApSpec) -> float:
    return theoretical_rate(scenario.mode, ap.beacon_interval_tu,
                            scenario.report_interval_tu)


# --- traffic bench: four APs under different interference levels ----------

TRAFFIC_APS = [
    ("02:00:00:00:01:01", "Apt-AP1", -58.0),
    ("02:00:00:00:01:02", "Apt-AP2", -63.0),
    ("02:00:00:00:01:03", "Apt-AP3", -66.0),
    ("02:00:00:00:01:04", "Apt-AP4", -70.0),
]
TRAFFIC_TARGETS = {
    CaptureMode.NORMAL: [0.90, 0.91, 0.91, 0.91],
    CaptureMode.MONITOR: [4.76, 7.40, 7.42, 8.29],
}


def build_traffic() -> None:
    for mode, seed in ((CaptureMode.NORMAL, 11), (CaptureMode.MONITOR, 12)):
        targets = TRAFFIC_TARGETS[mode]
        label = f"traffic_{mode.value}"
        fitted_traffic = {}
        for (bssid, ssid, rssi), want in zip(TRAFFIC_APS, targets):
            # per-AP substreams make a solo fit identical to the 4-AP run
            solo = SimScenario(
                aps=(ApSpec(identity=ApIdentity(bssid=bssid, ssid=ssid),
                            mean_rssi_dbm=rssi),),
                mode=mode, loss=LossModel(), duration_s=200.0, runs=10,
                seed=seed, label=label)
            entry = fit(solo, want, "ap_traffic")
            fitted_traffic[bssid] = entry.fitted["ap_traffic"]
        merged = SimScenario(
            aps=tuple(ApSpec(identity=ApIdentity(bssid=b, ssid=s),
                             mean_rssi_dbm=r, traffic_loss_prob=fitted_traffic[b])
                      for b, s, r in TRAFFIC_APS),
            mode=mode, loss=LossModel(), duration_s=200.0, runs=10,
            seed=seed, label=label)
        rates = measured_rates(merged)
        comments = [f"{label}: four-AP interference bench, {mode.value} capture",
                    "per-AP traffic_loss_prob fitted to the bench rates"]
        for (bssid, ssid, _), want in zip(TRAFFIC_APS, targets):
            got = rates[bssid]
            th = theoretical_for(merged, merged.aps[0])
            comments.append(
                f"{ssid}: target {want:.2f} pps, achieved {got:.2f} pps "
                f"(miss {miss_rate(got, th):.2f}%)")
        save_scenario(merged, DATA_DIR / f"{label}.toml", comments)
        print(f"wrote {label}.toml")


# --- signal-strength bench: one AP at strong and weak levels --------------

DISTANCE_AP = ("02:00:00:00:02:01", "Hall-AP")
STRONG_RSSI, WEAK_RSSI = -60.0, -80.0


def distance_base(mode: CaptureMode, rssi: float, loss: LossModel,
                  seed: int, label: str) -> SimScenario:
    bssid, ssid = DISTANCE_AP
    return SimScenario(
        aps=(ApSpec(identity=ApIdentity(bssid=bssid, ssid=ssid),
                    mean_rssi_dbm=rssi),),
        mode=mode, loss=loss, duration_s=200.0, runs=10, seed=seed, label=label)


def window_stats(scenario: SimScenario) -> tuple[float, float, int]:
    """Mean 1 s / 2 s capture probability and longest empty-window run."""
    runset = simulate(scenario)
    bssid = scenario.aps[0].identity.bssid
    p1 = float(np.mean([capture_probability(s, bssid, 1.0) for s in runset.sessions]))
    p2 = float(np.mean([capture_probability(s, bssid, 2.0) for s in runset.sessions]))
    longest = max(gap_report(s, bssid).max_run for s in runset.sessions)
    return p1, p2, longest


def build_distance() -> None:
    bssid, _ = DISTANCE_AP

    for rssi, want, seed, label in ((STRONG_RSSI, 9.68, 21, "distance_strong_monitor"),
                                    (WEAK_RSSI, 9.22, 22, "distance_weak_monitor")):
        base = distance_base(CaptureMode.MONITOR, rssi, LossModel(), seed, label)
        entry = fit(base, want, "rssi_threshold")
        got = measured_rates(entry.scenario)[bssid]
        p1, p2, longest = window_stats(entry.scenario)
        save_scenario(entry.scenario, DATA_DIR / f"{label}.toml", [
            f"{label}: single AP at {rssi:.0f} dBm, monitor capture",
            f"target {want:.2f} pps, achieved {got:.2f} pps "
            f"(miss {miss_rate(got, 9.765625):.2f}%)",
            f"fitted rssi_threshold_dbm = {entry.fitted['rssi_threshold']:.2f}",
            f"capture probability: {p1:.3f} within 1 s, {p2:.3f} within 2 s"])
        print(f"wrote {label}.toml")

    # strong-signal normal capture: short bursty outages
    label = "distance_strong_normal"
    base = distance_base(CaptureMode.NORMAL, STRONG_RSSI,
                         LossModel(p_bad_to_good=0.10), 23, label)
    entry = fit(base, 0.91, "p_good_to_bad")
    got = measured_rates(entry.scenario)[bssid]
    save_scenario(entry.scenario, DATA_DIR / f"{label}.toml", [
        f"{label}: single AP at {STRONG_RSSI:.0f} dBm, normal capture",
        f"target 0.91 pps, achieved {got:.2f} pps "
        f"(miss {miss_rate(got, 0.9765625):.2f}%)",
        f"fitted p_good_to_bad = {entry.fitted['p_good_to_bad']:.5f}"])
    print(f"wrote {label}.toml")

    # weak-signal normal capture needs the rate and a 2 s window
    # probability near 0.85 at once, plus multi-window gaps.  Fixed slot
    # delivery ties those together: at 42% empty slots an iid or bursty
    # loss process cannot push p(2 s) past roughly 0.82, so the candidates
    # below trace that frontier and the score balances both targets.
    label = "distance_weak_normal"
    best = None
    candidates = [
        # (rssi_threshold, p_bad_to_good, capture_prob_bad)
        (-95.0, 0.085, 0.0),
        (-89.0, 0.095, 0.0),
        (-87.0, 0.095, 0.0),
        (-95.0, 0.050, 0.035),
        (-95.0, 0.055, 0.030),
        (-95.0, 0.060, 0.025),
        (-95.0, 0.060, 0.030),
        (-95.0, 0.065, 0.025),
    ]
    for threshold, p_bg, cpb in candidates:
        loss = LossModel(rssi_threshold_dbm=threshold, p_bad_to_good=p_bg,
                         capture_prob_bad=cpb)
        base = distance_base(CaptureMode.NORMAL, WEAK_RSSI, loss, 24, label)
        entry = fit(base, 0.57, "p_good_to_bad", record=False)
        p1, p2, longest = window_stats(entry.scenario)
        score = abs(p2 - 0.853) + 0.5 * abs(entry.achieved_rate_pps - 0.57) / 0.57
        note = "" if entry.converged else " (rate off target)"
        if entry.fitted["p_good_to_bad"] >= 0.999:
            note += " (entry prob saturated)"
        print(f"  thr={threshold:.0f} p_bg={p_bg:.3f} cpb={cpb:.3f}: "
              f"rate {entry.achieved_rate_pps:.3f} p1={p1:.3f} "
              f"p2={p2:.3f} longest gap {longest}{note}")
        if entry.converged and longest >= 3 and (best is None or score < best[0]):
            best = (score, entry, p1, p2, longest)
    if best is None:
        failures.append(f"{label}: no setting hit the rate with a 3-window gap")
        return
    _, entry, p1, p2, longest = best
    loss = entry.scenario.loss
    got = measured_rates(entry.scenario)[bssid]
    fit_note = f"fitted p_good_to_bad = {entry.fitted['p_good_to_bad']:.5f}"
    if entry.fitted["p_good_to_bad"] >= 0.999:
        fit_note += " (saturated: the bench rate sits at this setting's floor)"
    save_scenario(entry.scenario, DATA_DIR / f"{label}.toml", [
        f"{label}: single AP at {WEAK_RSSI:.0f} dBm, normal capture",
        f"target 0.57 pps, achieved {got:.2f} pps "
        f"(miss {miss_rate(got, 0.9765625):.2f}%)",
        fit_note,
        f"chain recovery {loss.p_bad_to_good:.3f}, bad-state capture "
        f"{loss.capture_prob_bad:.3f}, threshold {loss.rssi_threshold_dbm:.0f} dBm",
        f"capture probability: {p1:.3f} within 1 s, {p2:.3f} within 2 s",
        f"longest empty-window run across runs: {longest}"])
    print(f"wrote {label}.toml")


# --- host-load bench: chain entry fitted per chipset, mode and load -------

CPU_TARGETS = {
    # (chipset, mode, load) -> rate
    ("atheros", CaptureMode.NORMAL, 0.5): 0.96,
    ("atheros", CaptureMode.NORMAL, 0.8): 0.86,
    ("atheros", CaptureMode.MONITOR, 0.5): 8.76,
    ("atheros", CaptureMode.MONITOR, 0.8): 7.80,
    ("ralink", CaptureMode.NORMAL, 0.5): 0.76,
    ("ralink", CaptureMode.NORMAL, 0.8): 0.69,
    ("ralink", CaptureMode.MONITOR, 0.5): 8.19,
    ("ralink", CaptureMode.MONITOR, 0.8): 5.05,
}
STRESS_GAIN = 2.0
CPU_RECOVERY = {CaptureMode.NORMAL: 0.10, CaptureMode.MONITOR: 0.20}


def build_cpu() -> None:
    seed = 31
    for (chip, mode, load), want in CPU_TARGETS.items():
        label = f"cpu{int(load * 100)}_{chip}_{mode.value}"
        loss = LossModel(p_bad_to_good=CPU_RECOVERY[mode],
                         cpu_load_factor=load, stress_gain=STRESS_GAIN)
        base = distance_base(mode, WEAK_RSSI, loss, seed, label)
        seed += 1
        entry = fit(base, want, "p_good_to_bad")
        got = measured_rates(entry.scenario)[DISTANCE_AP[0]]
        th = theoretical_for(entry.scenario, entry.scenario.aps[0])
        save_scenario(entry.scenario, DATA_DIR / f"{label}.toml", [
            f"{label}: {chip} profile at {int(load * 100)}% host load, "
            f"{mode.value} capture, weak signal",
            f"target {want:.2f} pps, achieved {got:.2f} pps "
            f"(miss {miss_rate(got, th):.2f}%)",
            f"fitted p_good_to_bad = {entry.fitted['p_good_to_bad']:.5f} "
            f"(stress gain {STRESS_GAIN}, effective "
            f"{entry.scenario.loss.effective_p_good_to_bad():.5f})"])
        print(f"wrote {label}.toml")


# --- calibration targets file for the signal-strength bench ---------------

TARGETS_TOML = """\
# signal-strength bench calibration targets: one AP measured at a strong
# and a weak level, each in both capture modes
[calibration]
runs = 6
tolerance = 0.05
seed = 1

[[targets]]
label = "strong-normal"
mode = "normal"
mean_rssi_dbm = -60
target_rate_pps = 0.91
target_miss_pct = 7.04

[[targets]]
label = "strong-monitor"
mode = "monitor"
mean_rssi_dbm = -60
target_rate_pps = 9.68
target_miss_pct = 0.86

[[targets]]
label = "weak-normal"
mode = "normal"
mean_rssi_dbm = -80
target_rate_pps = 0.57
target_miss_pct = 41.67

[[targets]]
label = "weak-monitor"
mode = "monitor"
mean_rssi_dbm = -80
target_rate_pps = 9.22
target_miss_pct = 5.63
"""


def main() -> int:
    t0 = time.time()
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    build_traffic()
    build_distance()
    build_cpu()
    (DATA_DIR / "distance_targets.toml").write_text(TARGETS_TOML, encoding="utf-8")
    print("wrote distance_targets.toml")
    print(f"done in {time.time() - t0:.1f} s")
    if failures:
        print("FAILED fits:")
        for line in failures:
            print(f"  {line}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
