"""Stochastic capture-mode simulator.

Each AP emits beacons on a fixed schedule.  Whether an emission is
captured combines three independent effects: a logistic signal-strength
term, a constant traffic-collision term, and a two-state Good/Bad
receiver chain that models transient stalls (its entry rate scales with
CPU load).  Monitor mode delivers every captured beacon; normal mode
delivers at most the first captured beacon per scan-report slot, which
defers a missed slot's measurement to the next slot.

Randomness comes from a counter-based Philox generator with one
substream per (run, AP) keyed by BSSID, so adding or removing an AP
never perturbs the draws of another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .core import (
    ApIdentity,
    BeaconRecord,
    CaptureMode,
    CaptureSession,
    RunSet,
    SessionMeta,
    TU_US,
    sort_records,
)
from .frames import RSSI_MAX_DBM, RSSI_MIN_DBM, SEQ_MODULUS

RNG_ALGORITHM = "philox"


def _check(cond: bool, name: str, value) -> None:
    if not cond:
        raise ValueError(f"invalid scenario: field {name!r} has unusable value {value!r}")


@dataclass(frozen=True)
class ApSpec:
    """One simulated AP: identity, schedule and signal level."""

    identity: ApIdentity
    beacon_interval_tu: int = 100
    phase_offset_us: int = 0
    mean_rssi_dbm: float = -60.0
    rssi_jitter_db: float = 2.0
    traffic_loss_prob: float | None = None   # overrides the scenario loss model

    def __post_init__(self):
        _check(self.beacon_interval_tu >= 1, "beacon_interval_tu", self.beacon_interval_tu)
        interval_us = self.beacon_interval_tu * TU_US
        _check(0 <= self.phase_offset_us < interval_us, "phase_offset_us", self.phase_offset_us)
        _check(RSSI_MIN_DBM <= self.mean_rssi_dbm <= RSSI_MAX_DBM, "mean_rssi_dbm", self.mean_rssi_dbm)
        _check(self.rssi_jitter_db >= 0, "rssi_jitter_db", self.rssi_jitter_db)
        if self.traffic_loss_prob is not None:
            _check(0 <= self.traffic_loss_prob <= 1, "traffic_loss_prob", self.traffic_loss_prob)


@dataclass(frozen=True)
class LossModel:
    """Per-beacon capture probability model.

    capture prob = sigmoid((rssi - threshold)/slope) * (1 - traffic)
                   * (1 in Good state, capture_prob_bad in Bad state)

    The Good->Bad entry probability is scaled by (1 + cpu_load_factor *
    stress_gain); CPU load touches nothing else.
    """

    rssi_threshold_dbm: float = -95.0
    rssi_slope_db: float = 3.0
    traffic_loss_prob: float = 0.0
    p_good_to_bad: float = 0.0
    p_bad_to_good: float = 1.0
    capture_prob_bad: float = 0.0
    cpu_load_factor: float = 0.0
    stress_gain: float = 0.0

    def __post_init__(self):
        _check(self.rssi_slope_db > 0, "loss.rssi_slope_db", self.rssi_slope_db)
        _check(0 <= self.traffic_loss_prob <= 1, "loss.traffic_loss_prob", self.traffic_loss_prob)
        _check(0 <= self.p_good_to_bad <= 1, "loss.p_good_to_bad", self.p_good_to_bad)
        _check(0 < self.p_bad_to_good <= 1, "loss.p_bad_to_good", self.p_bad_to_good)
        _check(0 <= self.capture_prob_bad <= 1, "loss.capture_prob_bad", self.capture_prob_bad)
        _check(0 <= self.cpu_load_factor <= 1, "loss.cpu_load_factor", self.cpu_load_factor)
        _check(self.stress_gain >= 0, "loss.stress_gain", self.stress_gain)

    def effective_p_good_to_bad(self) -> float:
        return min(1.0, self.p_good_to_bad * (1.0 + self.cpu_load_factor * self.stress_gain))

    def signal_capture_prob(self, rssi_dbm):
        z = np.clip((np.asarray(rssi_dbm, dtype=np.float64) - self.rssi_threshold_dbm)
                    / self.rssi_slope_db, -60.0, 60.0)
        return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class SimScenario:
    aps: tuple[ApSpec, ...]
    mode: CaptureMode
    loss: LossModel = field(default_factory=LossModel)
    report_interval_tu: int = 1000
    duration_s: float = 200.0
    runs: int = 10
    seed: int = 0
    label: str = "scenario"
    rng_algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if not isinstance(self.aps, tuple):
            object.__setattr__(self, "aps", tuple(self.aps))
        _check(len(self.aps) >= 1, "aps", "empty list")
        bssids = [ap.identity.bssid for ap in self.aps]
        _check(len(set(bssids)) == len(bssids), "aps", "duplicate bssid")
        _check(self.report_interval_tu >= 1, "report_interval_tu", self.report_interval_tu)
        _check(self.duration_s > 0, "duration_s", self.duration_s)
        _check(self.runs >= 1, "runs", self.runs)
        _check(self.rng_algorithm == RNG_ALGORITHM, "rng_algorithm", self.rng_algorithm)

    def with_seed(self, seed: int) -> "SimScenario":
        return replace(self, seed=seed)


class ChainState(Enum):
    GOOD = "good"
    BAD = "bad"


def beacon_schedule(ap: ApSpec, duration_s: float) -> np.ndarray:
    """Emission times t_k = phase + k * interval, for all t_k < duration (µs)."""
    if duration_s <= 0:
        raise ValueError(f"duration must be positive, got {duration_s}")
    duration_us = int(round(duration_s * 1_000_000))
    interval_us = ap.beacon_interval_tu * TU_US
    return np.arange(ap.phase_offset_us, duration_us, interval_us, dtype=np.int64)


def capture_decision(
    rssi_dbm: float,
    state: ChainState,
    loss: LossModel,
    rng: np.random.Generator,
    traffic_loss_prob: float | None = None,
) -> tuple[bool, ChainState]:
    """Decide one beacon's fate and advance the receiver chain.

    The current state gates the capture; the chain then steps by its
    transition probabilities.  Scalar reference for the vectorized path
    used inside simulate().
    """
    traffic = loss.traffic_loss_prob if traffic_loss_prob is None else traffic_loss_prob
    p_state = 1.0 if state is ChainState.GOOD else loss.capture_prob_bad
    p = float(loss.signal_capture_prob(rssi_dbm)) * (1.0 - traffic) * p_state
    captured = rng.random() < p
    if state is ChainState.GOOD:
        next_state = ChainState.BAD if rng.random() < loss.effective_p_good_to_bad() else ChainState.GOOD
    else:
        next_state = ChainState.GOOD if rng.random() < loss.p_bad_to_good else ChainState.BAD
    return captured, next_state


def apply_mode_delivery(captured_times_us: np.ndarray, mode: CaptureMode,
                        report_interval_tu: int = 1000) -> np.ndarray:
    """Indices of captured events actually delivered to the client.

    Monitor mode delivers everything.  Normal mode partitions time into
    report slots of report_interval_tu TUs and delivers only the first
    captured beacon of each slot; a slot whose beacons were all lost
    yields nothing until the next slot's first capture.
    """
    times = np.asarray(captured_times_us, dtype=np.int64)
    if mode is CaptureMode.MONITOR or len(times) == 0:
        return np.arange(len(times))
    if report_interval_tu < 1:
        raise ValueError(f"report interval must be >= 1 TU, got {report_interval_tu}")
    slot_us = report_interval_tu * TU_US
    slots = times // slot_us
    _, first_idx = np.unique(slots, return_index=True)
    return first_idx


def _chain_bad_mask(loss: LossModel, u: np.ndarray) -> np.ndarray:
    """Sequential Good/Bad scan over pre-drawn uniforms; True where Bad."""
    p_gb = loss.effective_p_good_to_bad()
    n = len(u)
    bad = np.zeros(n, dtype=bool)
    if p_gb == 0.0:
        return bad
    p_bg = loss.p_bad_to_good
    state_bad = False          # chain starts Good
    for i in range(n):
        bad[i] = state_bad
        if state_bad:
            if u[i] < p_bg:
                state_bad = False
        else:
            if u[i] < p_gb:
                state_bad = True
    return bad


def _substream(seed: int, run_index: int, bssid: str) -> np.random.Generator:
    """Philox substream keyed by (seed, run, BSSID)."""
    key = int(bssid.replace(":", ""), 16)
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(run_index, key >> 32, key & 0xFFFFFFFF))
    return np.random.Generator(np.random.Philox(seq))


def simulate(scenario: SimScenario) -> RunSet:
    """Run the scenario and return per-run capture sessions.

    Draw order per (run, AP) substream: rssi normals, chain uniforms,
    capture uniforms, each a single block, so realizations depend only
    on (seed, run index, BSSID) and the AP's own parameters.
    """
    sessions = []
    for run_idx in range(scenario.runs):
        records: list[BeaconRecord] = []
        for ap in scenario.aps:
            rng = _substream(scenario.seed, run_idx, ap.identity.bssid)
            times = beacon_schedule(ap, scenario.duration_s)
            n = len(times)
            if n == 0:
                continue
            rssi = ap.mean_rssi_dbm + ap.rssi_jitter_db * rng.standard_normal(n)
            chain_u = rng.random(n)
            capture_u = rng.random(n)

            traffic = (scenario.loss.traffic_loss_prob if ap.traffic_loss_prob is None
                       else ap.traffic_loss_prob)
            bad = _chain_bad_mask(scenario.loss, chain_u)
            p = scenario.loss.signal_capture_prob(rssi) * (1.0 - traffic)
            p = p * np.where(bad, scenario.loss.capture_prob_bad, 1.0)
            captured = np.nonzero(capture_u < p)[0]

            delivered = captured[apply_mode_delivery(times[captured], scenario.mode,
                                                     scenario.report_interval_tu)]
            rssi_int = np.clip(np.rint(rssi[delivered]), RSSI_MIN_DBM, RSSI_MAX_DBM).astype(int)
            records.extend(
                BeaconRecord(
                    t=int(times[k]), rssi=int(r), ap=ap.identity,
                    beacon_interval_tu=ap.beacon_interval_tu,
                    sequence_number=int(k % SEQ_MODULUS),
                )
                for k, r in zip(delivered, rssi_int)
            )
        sessions.append(CaptureSession(
            mode=scenario.mode, duration_s=scenario.duration_s,
            records=sort_records(records),
            meta=SessionMeta(source=f"sim:{scenario.label}", run_index=run_idx),
        ))
    return RunSet(label=scenario.label, sessions=sessions)


def max_deliveries(scenario: SimScenario, ap: ApSpec) -> int:
    """Hard cap on per-run records for one AP (schedule and slot structure)."""
    duration_us = int(round(scenario.duration_s * 1_000_000))
    emissions = len(beacon_schedule(ap, scenario.duration_s))
    if scenario.mode is CaptureMode.MONITOR:
        return emissions
    slot_us = scenario.report_interval_tu * TU_US
    return min(emissions, math.ceil(duration_us / slot_us))
