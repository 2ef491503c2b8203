"""Combined house model.

All appliances hang in parallel on one node that is fed by the mains EMF
through the source resistance. Every report interval the node voltage is
found by a fixed-point pass over the branch currents, the branches are summed
sample by sample and the panel, the source terminals and every branch are
metered with the whole-cycle (ASSP) method.

Example:
>>> import src.panel as pn
>>> import src.scenario as sc
>>> dataset = pn.simulate(sc.load_scenario("house_evening"), pn.SourceParams(seed=42))
>>> pn.panel_power_identity(dataset).max_residual
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from . import appliances as ap
from . import metering as mt
from .errors import ConfigurationError, SimulationError
from .scenario import (
    GroundTruthEvent,
    Scenario,
    SourceParams,
    actions_in_interval,
    autonomous_event,
    emit_event,
    scenario_hash,
)

logger = logging.getLogger(__name__)

AGGREGATE = "aggregate"
SOURCE = "source"
MAX_ITERATIONS = 10
VOLTAGE_TOLERANCE = 1e-6

__all__ = [
    "Dataset",
    "PanelAggregate",
    "PowerIdentityReport",
    "SourceParams",
    "check_rates",
    "panel_aggregate",
    "panel_power_identity",
    "predicted_vrms_std",
    "simulate",
]


@dataclass(frozen=True)
class PanelAggregate:
    """Power balance of one tick: p_o = Σ p_i + E."""

    p_o: float
    p_i: Dict[str, float]
    loss: float

    @property
    def residual(self) -> float:
        return abs(self.p_o - sum(self.p_i.values()) - self.loss)


@dataclass(frozen=True)
class PowerIdentityReport:
    max_residual: float
    tick: int
    time: float
    p_o: float

    @property
    def relative(self) -> float:
        return self.max_residual / abs(self.p_o) if self.p_o else 0.0


@dataclass(frozen=True)
class Dataset:
    """Result of one simulation run.

    aggregate: panel records (node voltage, total current).
    per_appliance: branch records keyed by appliance id, same timestamps.
    source: records at the EMF terminals; its p_w is p_o.
    loss_w: Joule loss in the source resistance per tick.
    waveforms: sample arrays when the run kept them.
    """

    aggregate: pd.DataFrame
    per_appliance: Dict[str, pd.DataFrame]
    events: List[GroundTruthEvent]
    meta: Dict[str, Any]
    source: Optional[pd.DataFrame] = None
    loss_w: Optional[np.ndarray] = None
    waveforms: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.aggregate["time_s"].to_numpy()

    def channel(self, name: str) -> pd.DataFrame:
        if name == AGGREGATE:
            return self.aggregate
        if name == SOURCE and self.source is not None:
            return self.source
        try:
            return self.per_appliance[name]
        except KeyError:
            raise ConfigurationError(f"dataset has no channel '{name}'")

    def records(self, name: str = AGGREGATE) -> List[mt.ElectricalRecord]:
        frame = self.channel(name)
        return [mt.ElectricalRecord(*row) for row in frame[list(mt.RECORD_COLUMNS)].itertuples(index=False)]


def check_rates(wave_rate: int, report_rate: float, freq: float) -> int:
    """Samples per report interval; rejects rates the metering cannot use."""
    if wave_rate <= 0 or report_rate <= 0:
        raise ConfigurationError("wave and report rates must be positive")
    per_tick = wave_rate / report_rate
    if abs(per_tick - round(per_tick)) > 1e-9:
        raise ConfigurationError(
            f"wave rate {wave_rate} Hz is not a multiple of the report rate {report_rate} Hz"
        )
    if wave_rate < mt.MIN_SAMPLES_PER_CYCLE * freq:
        raise ConfigurationError(
            f"wave rate {wave_rate} Hz gives fewer than {mt.MIN_SAMPLES_PER_CYCLE} "
            f"samples per {freq} Hz cycle"
        )
    return int(round(per_tick))


def predicted_vrms_std(source: SourceParams, cycles: int = mt.ASSP_CYCLES) -> float:
    """Per-tick v_rms spread expected from per-cycle amplitude noise.

    Each report averages `cycles` independent cycle amplitudes.
    """
    return source.noise_std / math.sqrt(cycles)


class _Emf:
    """Mains EMF with a gaussian RMS amplitude per cycle, drawn in order.

    Amplitudes live in a buffer that doubles when full, so a lookup costs the
    same at any point of the run.
    """

    def __init__(self, source: SourceParams, wave_rate: int):
        self.source = source
        self.wave_rate = wave_rate
        self.rng = np.random.default_rng(source.seed)
        self._buffer = np.empty(64)
        self.drawn = 0

    @property
    def amplitudes(self) -> np.ndarray:
        """Cycle amplitudes drawn so far, cycle 0 first."""
        return self._buffer[: self.drawn]

    def _draw_until(self, needed: int):
        if needed <= self.drawn:
            return
        if needed > self._buffer.size:
            grown = np.empty(max(needed, 2 * self._buffer.size))
            grown[: self.drawn] = self._buffer[: self.drawn]
            self._buffer = grown
        draws = self.rng.normal(0.0, self.source.noise_std, needed - self.drawn)
        self._buffer[self.drawn : needed] = self.source.v_nominal + draws
        self.drawn = needed

    def _amplitude(self, cycles: np.ndarray) -> np.ndarray:
        amplitude = np.full(cycles.shape, self.source.v_nominal)
        current = cycles >= 0
        if self.source.noise_std == 0 or not current.any():
            return amplitude
        self._draw_until(int(cycles.max()) + 1)
        amplitude[current] = self._buffer[cycles[current]]
        return amplitude

    def interval(self, start_sample: int, n: int) -> mt.Waveform:
        t = (start_sample + np.arange(n)) / self.wave_rate
        cycles = np.floor(t * self.source.freq + 1e-9).astype(int)
        e = math.sqrt(2.0) * self._amplitude(cycles) * np.sin(2.0 * math.pi * self.source.freq * t)
        return mt.Waveform(self.wave_rate, e, start_sample / self.wave_rate)


def _solve_interval(
    scenario: Scenario,
    states: Dict[str, ap.ApplianceState],
    e: mt.Waveform,
    source: SourceParams,
    gain: float,
) -> Tuple[mt.Waveform, np.ndarray, Dict[str, ap.ApplianceState], int]:
    """Node voltage, branch currents (k, n) and advanced states for one interval."""
    r_src = source.source_resistance
    u = e if r_src == 0 else mt.Waveform(e.sample_rate, gain * e.samples, e.start_time)
    n_branches = len(scenario.appliances)

    for iteration in range(1, MAX_ITERATIONS + 1):
        currents = np.zeros((n_branches, len(e)))
        new_states = {}
        for k, spec in enumerate(scenario.appliances):
            currents[k], new_states[spec.id] = ap.branch_current(
                spec, states[spec.id], u, source.freq
            )
        if r_src == 0:
            return u, currents, new_states, iteration

        node = e.samples - r_src * currents.sum(axis=0)
        change = float(np.max(np.abs(node - u.samples)))
        u = mt.Waveform(e.sample_rate, node, e.start_time)
        if change < VOLTAGE_TOLERANCE:
            return u, currents, new_states, iteration

    raise SimulationError(
        f"node voltage did not converge within {MAX_ITERATIONS} iterations in the interval "
        f"starting at {e.start_time:.3f} s (last change {change:.3g} V)"
    )


def _meter_tick(
    u_buf: np.ndarray,
    e_buf: np.ndarray,
    i_buf: np.ndarray,
    wave_rate: int,
    t: float,
    stiff: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Rows for aggregate + branches, and the source row, over the last whole cycles.

    A stiff source (no source resistance) has the node voltage at its
    terminals, so the source row is the aggregate row.
    """
    start, stop, freq = mt.assp_window(u_buf, wave_rate)
    total = i_buf.sum(axis=0, keepdims=True)[:, start:stop]
    rows = mt.meter_channels(
        u_buf[start:stop], np.vstack((total, i_buf[:, start:stop])), wave_rate, t, freq
    )
    if stiff:
        return rows, rows[0].copy()
    source_row = mt.meter_channels(e_buf[start:stop], total, wave_rate, t, freq)[0]
    return rows, source_row


def simulate(
    scenario: Scenario,
    source: Optional[SourceParams] = None,
    report_rate: float = mt.DEFAULT_REPORT_RATE,
    wave_rate: int = mt.DEFAULT_WAVE_RATE,
    keep_waveforms: bool = False,
) -> Dataset:
    """Runs the combined model over the whole scenario.

    Parameters:
    ----------
    scenario: Scenario
        Appliances and scripted actions.
    source: SourceParams, optional
        Mains settings. Defaults to the scenario's [source] table, then to
        SourceParams().
    report_rate: float
        Records per second.
    wave_rate: int
        Waveform samples per second.
    keep_waveforms: bool
        Keep EMF, node voltage, aggregate and branch current samples.

    Actions scheduled inside a report interval [t0, t1) take effect at t1,
    after the interval has been stepped, not at the next mains cycle boundary.
    The electrical change can therefore lag the scheduled time by up to one
    report interval (2.5 cycles at 20 Hz and 50 Hz). Events carry the
    scheduled time.
    """
    if source is None:
        source = scenario.source or SourceParams()
    per_tick = check_rates(wave_rate, report_rate, source.freq)
    n_ticks = int(math.ceil(scenario.duration * report_rate - 1e-9))
    lookback = int(math.ceil(wave_rate / source.freq * (mt.ASSP_CYCLES + 2)))
    ids = scenario.appliance_ids
    specs = {spec.id: spec for spec in scenario.appliances}
    r_src = source.source_resistance

    logger.info(
        f"simulating '{scenario.name or 'scenario'}': {len(ids)} appliances, {n_ticks} ticks "
        f"at {report_rate:g} Hz, seed {source.seed}"
    )

    emf = _Emf(source, wave_rate)
    states = {spec.id: ap.initial_state(spec) for spec in scenario.appliances}

    # pre-roll: the initial steady state before t = 0 fills the metering lookback
    pre_e = emf.interval(-lookback, lookback)
    pre_u, pre_i, _, _ = _solve_interval(scenario, states, pre_e, source, 1.0)
    u_hist, e_hist, i_hist = pre_u.samples, pre_e.samples, pre_i

    rows = np.empty((n_ticks, len(ids) + 1, len(mt.RECORD_COLUMNS)))
    source_rows = np.empty((n_ticks, len(mt.RECORD_COLUMNS)))
    events: List[GroundTruthEvent] = []
    kept: Dict[str, List[np.ndarray]] = {}
    gain = 1.0

    for tick in range(n_ticks):
        start_sample = tick * per_tick
        t0 = start_sample / wave_rate
        t1 = (start_sample + per_tick) / wave_rate
        e = emf.interval(start_sample, per_tick)
        u, currents, new_states, iterations = _solve_interval(scenario, states, e, source, gain)
        if iterations > 1:
            logger.debug(f"interval at {t0:.3f} s converged after {iterations} iterations")
        if r_src > 0:
            gain = mt.rms(u) / mt.rms(e)

        u_hist = np.concatenate((u_hist, u.samples))[-lookback:]
        e_hist = np.concatenate((e_hist, e.samples))[-lookback:]
        i_hist = np.concatenate((i_hist, currents), axis=1)[:, -lookback:]
        rows[tick], source_rows[tick] = _meter_tick(
            u_hist, e_hist, i_hist, wave_rate, t1, stiff=r_src == 0
        )

        if keep_waveforms:
            for name, samples in (("emf", e.samples), ("node", u.samples), (AGGREGATE, currents.sum(axis=0))):
                kept.setdefault(name, []).append(samples)
            for k, appliance_id in enumerate(ids):
                kept.setdefault(appliance_id, []).append(currents[k])

        interval_events = []
        for appliance_id, state in new_states.items():
            if state.pending_auto_off is not None:
                interval_events.append(
                    autonomous_event(appliance_id, state.pending_auto_off, states[appliance_id].mode)
                )
                new_states[appliance_id] = replace(state, pending_auto_off=None)
        states = new_states

        for action in actions_in_interval(scenario, t0, min(t1, scenario.duration)):
            spec = specs[action.appliance_id]
            prev = states[spec.id]
            states[spec.id] = ap.apply_action(spec, prev, action.action, action.value)
            interval_events.append(emit_event(prev, action, spec, states[spec.id]))
        events.extend(sorted(interval_events, key=lambda ev: ev.time))

    # actions at the very end are labeled only
    for action in scenario.schedule:
        if action.time >= scenario.duration:
            spec = specs[action.appliance_id]
            prev = states[spec.id]
            states[spec.id] = ap.apply_action(spec, prev, action.action, action.value)
            events.append(emit_event(prev, action, spec, states[spec.id]))

    columns = list(mt.RECORD_COLUMNS)
    aggregate = pd.DataFrame(rows[:, 0, :], columns=columns)
    per_appliance = {
        appliance_id: pd.DataFrame(rows[:, k + 1, :], columns=columns)
        for k, appliance_id in enumerate(ids)
    }
    source_frame = pd.DataFrame(source_rows, columns=columns)
    loss = np.square(aggregate["i_rms"].to_numpy()) * r_src

    meta = {
        "scenario": scenario.name,
        "scenario_hash": scenario_hash(scenario),
        "duration_s": scenario.duration,
        "seed": source.seed,
        "report_rate_hz": report_rate,
        "wave_rate_hz": wave_rate,
        "ticks": n_ticks,
        "appliances": list(ids),
        "source": source.to_mapping(),
    }
    logger.info(f"finished: {n_ticks} ticks, {len(events)} events")
    return Dataset(
        aggregate=aggregate,
        per_appliance=per_appliance,
        events=events,
        meta=meta,
        source=source_frame,
        loss_w=loss,
        waveforms={k: np.concatenate(v) for k, v in kept.items()} if keep_waveforms else None,
    )


def panel_aggregate(d: Dataset, tick: int) -> PanelAggregate:
    """Power balance terms of one tick."""
    if d.source is None or d.loss_w is None:
        raise ConfigurationError("dataset carries no source-side records")
    return PanelAggregate(
        p_o=float(d.source["p_w"].iloc[tick]),
        p_i={k: float(frame["p_w"].iloc[tick]) for k, frame in d.per_appliance.items()},
        loss=float(d.loss_w[tick]),
    )


def panel_power_identity(d: Dataset) -> PowerIdentityReport:
    """Largest |p_o - Σ p_i - E| over all ticks."""
    if d.source is None or d.loss_w is None:
        raise ConfigurationError("dataset carries no source-side records")
    if len(d.aggregate) == 0:
        return PowerIdentityReport(0.0, 0, 0.0, 0.0)
    p_o = d.source["p_w"].to_numpy()
    p_sum = np.zeros_like(p_o)
    for frame in d.per_appliance.values():
        p_sum = p_sum + frame["p_w"].to_numpy()
    residual = np.abs(p_o - p_sum - d.loss_w)
    tick = int(np.argmax(residual))
    return PowerIdentityReport(
        max_residual=float(residual[tick]),
        tick=tick,
        time=float(d.aggregate["time_s"].iloc[tick]),
        p_o=float(p_o[tick]),
    )
