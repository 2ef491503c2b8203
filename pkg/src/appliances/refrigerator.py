"""Refrigerator: RSCR compressor with a PTC start element, plus the door light.

The compressor is solved per mains cycle as a phasor network

    run branch:    R_r + jωL_r
    start branch:  R_st + jωL_st + (R_ptc || C_run)

with the PTC resistance updated between cycles. A cold PTC shorts C_run
and the start winding carries the inrush; once the PTC has heated past its
trip energy its resistance climbs to thousands of ohms and the start branch
runs through C_run only.

Example:
>>> import src.appliances.refrigerator as rf
>>> params = rf.RefrigeratorParams()
>>> inrush = rf.rscr_solve(params, params.ptc_cold, 235 + 0j, 2 * math.pi * 50)
"""

import math
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np

from ..errors import InvalidInputError, NumericalError
from ..metering import Waveform
from .base import (
    OFF,
    ApplianceSpec,
    ApplianceState,
    PtcState,
    RefrigeratorParams,
    quarter_cycle_lag,
)

COMPRESSOR_ON = "compressor_on"
DOOR_OPEN = "door_open"
# compressor OFF for this many time constants leaves the PTC fully cold
PTC_RESET_TIME_CONSTANTS = 5.0


def refrigerator_mode(compressor_on: bool, door_open: bool) -> str:
    """State name used in the ground-truth log."""
    parts = []
    if compressor_on:
        parts.append(COMPRESSOR_ON)
    if door_open:
        parts.append(DOOR_OPEN)
    return "+".join(parts) if parts else OFF


def cold_ptc(params: RefrigeratorParams) -> PtcState:
    return PtcState(energy=0.0, resistance=params.ptc_cold, off_time=0.0)


def ptc_resistance(energy: float, params: RefrigeratorParams) -> float:
    """R_cold up to the trip energy, then an exponential approach to R_hot."""
    if energy <= params.ptc_trip_energy:
        return params.ptc_cold
    excess = (energy - params.ptc_trip_energy) / params.ptc_rise_energy
    return params.ptc_hot - (params.ptc_hot - params.ptc_cold) * math.exp(-excess)


def ptc_update(
    state: PtcState,
    i_rms_cycle: float,
    dt: float,
    params: RefrigeratorParams,
    running: bool = True,
) -> PtcState:
    """Advances the PTC by dt seconds with i_rms_cycle flowing through it.

    Stored heat x follows dx/dt = i²·R - x/τ, integrated exactly for a
    constant dissipation over dt. While the compressor runs the resistance
    never decreases; once it has been off for 5τ the element is cold again.
    """
    if dt <= 0:
        raise InvalidInputError(f"ptc_update needs dt > 0, got {dt}")
    tau = params.ptc_time_constant
    dissipation = i_rms_cycle**2 * state.resistance
    decay = math.exp(-dt / tau)
    energy = dissipation * tau + (state.energy - dissipation * tau) * decay

    if running:
        resistance = max(state.resistance, ptc_resistance(energy, params))
        return PtcState(energy=energy, resistance=resistance, off_time=0.0)

    off_time = state.off_time + dt
    if off_time >= PTC_RESET_TIME_CONSTANTS * tau:
        return replace(cold_ptc(params), off_time=off_time)
    return PtcState(energy=energy, resistance=ptc_resistance(energy, params), off_time=off_time)


def _rscr_branches(
    params: RefrigeratorParams, r_ptc: float, u_phasor: complex, omega: float
) -> Tuple[complex, complex]:
    if r_ptc <= 0:
        raise InvalidInputError(f"PTC resistance must be positive, got {r_ptc}")
    z_run = complex(params.run_resistance, omega * params.run_inductance)
    z_cap = 1.0 / complex(0.0, omega * params.run_capacitance)
    z_par = r_ptc * z_cap / (r_ptc + z_cap)
    z_start = complex(params.start_resistance, omega * params.start_inductance) + z_par
    if z_run == 0 or z_start == 0:
        raise NumericalError("RSCR network is singular")
    i_start = u_phasor / z_start
    i_ptc = i_start * z_cap / (r_ptc + z_cap)
    return u_phasor / z_run + i_start, i_ptc


def rscr_solve(
    params: RefrigeratorParams, r_ptc: float, u_phasor: complex, omega: float
) -> complex:
    """Total compressor current phasor for a given PTC resistance."""
    total, _ = _rscr_branches(params, r_ptc, u_phasor, omega)
    return total


def door_light_resistance(params: RefrigeratorParams) -> Optional[float]:
    if params.door_light_power == 0:
        return None
    return params.nominal_voltage**2 / params.door_light_power


def _cycle_bounds(u: Waveform, mains_freq: float) -> np.ndarray:
    cycle = np.floor(u.times * mains_freq + 1e-9)
    edges = np.flatnonzero(np.diff(cycle)) + 1
    return np.concatenate(([0], edges, [len(u)]))


def refrigerator_step(
    spec: ApplianceSpec, state: ApplianceState, u: Waveform, mains_freq: float
) -> Tuple[np.ndarray, ApplianceState]:
    params: RefrigeratorParams = spec.params
    ptc = state.ptc or cold_ptc(params)
    i = np.zeros(len(u))

    if state.door_open:
        r_light = door_light_resistance(params)
        if r_light is not None:
            i += u.samples / r_light

    if not state.compressor_on:
        ptc = ptc_update(ptc, 0.0, u.duration, params, running=False)
        return i, replace(state, ptc=ptc, time_in_state=state.time_in_state + u.duration)

    omega = 2.0 * math.pi * mains_freq
    lagged = quarter_cycle_lag(u, mains_freq)
    bounds = _cycle_bounds(u, mains_freq)
    for a, b in zip(bounds[:-1], bounds[1:]):
        segment = u.samples[a:b]
        u_rms = float(np.sqrt(np.mean(np.square(segment))))
        total, i_ptc = _rscr_branches(params, ptc.resistance, complex(u_rms, 0.0), omega)
        admittance = total / u_rms if u_rms > 0 else rscr_solve(params, ptc.resistance, 1 + 0j, omega)
        i[a:b] += admittance.real * segment - admittance.imag * lagged[a:b]
        ptc = ptc_update(ptc, abs(i_ptc), (b - a) / u.sample_rate, params)

    return i, replace(state, ptc=ptc, time_in_state=state.time_in_state + u.duration)
