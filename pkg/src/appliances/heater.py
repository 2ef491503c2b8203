"""ON/OFF heating elements (kettle, coffee machine, toaster).

A heater with a water mass tracks the electrical energy delivered since it
was switched on and turns itself off once c·m·(T - T0)/η joules have been
delivered, so a sagging supply lengthens the boil.
"""

import logging
from dataclasses import replace
from typing import Tuple

import numpy as np

from ..metering import Waveform
from .base import OFF, ApplianceSpec, ApplianceState, HeaterParams, HeaterThermalParams

logger = logging.getLogger(__name__)


def heat_required(hp: HeaterThermalParams) -> float:
    """Electrical energy in joules needed to bring the water to the boil."""
    return hp.specific_heat * hp.water_mass * (hp.boil_temp - hp.initial_temp) / hp.efficiency


def heater_auto_off_time(hp: HeaterThermalParams) -> float:
    """Seconds to boil at rated power: c·m·(T - T0) / (P·η)."""
    return heat_required(hp) / hp.rated_power


def heater_step(
    spec: ApplianceSpec, state: ApplianceState, u: Waveform, mains_freq: float
) -> Tuple[np.ndarray, ApplianceState]:
    params: HeaterParams = spec.params
    if state.mode == OFF:
        return np.zeros(len(u)), state.advance(u.duration)

    i = u.samples / params.resistance
    thermal = params.thermal
    if thermal is None:
        return i, state.advance(u.duration)

    need = heat_required(thermal)
    dt = 1.0 / u.sample_rate
    power = u.samples * i
    delivered = state.energy + np.cumsum(power) * dt
    reached = np.flatnonzero(delivered >= need)
    if reached.size == 0:
        return i, replace(
            state,
            energy=float(delivered[-1]),
            time_in_state=state.time_in_state + u.duration,
        )

    n = int(reached[0])
    before = delivered[n - 1] if n > 0 else state.energy
    fraction = (need - before) / power[n] if power[n] > 0 else 0.0
    t_off = float(u.times[n] + min(max(fraction, 0.0), 1.0) * dt)
    i = i.copy()
    i[n + 1 :] = 0.0
    logger.debug(f"{spec.id} reached the boil at {t_off:.3f} s")
    return i, replace(
        state,
        mode=OFF,
        energy=need,
        time_in_state=float(u.start_time + u.duration - t_off),
        pending_auto_off=t_off,
    )
