"""Incandescent lamps and permanent (standby) consumers."""

from typing import Tuple

import numpy as np

from ..metering import Waveform
from .base import (
    OFF,
    ApplianceSpec,
    ApplianceState,
    IncandescentParams,
    StandbyParams,
    admittance_from_pq,
    linear_branch_current,
)


def incandescent_step(
    spec: ApplianceSpec, state: ApplianceState, u: Waveform, mains_freq: float
) -> Tuple[np.ndarray, ApplianceState]:
    params: IncandescentParams = spec.params
    if state.mode == OFF:
        return np.zeros(len(u)), state.advance(u.duration)
    return u.samples / params.resistance, state.advance(u.duration)


def standby_admittance(params: StandbyParams, active: bool) -> complex:
    """Admittance of the standby draw plus the active part when switched on."""
    p = params.standby_power + (params.active_power if active else 0.0)
    q = params.standby_reactive + (params.active_reactive if active else 0.0)
    return admittance_from_pq(p, q, params.nominal_voltage)


def standby_step(
    spec: ApplianceSpec, state: ApplianceState, u: Waveform, mains_freq: float
) -> Tuple[np.ndarray, ApplianceState]:
    y = standby_admittance(spec.params, state.mode != OFF)
    return linear_branch_current(u, y, mains_freq), state.advance(u.duration)
