"""Finite-state appliances: one linear branch per configured (p, q) state."""

from typing import Tuple

import numpy as np

from ..metering import Waveform
from .base import (
    OFF,
    ApplianceSpec,
    ApplianceState,
    FsmTableParams,
    admittance_from_pq,
    linear_branch_current,
)


def fsm_admittance(params: FsmTableParams, mode: str) -> complex:
    y = admittance_from_pq(params.standby_power, params.standby_reactive, params.nominal_voltage)
    if mode != OFF:
        target = params.state(mode)
        y += admittance_from_pq(target.p, target.q, params.nominal_voltage)
    return y


def fsm_step(
    spec: ApplianceSpec, state: ApplianceState, u: Waveform, mains_freq: float
) -> Tuple[np.ndarray, ApplianceState]:
    y = fsm_admittance(spec.params, state.mode)
    return linear_branch_current(u, y, mains_freq), state.advance(u.duration)
