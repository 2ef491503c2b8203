"""Leading-edge triac dimmer in front of a resistive lamp."""

import math
from typing import Tuple

import numpy as np

from ..metering import Waveform
from .base import OFF, ApplianceSpec, ApplianceState, DimmerParams


def conduction_weights(u: Waveform, alpha: float, mains_freq: float) -> np.ndarray:
    """Fraction of each sample cell the triac conducts.

    The phase of every half cycle runs 0..π from the source zero crossing.
    Cells entirely after α conduct fully, the cell holding α conducts the
    part after it.
    """
    step = 2.0 * math.pi * mains_freq / u.sample_rate
    theta = np.mod(2.0 * math.pi * mains_freq * u.times, math.pi)
    return np.clip((theta + 0.5 * step - alpha) / step, 0.0, 1.0)


def dimmer_current(u: Waveform, dp: DimmerParams, mains_freq: float) -> Waveform:
    """Chopped lamp current: zero from each zero crossing up to α, u/R after."""
    weights = conduction_weights(u, dp.firing_angle, mains_freq)
    return Waveform(u.sample_rate, weights * u.samples / dp.lamp_resistance, u.start_time)


def dimmer_power_fraction(alpha: float) -> float:
    """Closed-form P(α)/P(0) of a phase-chopped resistive load."""
    return 1.0 - alpha / math.pi + math.sin(2.0 * alpha) / (2.0 * math.pi)


def dimmer_step(
    spec: ApplianceSpec, state: ApplianceState, u: Waveform, mains_freq: float
) -> Tuple[np.ndarray, ApplianceState]:
    if state.mode == OFF:
        return np.zeros(len(u)), state.advance(u.duration)
    params: DimmerParams = spec.params
    alpha = params.firing_angle if state.firing_angle is None else state.firing_angle
    weights = conduction_weights(u, alpha, mains_freq)
    return weights * u.samples / params.lamp_resistance, state.advance(u.duration)
