"""Branch-load models of household appliances.

Every appliance turns the node voltage of one report interval into its branch
current and advances its own state:

>>> import src.appliances as ap
>>> spec = ap.ApplianceSpec("lamp", ap.ApplianceKind.INCANDESCENT, ap.IncandescentParams(100.0))
>>> state = ap.apply_action(spec, ap.initial_state(spec), ap.ActionKind.TURN_ON)
>>> i, state = ap.step(spec, state, u)
"""

from dataclasses import MISSING, fields, replace
from typing import Any, Callable, Dict, FrozenSet, Optional, Tuple

import numpy as np

from ..errors import ConfigurationError
from ..metering import Waveform
from .base import (
    MAINS_FREQUENCY,
    NOMINAL_VOLTAGE,
    OFF,
    ON,
    PARAMS_BY_KIND,
    ActionKind,
    ApplianceKind,
    ApplianceParams,
    ApplianceSpec,
    ApplianceState,
    DimmerParams,
    FsmState,
    FsmTableParams,
    HeaterParams,
    HeaterThermalParams,
    IncandescentParams,
    PtcState,
    RefrigeratorParams,
    StandbyParams,
    admittance_from_pq,
    check_firing_angle,
    impedance_from_pq,
    linear_branch_current,
    quarter_cycle_lag,
)
from .dimmer import dimmer_current, dimmer_power_fraction, dimmer_step
from .fsm import fsm_step
from .heater import heat_required, heater_auto_off_time, heater_step
from .refrigerator import (
    cold_ptc,
    ptc_resistance,
    ptc_update,
    refrigerator_mode,
    refrigerator_step,
    rscr_solve,
)
from .resistive import incandescent_step, standby_step

StepFunction = Callable[
    [ApplianceSpec, ApplianceState, Waveform, float], Tuple[np.ndarray, ApplianceState]
]

_STEPS: Dict[ApplianceKind, StepFunction] = {
    ApplianceKind.ON_OFF_HEATER: heater_step,
    ApplianceKind.INCANDESCENT: incandescent_step,
    ApplianceKind.STANDBY_DEVICE: standby_step,
    ApplianceKind.FSM_TABLE: fsm_step,
    ApplianceKind.TRIAC_DIMMER: dimmer_step,
    ApplianceKind.REFRIGERATOR: refrigerator_step,
}

_SWITCHED = frozenset({ActionKind.TURN_ON, ActionKind.TURN_OFF})

VALID_ACTIONS: Dict[ApplianceKind, FrozenSet[ActionKind]] = {
    ApplianceKind.ON_OFF_HEATER: _SWITCHED,
    ApplianceKind.INCANDESCENT: _SWITCHED,
    ApplianceKind.STANDBY_DEVICE: _SWITCHED,
    ApplianceKind.FSM_TABLE: _SWITCHED
    | {ActionKind.SET_STATE, ActionKind.SET_TEMPERATURE},
    ApplianceKind.TRIAC_DIMMER: _SWITCHED | {ActionKind.SET_DIMMER},
    ApplianceKind.REFRIGERATOR: _SWITCHED
    | {
        ActionKind.DOOR_OPEN,
        ActionKind.DOOR_CLOSE,
        ActionKind.COMPRESSOR_ON,
        ActionKind.COMPRESSOR_OFF,
        ActionKind.SET_TEMPERATURE,
    },
}

# actions that carry a value in the scenario file
VALUED_ACTIONS = frozenset(
    {ActionKind.SET_STATE, ActionKind.SET_DIMMER, ActionKind.SET_TEMPERATURE}
)


def valid_actions(kind: ApplianceKind) -> FrozenSet[ActionKind]:
    return VALID_ACTIONS[kind]


def initial_state(spec: ApplianceSpec) -> ApplianceState:
    """Every appliance starts OFF; refrigerators with a cold PTC."""
    state = ApplianceState(kind=spec.kind)
    if spec.kind is ApplianceKind.TRIAC_DIMMER:
        state = replace(state, firing_angle=spec.params.firing_angle)
    elif spec.kind is ApplianceKind.REFRIGERATOR:
        state = replace(state, ptc=cold_ptc(spec.params))
    return state


def check_action(spec: ApplianceSpec, action: ActionKind, value: Any = None):
    """Raises ConfigurationError when the action cannot target this appliance."""
    if action not in VALID_ACTIONS[spec.kind]:
        raise ConfigurationError(
            f"{action.value} is not valid for {spec.kind.value} appliance '{spec.id}'"
        )
    if action is ActionKind.SET_STATE:
        if value != OFF:
            spec.params.state(value)
    elif action is ActionKind.SET_DIMMER:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"set_dimmer needs a firing angle, got {value!r}")
        check_firing_angle(float(value))
    elif action is ActionKind.SET_TEMPERATURE:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"set_temperature needs a setpoint, got {value!r}")


def _refrigerator_action(state: ApplianceState, action: ActionKind) -> ApplianceState:
    compressor, door = state.compressor_on, state.door_open
    if action in (ActionKind.TURN_ON, ActionKind.COMPRESSOR_ON):
        compressor = True
    elif action in (ActionKind.TURN_OFF, ActionKind.COMPRESSOR_OFF):
        compressor = False
    elif action is ActionKind.DOOR_OPEN:
        door = True
    elif action is ActionKind.DOOR_CLOSE:
        door = False
    return replace(
        state,
        compressor_on=compressor,
        door_open=door,
        mode=refrigerator_mode(compressor, door),
    )


def apply_action(
    spec: ApplianceSpec,
    state: ApplianceState,
    action: ActionKind,
    value: Optional[Any] = None,
) -> ApplianceState:
    """State after a user action. time_in_state restarts on every mode change.

    set_temperature is accepted for logging only and changes nothing.
    """
    check_action(spec, action, value)
    kind = spec.kind

    if action is ActionKind.SET_TEMPERATURE:
        new = state
    elif kind is ApplianceKind.REFRIGERATOR:
        new = _refrigerator_action(state, action)
    elif action is ActionKind.TURN_OFF:
        new = replace(state, mode=OFF)
    elif action is ActionKind.TURN_ON:
        if state.mode != OFF:
            new = state
        elif kind is ApplianceKind.FSM_TABLE:
            new = replace(state, mode=spec.params.start_state)
        elif kind is ApplianceKind.ON_OFF_HEATER:
            new = replace(state, mode=ON, energy=0.0)
        else:
            new = replace(state, mode=ON)
    elif action is ActionKind.SET_STATE:
        new = replace(state, mode=value)
    elif action is ActionKind.SET_DIMMER:
        new = replace(state, firing_angle=float(value))
    else:
        raise ConfigurationError(f"unhandled action {action.value}")

    if new.mode != state.mode:
        new = replace(new, time_in_state=0.0)
    return new


def branch_current(
    spec: ApplianceSpec,
    state: ApplianceState,
    u: Waveform,
    mains_freq: float = MAINS_FREQUENCY,
) -> Tuple[np.ndarray, ApplianceState]:
    """Raw current samples over one interval and the advanced state."""
    try:
        model = _STEPS[spec.kind]
    except KeyError:
        raise ConfigurationError(f"unknown appliance kind {spec.kind!r}")
    return model(spec, state, u, mains_freq)


def step(
    spec: ApplianceSpec,
    state: ApplianceState,
    u: Waveform,
    mains_freq: float = MAINS_FREQUENCY,
) -> Tuple[Waveform, ApplianceState]:
    """Branch current over one report interval and the advanced state."""
    i, new_state = branch_current(spec, state, u, mains_freq)
    return Waveform(u.sample_rate, i, u.start_time), new_state


def parameter_defaults(kind: ApplianceKind) -> Dict[str, Any]:
    """Parameter keys of a kind with their defaults (None when required)."""
    defaults = {}
    for f in fields(PARAMS_BY_KIND[kind]):
        defaults[f.name] = None if f.default is MISSING else f.default
    return defaults


__all__ = [
    "MAINS_FREQUENCY",
    "NOMINAL_VOLTAGE",
    "OFF",
    "ON",
    "PARAMS_BY_KIND",
    "VALUED_ACTIONS",
    "VALID_ACTIONS",
    "ActionKind",
    "ApplianceKind",
    "ApplianceParams",
    "ApplianceSpec",
    "ApplianceState",
    "DimmerParams",
    "FsmState",
    "FsmTableParams",
    "HeaterParams",
    "HeaterThermalParams",
    "IncandescentParams",
    "PtcState",
    "RefrigeratorParams",
    "StandbyParams",
    "admittance_from_pq",
    "apply_action",
    "branch_current",
    "check_action",
    "cold_ptc",
    "dimmer_current",
    "dimmer_power_fraction",
    "heat_required",
    "heater_auto_off_time",
    "impedance_from_pq",
    "initial_state",
    "linear_branch_current",
    "parameter_defaults",
    "ptc_resistance",
    "ptc_update",
    "quarter_cycle_lag",
    "refrigerator_mode",
    "rscr_solve",
    "step",
    "valid_actions",
]
