"""Appliance descriptions, runtime state and the linear-branch helpers shared
by the individual load models."""

import math
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from ..errors import ConfigurationError, InvalidInputError
from ..metering import Waveform

NOMINAL_VOLTAGE = 235.0
MAINS_FREQUENCY = 50.0

OFF = "off"
ON = "on"


class ApplianceKind(Enum):
    """Appliance models. ON/OFF loads (on_off_heater, incandescent), finite
    state machines (fsm_table), continuously variable devices (triac_dimmer),
    permanent consumers (standby_device) and the RSCR refrigerator."""

    ON_OFF_HEATER = "on_off_heater"
    INCANDESCENT = "incandescent"
    STANDBY_DEVICE = "standby_device"
    FSM_TABLE = "fsm_table"
    TRIAC_DIMMER = "triac_dimmer"
    REFRIGERATOR = "refrigerator"


class ActionKind(Enum):
    TURN_ON = "turn_on"
    TURN_OFF = "turn_off"
    SET_STATE = "set_state"
    SET_DIMMER = "set_dimmer"
    DOOR_OPEN = "door_open"
    DOOR_CLOSE = "door_close"
    COMPRESSOR_ON = "compressor_on"
    COMPRESSOR_OFF = "compressor_off"
    SET_TEMPERATURE = "set_temperature"


class ParamsBlock:
    """Mapping conversion and float coercion for the parameter blocks."""

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.type in (float, Optional[float]) and value is not None:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigurationError(f"{f.name} must be a number, got {value!r}")
                object.__setattr__(self, f.name, float(value))
        self.validate()

    def validate(self):
        pass

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown parameter(s): {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as error:
            raise ConfigurationError(str(error)) from error

    def to_mapping(self) -> Dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}


def require_positive(**values):
    for name, value in values.items():
        if not value > 0:
            raise ConfigurationError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class HeaterThermalParams(ParamsBlock):
    """Thermal auto-off model: t = c·m·(T - T0) / (P·η)."""

    rated_power: float
    water_mass: float
    specific_heat: float = 4200.0
    boil_temp: float = 100.0
    initial_temp: float = 25.0
    efficiency: float = 1.0

    def validate(self):
        require_positive(
            rated_power=self.rated_power,
            water_mass=self.water_mass,
            specific_heat=self.specific_heat,
            boil_temp=self.boil_temp,
            initial_temp=self.initial_temp,
            efficiency=self.efficiency,
        )
        if self.boil_temp < self.initial_temp:
            raise ConfigurationError(
                f"boil_temp {self.boil_temp} is below initial_temp {self.initial_temp}"
            )
        if self.efficiency > 1.0:
            raise ConfigurationError(f"efficiency must be <= 1, got {self.efficiency}")


@dataclass(frozen=True)
class HeaterParams(ParamsBlock):
    """Resistive heating element; a water mass enables thermal auto-off."""

    rated_power: float
    nominal_voltage: float = NOMINAL_VOLTAGE
    water_mass: Optional[float] = None
    specific_heat: float = 4200.0
    boil_temp: float = 100.0
    initial_temp: float = 25.0
    efficiency: float = 1.0

    def validate(self):
        require_positive(
            rated_power=self.rated_power, nominal_voltage=self.nominal_voltage
        )
        self.thermal

    @property
    def thermal(self) -> Optional[HeaterThermalParams]:
        if self.water_mass is None:
            return None
        return HeaterThermalParams(
            rated_power=self.rated_power,
            water_mass=self.water_mass,
            specific_heat=self.specific_heat,
            boil_temp=self.boil_temp,
            initial_temp=self.initial_temp,
            efficiency=self.efficiency,
        )

    @property
    def resistance(self) -> float:
        return self.nominal_voltage**2 / self.rated_power


@dataclass(frozen=True)
class IncandescentParams(ParamsBlock):
    rated_power: float
    nominal_voltage: float = NOMINAL_VOLTAGE

    def validate(self):
        require_positive(
            rated_power=self.rated_power, nominal_voltage=self.nominal_voltage
        )

    @property
    def resistance(self) -> float:
        return self.nominal_voltage**2 / self.rated_power


@dataclass(frozen=True)
class StandbyParams(ParamsBlock):
    """Permanent consumer; the optional active part follows turn_on/turn_off."""

    standby_power: float
    standby_reactive: float = 0.0
    active_power: float = 0.0
    active_reactive: float = 0.0
    nominal_voltage: float = NOMINAL_VOLTAGE

    def validate(self):
        require_positive(nominal_voltage=self.nominal_voltage)
        if self.standby_power < 0 or self.active_power < 0:
            raise ConfigurationError("standby and active power must be >= 0")


@dataclass(frozen=True)
class DimmerParams(ParamsBlock):
    """Lamp behind a leading-edge triac; firing_angle is the initial α."""

    lamp_resistance: float
    firing_angle: float = 0.0

    def validate(self):
        require_positive(lamp_resistance=self.lamp_resistance)
        check_firing_angle(self.firing_angle)


def check_firing_angle(alpha: float):
    if not 0.0 <= alpha < math.pi:
        raise ConfigurationError(f"firing angle must lie in [0, pi), got {alpha}")


@dataclass(frozen=True)
class FsmState(ParamsBlock):
    name: str
    p: float
    q: float = 0.0

    def validate(self):
        if not isinstance(self.name, str) or not self.name:
            raise ConfigurationError("state name must be a non-empty string")
        if self.name == OFF:
            raise ConfigurationError(f"'{OFF}' is implicit and cannot be configured")
        if self.p < 0:
            raise ConfigurationError(f"state '{self.name}' has negative p {self.p}")
        if self.p**2 + self.q**2 <= 0:
            raise ConfigurationError(f"state '{self.name}' draws no power")


@dataclass(frozen=True)
class FsmTableParams(ParamsBlock):
    """Finite-state appliance: (p, q) targets per state at nominal_voltage,
    plus an always-on standby draw."""

    states: Tuple[FsmState, ...]
    nominal_voltage: float = NOMINAL_VOLTAGE
    standby_power: float = 0.0
    standby_reactive: float = 0.0
    default_state: Optional[str] = None

    def __post_init__(self):
        states = tuple(
            s if isinstance(s, FsmState) else FsmState.from_mapping(s)
            for s in self.states
        )
        object.__setattr__(self, "states", states)
        super().__post_init__()

    def validate(self):
        require_positive(nominal_voltage=self.nominal_voltage)
        if not self.states:
            raise ConfigurationError("fsm_table needs at least one state")
        names = [s.name for s in self.states]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate state names in {names}")
        if self.standby_power < 0:
            raise ConfigurationError("standby_power must be >= 0")
        if self.default_state is not None and self.default_state not in names:
            raise ConfigurationError(f"unknown default_state '{self.default_state}'")

    def to_mapping(self) -> Dict[str, Any]:
        data = super().to_mapping()
        data["states"] = [s.to_mapping() for s in self.states]
        return data

    @property
    def state_names(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.states)

    def state(self, name: str) -> FsmState:
        for s in self.states:
            if s.name == name:
                return s
        raise ConfigurationError(f"unknown state '{name}', expected one of {self.state_names}")

    @property
    def start_state(self) -> str:
        return self.default_state or self.states[0].name


@dataclass(frozen=True)
class RefrigeratorParams(ParamsBlock):
    """RSCR compressor with PTC start element plus the door light.

    The defaults give an inrush of about 6 A at 235 V settling to 0.75 A at
    a power factor around 0.96 within roughly two seconds.
    """

    door_light_power: float = 1.5
    run_resistance: float = 220.0
    run_inductance: float = 0.5
    start_resistance: float = 15.0
    start_inductance: float = 0.05
    run_capacitance: float = 4e-6
    ptc_cold: float = 25.0
    ptc_hot: float = 40000.0
    ptc_time_constant: float = 300.0
    ptc_trip_energy: float = 600.0
    ptc_rise_energy: float = 10.0
    nominal_voltage: float = NOMINAL_VOLTAGE

    def validate(self):
        require_positive(
            run_resistance=self.run_resistance,
            run_inductance=self.run_inductance,
            start_resistance=self.start_resistance,
            start_inductance=self.start_inductance,
            run_capacitance=self.run_capacitance,
            ptc_cold=self.ptc_cold,
            ptc_hot=self.ptc_hot,
            ptc_time_constant=self.ptc_time_constant,
            ptc_trip_energy=self.ptc_trip_energy,
            ptc_rise_energy=self.ptc_rise_energy,
            nominal_voltage=self.nominal_voltage,
        )
        if self.ptc_hot < 1000 * self.ptc_cold:
            raise ConfigurationError(
                f"ptc_hot ({self.ptc_hot}) must be at least 1000 x ptc_cold ({self.ptc_cold})"
            )
        if self.door_light_power < 0:
            raise ConfigurationError("door_light_power must be >= 0")


ApplianceParams = Union[
    HeaterParams,
    IncandescentParams,
    StandbyParams,
    FsmTableParams,
    DimmerParams,
    RefrigeratorParams,
]

PARAMS_BY_KIND = {
    ApplianceKind.ON_OFF_HEATER: HeaterParams,
    ApplianceKind.INCANDESCENT: IncandescentParams,
    ApplianceKind.STANDBY_DEVICE: StandbyParams,
    ApplianceKind.FSM_TABLE: FsmTableParams,
    ApplianceKind.TRIAC_DIMMER: DimmerParams,
    ApplianceKind.REFRIGERATOR: RefrigeratorParams,
}


@dataclass(frozen=True)
class ApplianceSpec:
    """Parametric description of one branch load."""

    id: str
    kind: ApplianceKind
    params: ApplianceParams
    label: str = ""

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ConfigurationError("appliance id must be a non-empty string")
        if not isinstance(self.kind, ApplianceKind):
            raise ConfigurationError(f"unknown appliance kind {self.kind!r}")
        expected = PARAMS_BY_KIND[self.kind]
        if not isinstance(self.params, expected):
            raise ConfigurationError(
                f"{self.kind.value} appliance '{self.id}' needs {expected.__name__}"
            )


@dataclass(frozen=True)
class PtcState:
    """Thermal state of the PTC start element."""

    energy: float
    resistance: float
    off_time: float = 0.0


@dataclass(frozen=True)
class ApplianceState:
    """Runtime state of one appliance.

    energy: joules delivered since the heater was switched on.
    pending_auto_off: time of an autonomous switch-off not yet logged.
    """

    kind: ApplianceKind
    mode: str = OFF
    time_in_state: float = 0.0
    energy: float = 0.0
    pending_auto_off: Optional[float] = None
    firing_angle: Optional[float] = None
    compressor_on: bool = False
    door_open: bool = False
    ptc: Optional[PtcState] = field(default=None)

    def advance(self, dt: float) -> "ApplianceState":
        return replace(self, time_in_state=self.time_in_state + dt)


def impedance_from_pq(p_target: float, q_target: float, v_nom: float) -> complex:
    """Linear branch impedance that draws (p, q) at v_nom.

    |Z| = v_nom² / sqrt(p² + q²) at angle atan2(q, p).
    """
    s2 = p_target**2 + q_target**2
    if s2 <= 0:
        raise InvalidInputError("impedance_from_pq needs a non-zero (p, q) target")
    return v_nom**2 * complex(p_target, q_target) / s2


def admittance_from_pq(p_target: float, q_target: float, v_nom: float) -> complex:
    """Admittance drawing (p, q) at v_nom; zero for a zero target."""
    if p_target == 0 and q_target == 0:
        return 0j
    return 1.0 / impedance_from_pq(p_target, q_target, v_nom)


def quarter_cycle_lag(u: Waveform, mains_freq: float) -> np.ndarray:
    """u(t - T/4), the voltage delayed by a quarter mains period.

    The first quarter period has no history inside the buffer and uses
    -u(t + T/4) instead, which is the same value for a sinusoid.
    """
    x = u.samples
    shift = u.sample_rate / (4.0 * mains_freq)
    k = int(round(shift))
    if abs(shift - k) < 1e-9 and 0 < k and 2 * k <= x.size:
        lagged = np.empty_like(x)
        lagged[k:] = x[:-k]
        lagged[:k] = -x[k : 2 * k]
        return lagged
    n = np.arange(x.size, dtype=float)
    lagged = np.interp(n - shift, n, x)
    head = n < shift
    lagged[head] = -np.interp(n[head] + shift, n, x)
    return lagged


def linear_branch_current(
    u: Waveform, admittance: complex, mains_freq: float, lagged: Optional[np.ndarray] = None
) -> np.ndarray:
    """Current of a linear branch I = Y·U, synthesized per sample as
    G·u(t) - B·u(t - T/4)."""
    if admittance == 0:
        return np.zeros(len(u))
    if lagged is None:
        lagged = quarter_cycle_lag(u, mains_freq)
    return admittance.real * u.samples - admittance.imag * lagged
