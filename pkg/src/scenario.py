"""Scenario files: the appliances of a house and the scripted user actions.

A scenario is a TOML document:

    name = "refrigerator_day"
    duration_s = 17000.0

    [source]                # optional, same keys as SourceParams
    v_nominal = 235.0

    [[appliance]]
    id = "refrigerator"
    kind = "refrigerator"
    label = "Refrigerator"
    [appliance.params]
    door_light_power = 1.5

    [[action]]
    t_s = 24.25
    appliance = "refrigerator"
    action = "compressor_on"
    note = "Compressor ON"

set_state, set_dimmer and set_temperature actions carry a `value` (state
name, firing angle in radians, setpoint in °C).

Example:
>>> import src.scenario as sc
>>> scenario = sc.load_scenario("house_evening")
>>> sc.actions_in_interval(scenario, 0.0, 100.0)
"""

import bisect
import hashlib
import logging
import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import tomli_w

from .appliances import (
    OFF,
    PARAMS_BY_KIND,
    VALUED_ACTIONS,
    ActionKind,
    ApplianceKind,
    ApplianceSpec,
    ApplianceState,
    apply_action,
    check_action,
)
from .appliances.base import ParamsBlock, require_positive
from .errors import ConfigurationError, InvalidInputError, ParseError

logger = logging.getLogger(__name__)

SCENARIO_PACKAGE = "src.scenarios"
AUTO_NOTE = "auto"

_TOP_LEVEL_KEYS = {"name", "description", "duration_s", "source", "appliance", "action"}
_APPLIANCE_KEYS = {"id", "kind", "label", "params"}
_ACTION_KEYS = {"t_s", "appliance", "action", "value", "note"}


@dataclass(frozen=True)
class SourceParams(ParamsBlock):
    """Mains source: a sinusoidal EMF with per-cycle gaussian amplitude noise
    behind a resistive source impedance."""

    v_nominal: float = 235.0
    freq: float = 50.0
    noise_std: float = 0.0
    source_resistance: float = 0.0
    seed: int = 0

    def validate(self):
        require_positive(v_nominal=self.v_nominal, freq=self.freq)
        if self.noise_std < 0:
            raise ConfigurationError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.source_resistance < 0:
            raise ConfigurationError(
                f"source_resistance must be >= 0, got {self.source_resistance}"
            )
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigurationError(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must fit in 64 bits, got {self.seed}")


@dataclass(frozen=True)
class ScheduledAction:
    time: float
    appliance_id: str
    action: ActionKind
    value: Optional[Any] = None
    note: str = ""


@dataclass(frozen=True)
class GroundTruthEvent:
    """Labeled state transition.

    warning marks an action that left the appliance unchanged.
    """

    time: float
    appliance_id: str
    state_from: str
    state_to: str
    note: str = ""
    warning: bool = False

    def to_json(self) -> Dict[str, Any]:
        return {
            "t_s": self.time,
            "appliance": self.appliance_id,
            "from": self.state_from,
            "to": self.state_to,
            "note": self.note,
            "warning": self.warning,
        }


@dataclass(frozen=True)
class Scenario:
    """Appliances of a house plus the scripted actions, sorted by time.

    Simultaneous actions keep the order they were given in.
    """

    duration: float
    appliances: Tuple[ApplianceSpec, ...]
    schedule: Tuple[ScheduledAction, ...] = ()
    name: str = ""
    description: str = ""
    source: Optional[SourceParams] = None
    _times: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigurationError(f"duration must be positive, got {self.duration}")
        object.__setattr__(self, "duration", float(self.duration))
        appliances = tuple(self.appliances)
        ids = [a.id for a in appliances]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise ConfigurationError(f"duplicate appliance id(s): {', '.join(duplicates)}")
        by_id = dict(zip(ids, appliances))
        for action in self.schedule:
            if action.appliance_id not in by_id:
                raise ConfigurationError(
                    f"action at {action.time} s targets unknown appliance '{action.appliance_id}'"
                )
            if not 0 <= action.time <= self.duration:
                raise ConfigurationError(
                    f"action time {action.time} s outside [0, {self.duration}]"
                )
            check_action(by_id[action.appliance_id], action.action, action.value)
        schedule = tuple(sorted(self.schedule, key=lambda a: a.time))
        object.__setattr__(self, "appliances", appliances)
        object.__setattr__(self, "schedule", schedule)
        object.__setattr__(self, "_times", tuple(a.time for a in schedule))

    def appliance(self, appliance_id: str) -> ApplianceSpec:
        for spec in self.appliances:
            if spec.id == appliance_id:
                return spec
        raise ConfigurationError(f"unknown appliance '{appliance_id}'")

    @property
    def appliance_ids(self) -> Tuple[str, ...]:
        return tuple(a.id for a in self.appliances)


def _header_lines(text: str, table: str) -> List[int]:
    pattern = re.compile(rf"^\s*\[\[\s*{table}\s*\]\]")
    return [n for n, line in enumerate(text.splitlines(), start=1) if pattern.match(line)]


def _number(value: Any, field_name: str, line: Optional[int]) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", field=field_name, line=line)
    return float(value)


def _check_keys(block: Mapping[str, Any], allowed, prefix: str, line: Optional[int]):
    for key in block:
        if key not in allowed:
            raise ParseError("unknown field", field=f"{prefix}{key}", line=line)


def _parse_appliance(block: Any, index: int, line: Optional[int]) -> ApplianceSpec:
    where = f"appliance[{index}]"
    if not isinstance(block, dict):
        raise ParseError("expected a table", field=where, line=line)
    _check_keys(block, _APPLIANCE_KEYS, f"{where}.", line)
    for key in ("id", "kind"):
        if key not in block:
            raise ParseError("missing field", field=f"{where}.{key}", line=line)
    try:
        kind = ApplianceKind(block["kind"])
    except ValueError:
        raise ParseError(
            f"unknown appliance kind {block['kind']!r}", field=f"{where}.kind", line=line
        )
    params = block.get("params", {})
    if not isinstance(params, dict):
        raise ParseError("expected a table", field=f"{where}.params", line=line)
    try:
        return ApplianceSpec(
            id=block["id"],
            kind=kind,
            params=PARAMS_BY_KIND[kind].from_mapping(params),
            label=str(block.get("label", "")),
        )
    except ConfigurationError as error:
        raise ParseError(str(error), field=f"{where}.params", line=line) from error


def _parse_action(
    block: Any,
    index: int,
    line: Optional[int],
    duration: float,
    appliances: Mapping[str, ApplianceSpec],
) -> ScheduledAction:
    where = f"action[{index}]"
    if not isinstance(block, dict):
        raise ParseError("expected a table", field=where, line=line)
    _check_keys(block, _ACTION_KEYS, f"{where}.", line)
    for key in ("t_s", "appliance", "action"):
        if key not in block:
            raise ParseError("missing field", field=f"{where}.{key}", line=line)

    time = _number(block["t_s"], f"{where}.t_s", line)
    if not 0 <= time <= duration:
        raise ParseError(
            f"time {time} s outside [0, {duration}]", field=f"{where}.t_s", line=line
        )
    appliance_id = block["appliance"]
    if appliance_id not in appliances:
        raise ParseError(
            f"unknown appliance '{appliance_id}'", field=f"{where}.appliance", line=line
        )
    try:
        action = ActionKind(block["action"])
    except ValueError:
        raise ParseError(
            f"unknown action {block['action']!r}", field=f"{where}.action", line=line
        )

    value = block.get("value")
    if action in VALUED_ACTIONS and value is None:
        raise ParseError(f"{action.value} needs a value", field=f"{where}.value", line=line)
    if action not in VALUED_ACTIONS and value is not None:
        raise ParseError(f"{action.value} takes no value", field=f"{where}.value", line=line)
    if action in (ActionKind.SET_DIMMER, ActionKind.SET_TEMPERATURE):
        value = _number(value, f"{where}.value", line)
    try:
        check_action(appliances[appliance_id], action, value)
    except ConfigurationError as error:
        raise ParseError(str(error), field=f"{where}.action", line=line) from error
    return ScheduledAction(
        time=time,
        appliance_id=appliance_id,
        action=action,
        value=value,
        note=str(block.get("note", "")),
    )


def parse_scenario(text: str) -> Scenario:
    """Parses and validates a scenario document.

    Raises:
    ------
    ParseError
        With the line of the offending block and the dotted field name.
    """
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as error:
        match = re.search(r"line (\d+)", str(error))
        raise ParseError(str(error), line=int(match.group(1)) if match else None) from error

    _check_keys(document, _TOP_LEVEL_KEYS, "", None)
    if "duration_s" not in document:
        raise ParseError("missing field", field="duration_s")
    duration = _number(document["duration_s"], "duration_s", None)
    if not duration > 0:
        raise ParseError(f"duration must be positive, got {duration}", field="duration_s")

    source = None
    if "source" in document:
        try:
            source = SourceParams.from_mapping(document["source"])
        except ConfigurationError as error:
            raise ParseError(str(error), field="source") from error

    appliance_lines = _header_lines(text, "appliance")
    appliances = []
    for k, block in enumerate(document.get("appliance", [])):
        line = appliance_lines[k] if k < len(appliance_lines) else None
        spec = _parse_appliance(block, k, line)
        if any(a.id == spec.id for a in appliances):
            raise ParseError(f"duplicate id '{spec.id}'", field=f"appliance[{k}].id", line=line)
        appliances.append(spec)
    by_id = {a.id: a for a in appliances}

    action_lines = _header_lines(text, "action")
    schedule = [
        _parse_action(block, k, action_lines[k] if k < len(action_lines) else None, duration, by_id)
        for k, block in enumerate(document.get("action", []))
    ]

    try:
        return Scenario(
            duration=duration,
            appliances=tuple(appliances),
            schedule=tuple(schedule),
            name=str(document.get("name", "")),
            description=str(document.get("description", "")),
            source=source,
        )
    except ConfigurationError as error:
        raise ParseError(str(error)) from error


def serialize_scenario(scenario: Scenario) -> str:
    """TOML text that parse_scenario reads back into an equal Scenario."""
    document: Dict[str, Any] = {}
    if scenario.name:
        document["name"] = scenario.name
    if scenario.description:
        document["description"] = scenario.description
    document["duration_s"] = scenario.duration
    if scenario.source is not None:
        document["source"] = scenario.source.to_mapping()
    document["appliance"] = [
        {
            "id": spec.id,
            "kind": spec.kind.value,
            "label": spec.label,
            "params": spec.params.to_mapping(),
        }
        for spec in scenario.appliances
    ]
    actions = []
    for action in scenario.schedule:
        block = {
            "t_s": action.time,
            "appliance": action.appliance_id,
            "action": action.action.value,
        }
        if action.value is not None:
            block["value"] = action.value
        if action.note:
            block["note"] = action.note
        actions.append(block)
    if actions:
        document["action"] = actions
    return tomli_w.dumps(document)


def scenario_hash(scenario: Scenario) -> str:
    """sha256 of the serialized scenario."""
    return hashlib.sha256(serialize_scenario(scenario).encode("utf-8")).hexdigest()


def bundled_scenarios() -> List[str]:
    """Names of the scenarios shipped with the package."""
    root = resources.files(SCENARIO_PACKAGE)
    return sorted(p.name[: -len(".toml")] for p in root.iterdir() if p.name.endswith(".toml"))


def load_scenario(source: Union[str, Path]) -> Scenario:
    """Loads a scenario from a path or by the name of a bundled scenario."""
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        bundled = resources.files(SCENARIO_PACKAGE) / f"{path.stem}.toml"
        if path.suffix not in ("", ".toml") or not bundled.is_file():
            raise FileNotFoundError(f"scenario not found: {source}")
        text = bundled.read_text(encoding="utf-8")
    scenario = parse_scenario(text)
    logger.debug(
        f"loaded scenario '{scenario.name or source}': {len(scenario.appliances)} appliances, "
        f"{len(scenario.schedule)} actions, {scenario.duration} s"
    )
    return scenario


def actions_in_interval(s: Scenario, t0: float, t1: float) -> List[ScheduledAction]:
    """Actions with t0 <= time < t1 in schedule order."""
    if not 0 <= t0 < t1 <= s.duration:
        raise InvalidInputError(f"interval [{t0}, {t1}) outside [0, {s.duration}]")
    lo = bisect.bisect_left(s._times, t0)
    hi = bisect.bisect_left(s._times, t1)
    return list(s.schedule[lo:hi])


def emit_event(
    prev_state: ApplianceState,
    action: ScheduledAction,
    spec: ApplianceSpec,
    new_state: Optional[ApplianceState] = None,
) -> GroundTruthEvent:
    """Ground-truth event for an action, stamped with its scheduled time.

    An action that leaves the appliance unchanged is logged with a warning.
    """
    if new_state is None:
        new_state = apply_action(spec, prev_state, action.action, action.value)
    unchanged = new_state == prev_state and action.action is not ActionKind.SET_TEMPERATURE
    if unchanged:
        logger.warning(
            f"{action.time:.2f} s: {action.action.value} leaves '{spec.id}' in '{prev_state.mode}'"
        )
    return GroundTruthEvent(
        time=action.time,
        appliance_id=spec.id,
        state_from=prev_state.mode,
        state_to=new_state.mode,
        note=action.note or action.action.value,
        warning=unchanged,
    )


def autonomous_event(appliance_id: str, time: float, state_from: str) -> GroundTruthEvent:
    """Event for a transition the appliance made on its own (heater auto-off)."""
    return GroundTruthEvent(
        time=time, appliance_id=appliance_id, state_from=state_from, state_to=OFF, note=AUTO_NOTE
    )
