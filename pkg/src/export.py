"""Dataset files: CSV record tables, a JSON-lines event log and run metadata.

Layout of an output directory:

    aggregate.csv           panel records
    appliance_<id>.csv      one per appliance, same columns
    source.csv              records at the EMF terminals
    events.jsonl            one ground-truth event per line
    meta.json               seed, rates, scenario hash, source settings
"""

import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import FrozenSet, Iterable, List, Union

import numpy as np
import pandas as pd

from .errors import ConfigurationError, InvalidInputError
from .metering import RECORD_COLUMNS
from .panel import Dataset
from .scenario import GroundTruthEvent

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "FILM_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "film_output"

AGGREGATE_FILE = "aggregate.csv"
SOURCE_FILE = "source.csv"
EVENTS_FILE = "events.jsonl"
META_FILE = "meta.json"
APPLIANCE_PREFIX = "appliance_"


class ExportFormat(Enum):
    AGGREGATE_CSV = "aggregate_csv"
    PER_APPLIANCE_CSV = "per_appliance_csv"
    EVENTS_JSONL = "events_jsonl"
    META_JSON = "meta_json"
    SOURCE_CSV = "source_csv"


DEFAULT_FORMATS = frozenset(
    {
        ExportFormat.AGGREGATE_CSV,
        ExportFormat.PER_APPLIANCE_CSV,
        ExportFormat.EVENTS_JSONL,
        ExportFormat.META_JSON,
    }
)


def default_output_dir() -> Path:
    """FILM_OUTPUT_DIR when set, ./film_output otherwise."""
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


@dataclass(frozen=True)
class ExportConfig:
    output_dir: Path = field(default_factory=default_output_dir)
    formats: FrozenSet[ExportFormat] = DEFAULT_FORMATS
    decimal_places: int = 6

    def __post_init__(self):
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        formats = frozenset(ExportFormat(f) for f in self.formats)
        if not formats:
            raise ConfigurationError("at least one export format is required")
        object.__setattr__(self, "formats", formats)
        if self.decimal_places < 0:
            raise ConfigurationError(
                f"decimal_places must be >= 0, got {self.decimal_places}"
            )


def appliance_file(appliance_id: str) -> str:
    return f"{APPLIANCE_PREFIX}{appliance_id}.csv"


def _write_frame(frame: pd.DataFrame, path: Path, decimal_places: int):
    frame.to_csv(path, index=False, float_format=f"%.{decimal_places}f")


def _write_events(events: Iterable[GroundTruthEvent], path: Path):
    with open(path, "w", encoding="utf-8") as f:
        for event in events:
            f.write(json.dumps(event.to_json()) + "\n")


def write_dataset(dataset: Dataset, config: ExportConfig) -> List[Path]:
    """Writes the requested files and returns their paths.

    Files written before a failure are removed again.
    """
    output_dir = config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    try:
        if ExportFormat.AGGREGATE_CSV in config.formats:
            path = output_dir / AGGREGATE_FILE
            _write_frame(dataset.aggregate, path, config.decimal_places)
            written.append(path)
        if ExportFormat.PER_APPLIANCE_CSV in config.formats:
            for appliance_id, frame in dataset.per_appliance.items():
                path = output_dir / appliance_file(appliance_id)
                _write_frame(frame, path, config.decimal_places)
                written.append(path)
        if ExportFormat.SOURCE_CSV in config.formats and dataset.source is not None:
            path = output_dir / SOURCE_FILE
            _write_frame(dataset.source, path, config.decimal_places)
            written.append(path)
        if ExportFormat.EVENTS_JSONL in config.formats:
            path = output_dir / EVENTS_FILE
            _write_events(dataset.events, path)
            written.append(path)
        if ExportFormat.META_JSON in config.formats:
            path = output_dir / META_FILE
            meta = dict(dataset.meta, decimal_places=config.decimal_places)
            path.write_text(json.dumps(meta, indent=2), encoding="utf-8")
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    for path in written:
        logger.info(f"wrote {path}")
    return written


def _read_frame(path: Path) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype=float)
    missing = [c for c in RECORD_COLUMNS if c not in frame.columns]
    if missing:
        raise InvalidInputError(f"{path} lacks column(s): {', '.join(missing)}")
    return frame[list(RECORD_COLUMNS)]


def _read_events(path: Path) -> List[GroundTruthEvent]:
    events = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            data = json.loads(line)
            events.append(
                GroundTruthEvent(
                    time=float(data["t_s"]),
                    appliance_id=data["appliance"],
                    state_from=data["from"],
                    state_to=data["to"],
                    note=data.get("note", ""),
                    warning=bool(data.get("warning", False)),
                )
            )
    return events


def load_dataset(path: Union[str, Path]) -> Dataset:
    """Reads a dataset directory written by write_dataset."""
    root = Path(path)
    aggregate_path = root / AGGREGATE_FILE
    if not aggregate_path.is_file():
        raise FileNotFoundError(f"no {AGGREGATE_FILE} in {root}")

    meta_path = root / META_FILE
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.is_file() else {}
    if "appliances" in meta:
        ids = list(meta["appliances"])
    else:
        ids = sorted(
            p.stem[len(APPLIANCE_PREFIX) :] for p in root.glob(f"{APPLIANCE_PREFIX}*.csv")
        )
    per_appliance = {}
    for appliance_id in ids:
        appliance_path = root / appliance_file(appliance_id)
        if appliance_path.is_file():
            per_appliance[appliance_id] = _read_frame(appliance_path)

    aggregate = _read_frame(aggregate_path)
    source_path = root / SOURCE_FILE
    source = _read_frame(source_path) if source_path.is_file() else None
    r_src = float(meta.get("source", {}).get("source_resistance", 0.0))
    events_path = root / EVENTS_FILE
    return Dataset(
        aggregate=aggregate,
        per_appliance=per_appliance,
        events=_read_events(events_path) if events_path.is_file() else [],
        meta=meta,
        source=source,
        loss_w=np.square(aggregate["i_rms"].to_numpy()) * r_src,
    )
