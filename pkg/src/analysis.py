"""Statistics of steady-state segments and model-vs-measurement comparison.

Example:
>>> import src.analysis as an
>>> an.state_statistics([1.0, 2.0, 3.0], an.Parameter.P)
StateStatistics(parameter=<Parameter.P: 'p'>, n=3, mean=2.0, std=1.0)
>>> report = an.compare_datasets(reference, model)
>>> report.summary()
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import pearsonr

from .errors import InvalidInputError, UndefinedCorrelationError
from .scenario import GroundTruthEvent

SETTLE_TIME = 5.0


class Parameter(Enum):
    I_RMS = "i_rms"
    P = "p"
    Q = "q"
    PF = "pf"

    @property
    def column(self) -> str:
        return _COLUMNS[self]


_COLUMNS = {
    Parameter.I_RMS: "i_rms",
    Parameter.P: "p_w",
    Parameter.Q: "q_var",
    Parameter.PF: "pf",
}

# below these magnitudes a percentage error means nothing
THRESHOLDS = {
    Parameter.I_RMS: 0.001,
    Parameter.P: 2.0,
    Parameter.Q: 2.0,
    Parameter.PF: 0.0001,
}


@dataclass(frozen=True)
class StateStatistics:
    parameter: Parameter
    n: int
    mean: float
    std: float

    def __str__(self) -> str:
        return f"{self.mean:.2f}±{self.std:.2f}"


def _series(values: Iterable[float], name: str) -> np.ndarray:
    data = np.asarray(values, dtype=float)
    if data.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(data)):
        raise InvalidInputError(f"{name} holds non-finite values")
    return data


def state_statistics(samples: Sequence[float], parameter: Parameter) -> StateStatistics:
    """Mean and (n-1)-denominator standard deviation of one state."""
    data = _series(samples, "samples")
    if data.size < 2:
        raise InvalidInputError(f"need at least 2 samples, got {data.size}")
    return StateStatistics(
        parameter=parameter,
        n=int(data.size),
        mean=float(np.mean(data)),
        std=float(np.std(data, ddof=1)),
    )


def percentage_error(
    x: Sequence[float], y: Sequence[float], parameter: Parameter
) -> np.ndarray:
    """|x - y| / |x| · 100 per sample, x being the reference.

    A reference within the parameter threshold of zero gives 0 when the
    difference is within the threshold too; otherwise the threshold replaces
    |x| as the denominator.
    """
    x = _series(x, "reference")
    y = _series(y, "model")
    if x.size != y.size:
        raise InvalidInputError(f"series lengths differ: {x.size} vs {y.size}")
    theta = THRESHOLDS[parameter]
    diff = np.abs(x - y)
    denominator = np.maximum(np.abs(x), theta)
    error = diff / denominator * 100.0
    error[(np.abs(x) <= theta) & (diff <= theta)] = 0.0
    return error


def correlation(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation coefficient r in [-1, 1]."""
    x = _series(x, "reference")
    y = _series(y, "model")
    if x.size != y.size:
        raise InvalidInputError(f"series lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise InvalidInputError(f"need at least 2 samples, got {x.size}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelationError("correlation of a constant series is undefined")
    r, _ = pearsonr(x, y)
    return float(np.clip(r, -1.0, 1.0))


@dataclass(frozen=True)
class ParameterComparison:
    error: np.ndarray = field(repr=False)
    r: Optional[float]

    @property
    def max_error(self) -> float:
        return float(np.max(self.error)) if self.error.size else 0.0

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.error)) if self.error.size else 0.0


@dataclass(frozen=True)
class ComparisonReport:
    """Per channel and parameter: E(t) series and correlation r.

    r is None where a series is constant and differs from its counterpart.
    """

    times: np.ndarray = field(repr=False)
    channels: Dict[str, Dict[Parameter, ParameterComparison]]
    thresholds: Dict[Parameter, float] = field(default_factory=lambda: dict(THRESHOLDS))

    def summary(self) -> pd.DataFrame:
        """One row per channel: r in percent, max and mean E per parameter."""
        rows = []
        for channel, comparisons in self.channels.items():
            row = {"channel": channel}
            for parameter, comparison in comparisons.items():
                row[f"r_{parameter.value}_pct"] = (
                    np.nan if comparison.r is None else 100.0 * comparison.r
                )
                row[f"e_max_{parameter.value}_pct"] = comparison.max_error
                row[f"e_mean_{parameter.value}_pct"] = comparison.mean_error
            rows.append(row)
        return pd.DataFrame(rows).set_index("channel")

    def error_frame(self) -> pd.DataFrame:
        """E(t) of every channel and parameter, one column each."""
        columns = {"time_s": self.times}
        for channel, comparisons in self.channels.items():
            for parameter, comparison in comparisons.items():
                columns[f"{channel}.{parameter.value}"] = comparison.error
        return pd.DataFrame(columns)


def _compare_series(x: np.ndarray, y: np.ndarray, parameter: Parameter) -> ParameterComparison:
    error = percentage_error(x, y, parameter)
    if np.array_equal(x, y):
        r = 1.0
    else:
        try:
            r = correlation(x, y)
        except UndefinedCorrelationError:
            r = None
    return ParameterComparison(error=error, r=r)


def _channels(dataset) -> Dict[str, pd.DataFrame]:
    channels = {"aggregate": dataset.aggregate}
    channels.update(dataset.per_appliance)
    return channels


def compare_datasets(reference, model) -> ComparisonReport:
    """Percentage error and correlation of i_rms, p, q and pf for the
    aggregate and every appliance."""
    ref_channels = _channels(reference)
    model_channels = _channels(model)
    missing = sorted(set(ref_channels) - set(model_channels))
    extra = sorted(set(model_channels) - set(ref_channels))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing in model: {', '.join(missing)}")
        if extra:
            parts.append(f"missing in reference: {', '.join(extra)}")
        raise InvalidInputError(f"channel mismatch ({'; '.join(parts)})")

    ref_times = reference.aggregate["time_s"].to_numpy()
    model_times = model.aggregate["time_s"].to_numpy()
    if ref_times.size != model_times.size:
        raise InvalidInputError(
            f"sample counts differ: {ref_times.size} reference vs {model_times.size} model"
        )
    if not np.allclose(ref_times, model_times, rtol=0.0, atol=1e-6):
        raise InvalidInputError("timestamps of reference and model are not aligned")

    channels = {}
    for name, ref_frame in ref_channels.items():
        model_frame = model_channels[name]
        channels[name] = {
            parameter: _compare_series(
                ref_frame[parameter.column].to_numpy(),
                model_frame[parameter.column].to_numpy(),
                parameter,
            )
            for parameter in Parameter
        }
    return ComparisonReport(times=ref_times, channels=channels)


def steady_mask(
    times: Sequence[float], events: Iterable[GroundTruthEvent], settle: float = SETTLE_TIME
) -> np.ndarray:
    """False for ticks within `settle` seconds after any ground-truth event."""
    times = np.asarray(times, dtype=float)
    mask = np.ones(times.shape, dtype=bool)
    for event in events:
        mask &= ~((times >= event.time) & (times < event.time + settle))
    return mask


def segment_statistics(
    dataset,
    channel: str,
    t_start: float,
    t_end: float,
    steady: bool = False,
) -> Dict[Parameter, StateStatistics]:
    """Mean±std of every parameter over the ticks with t_start <= t <= t_end.

    steady drops the ticks right after ground-truth events.
    """
    frame = dataset.channel(channel)
    times = frame["time_s"].to_numpy()
    if times.size == 0 or t_start > t_end or t_start < 0 or t_end > times[-1] + 1e-9:
        raise InvalidInputError(
            f"interval [{t_start}, {t_end}] outside the dataset "
            f"[0, {times[-1] if times.size else 0}]"
        )
    selected = (times >= t_start) & (times <= t_end)
    if steady:
        selected &= steady_mask(times, dataset.events)
    return {
        parameter: state_statistics(frame[parameter.column].to_numpy()[selected], parameter)
        for parameter in Parameter
    }
