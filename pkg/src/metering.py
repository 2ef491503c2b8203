"""Cycle-synchronous power metering.

Turns instantaneous voltage/current waveforms into electrical records the way
a precision power analyzer does: true RMS values, active power as the mean of
u(n)·i(n), apparent power V·I, signed reactive power and power factor, all
averaged over whole source periods. Frequency comes from rising zero
crossings of the voltage.

Example:
>>> import src.metering as mt
>>> u = mt.Waveform(10000, samples_u)
>>> i = mt.Waveform(10000, samples_i)
>>> record = mt.compute_record(u, i)
>>> records = mt.assp_stream(u, i, report_rate=20.0)
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import hilbert

from .errors import (
    InvalidInputError,
    MeasurementUnavailableError,
    WindowAlignmentError,
)

DEFAULT_WAVE_RATE = 10000
DEFAULT_REPORT_RATE = 20.0
MIN_SAMPLES_PER_CYCLE = 40
ASSP_CYCLES = 2

# re-arm level of the zero-crossing detector, fraction of the window peak
CROSSING_HYSTERESIS = 0.05
# tolerated deviation of a window from a whole number of cycles
CYCLE_TOLERANCE = 0.05
# quadrature correlations below this (relative to V·I) count as in phase
PHASE_TOLERANCE = 1e-9

RECORD_COLUMNS = ("time_s", "v_rms", "i_rms", "p_w", "q_var", "s_va", "pf", "freq_hz")


@dataclass(frozen=True)
class Waveform:
    """Fixed-rate buffer of instantaneous samples (volts or amperes).

    The samples are copied into a read-only float array.
    """

    sample_rate: int
    samples: np.ndarray = field(repr=False)
    start_time: float = 0.0

    def __post_init__(self):
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise InvalidInputError(
                f"sample_rate must be a positive integer, got {self.sample_rate}"
            )
        data = np.array(self.samples, dtype=float)
        if data.ndim != 1 or data.size == 0:
            raise InvalidInputError("waveform needs at least one sample")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("waveform samples must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "samples", data)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        """Length of the buffer in seconds."""
        return self.samples.size / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        """Sample instants in seconds from the simulation origin."""
        return self.start_time + np.arange(self.samples.size) / self.sample_rate

    def slice(self, start: int, stop: int) -> "Waveform":
        """Sub-buffer [start, stop) with its start time shifted accordingly."""
        return Waveform(
            self.sample_rate,
            self.samples[start:stop],
            self.start_time + start / self.sample_rate,
        )


class LeadLagSign(IntEnum):
    """Sign s of the reactive power: lead phase (-1) or lag phase (1)."""

    LEAD = -1
    LAG = 1


@dataclass(frozen=True)
class ElectricalRecord:
    """One report tick: (t, Vrms, Irms, P, Q, S, PF, f)."""

    t: float
    v_rms: float
    i_rms: float
    p: float
    q: float
    s_va: float
    pf: float
    freq: float

    def as_row(self) -> Tuple[float, ...]:
        """Values in RECORD_COLUMNS order."""
        return (
            self.t,
            self.v_rms,
            self.i_rms,
            self.p,
            self.q,
            self.s_va,
            self.pf,
            self.freq,
        )


def records_frame(records: Sequence[ElectricalRecord]) -> pd.DataFrame:
    """Stacks records into a DataFrame with the export column names."""
    return pd.DataFrame(
        [r.as_row() for r in records], columns=list(RECORD_COLUMNS), dtype=float
    )


def _check_pair(u: Waveform, i: Waveform):
    if u.sample_rate != i.sample_rate:
        raise InvalidInputError(
            f"sample rates differ: u at {u.sample_rate} Hz, i at {i.sample_rate} Hz"
        )
    if len(u) != len(i):
        raise InvalidInputError(
            f"waveform lengths differ: u has {len(u)} samples, i has {len(i)}"
        )


def rms(w: Waveform) -> float:
    """True RMS value, sqrt(AVG[x(n)^2])."""
    if len(w) == 0:
        raise InvalidInputError("rms of an empty waveform")
    return float(np.sqrt(np.mean(np.square(w.samples))))


def quadrature(u: np.ndarray) -> np.ndarray:
    """Hilbert transform of u (the 90°-shifted voltage reference).

    Exact for windows that span whole cycles.
    """
    return np.imag(hilbert(u))


def _signs_from_quadrature(
    currents: np.ndarray, quad: np.ndarray, v_rms: float, i_rms: np.ndarray
) -> np.ndarray:
    n = quad.size
    corr = currents @ quad
    floor = PHASE_TOLERANCE * n * v_rms * i_rms
    return np.where(corr < -floor, float(LeadLagSign.LEAD), float(LeadLagSign.LAG))


def lead_lag_sign(u: Waveform, i: Waveform) -> LeadLagSign:
    """+1 when the fundamental of i lags u (inductive), -1 when it leads.

    A zero current returns LAG by convention.
    """
    _check_pair(u, i)
    i_rms = rms(i)
    if i_rms == 0.0:
        return LeadLagSign.LAG
    sign = _signs_from_quadrature(
        i.samples[np.newaxis, :], quadrature(u.samples), rms(u), np.array([i_rms])
    )
    return LeadLagSign(int(sign[0]))


def zero_crossings(samples: np.ndarray) -> np.ndarray:
    """Fractional sample positions of rising zero crossings.

    A crossing lies between samples n and n+1 with x[n] <= 0 < x[n+1]. After a
    crossing the detector only re-arms once the signal drops below
    -CROSSING_HYSTERESIS times the window peak, so noise chatter around zero
    is counted once.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        return np.empty(0)
    peak = np.max(np.abs(x))
    if peak == 0.0:
        return np.empty(0)

    candidates = np.flatnonzero((x[:-1] <= 0.0) & (x[1:] > 0.0))
    if candidates.size == 0:
        return np.empty(0)
    below = np.cumsum(x <= -CROSSING_HYSTERESIS * peak)

    accepted = []
    last = None
    for n in candidates:
        if last is None:
            armed = x[0] <= 0.0 or below[n] > 0
        else:
            armed = below[n] > below[last]
        if armed:
            accepted.append(n)
            last = n

    idx = np.asarray(accepted)
    return idx + (-x[idx]) / (x[idx + 1] - x[idx])


def measure_frequency(u: Waveform) -> float:
    """Frequency from rising zero crossings of the voltage.

    (number of crossing intervals) / (time between first and last crossing),
    crossing instants linearly interpolated.
    """
    crossings = zero_crossings(u.samples)
    if crossings.size < 2:
        raise MeasurementUnavailableError(
            f"need at least 2 rising zero crossings, found {crossings.size}"
        )
    span = (crossings[-1] - crossings[0]) / u.sample_rate
    return float((crossings.size - 1) / span)


def _check_whole_cycles(n_samples: int, sample_rate: int, freq: float):
    cycles = n_samples * freq / sample_rate
    whole = round(cycles)
    if whole < 1 or abs(cycles - whole) > CYCLE_TOLERANCE:
        raise WindowAlignmentError(
            f"window of {n_samples} samples spans {cycles:.3f} cycles at {freq:.3f} Hz"
        )


def meter_channels(
    u: np.ndarray,
    currents: np.ndarray,
    sample_rate: int,
    t: float,
    freq: float,
) -> np.ndarray:
    """RMS values and powers for several currents sharing one whole-cycle voltage window.

    Parameters:
    ----------
    u: np.ndarray
        Voltage window, shape (n,).
    currents: np.ndarray
        Current windows, shape (k, n).
    sample_rate: int
        Samples per second.
    t: float
        Timestamp written into every row.
    freq: float
        Frequency written into every row, also used to check the window.

    Returns:
    -------
    np.ndarray
        Shape (k, 8) in RECORD_COLUMNS order.
    """
    currents = np.atleast_2d(currents)
    n = u.size
    if currents.shape[1] != n:
        raise InvalidInputError(
            f"current windows have {currents.shape[1]} samples, voltage has {n}"
        )
    _check_whole_cycles(n, sample_rate, freq)

    v_rms = float(np.sqrt(np.mean(np.square(u))))
    i_rms = np.sqrt(np.mean(np.square(currents), axis=1))
    p = currents @ u / n
    s_va = v_rms * i_rms
    q_mag = np.sqrt(np.maximum(s_va**2 - p**2, 0.0))
    signs = _signs_from_quadrature(currents, quadrature(u), v_rms, i_rms)
    pf = np.zeros_like(p)
    np.divide(p, s_va, out=pf, where=s_va > 0)

    out = np.empty((currents.shape[0], len(RECORD_COLUMNS)))
    out[:, 0] = t
    out[:, 1] = v_rms
    out[:, 2] = i_rms
    out[:, 3] = p
    out[:, 4] = signs * q_mag
    out[:, 5] = s_va
    out[:, 6] = np.clip(pf, -1.0, 1.0)
    out[:, 7] = freq
    return out


def compute_record(
    u: Waveform,
    i: Waveform,
    sign: Optional[LeadLagSign] = None,
    t: Optional[float] = None,
    freq: Optional[float] = None,
) -> ElectricalRecord:
    """Electrical record of one whole-cycle window.

    Parameters:
    ----------
    u, i: Waveform
        Voltage and current over the same window.
    sign: LeadLagSign, optional
        Sign of Q. Determined from the waveforms when omitted.
    t: float, optional
        Timestamp; defaults to the end of the window.
    freq: float, optional
        Known frequency; measured from u when omitted.
    """
    _check_pair(u, i)
    if freq is None:
        try:
            freq = measure_frequency(u)
        except MeasurementUnavailableError as error:
            raise WindowAlignmentError(
                f"cannot verify a whole-cycle window: {error}"
            ) from error
    if t is None:
        t = u.start_time + u.duration
    if sign is None:
        sign = lead_lag_sign(u, i)

    _check_whole_cycles(len(u), u.sample_rate, freq)
    v_rms = rms(u)
    i_rms = rms(i)
    p = float(np.mean(u.samples * i.samples))
    s_va = v_rms * i_rms
    q = int(sign) * float(np.sqrt(max(s_va**2 - p**2, 0.0)))
    pf = float(np.clip(p / s_va, -1.0, 1.0)) if s_va > 0 else 0.0
    return ElectricalRecord(
        t=float(t),
        v_rms=v_rms,
        i_rms=i_rms,
        p=p,
        q=q,
        s_va=s_va,
        pf=pf,
        freq=float(freq),
    )


def assp_window(
    u: np.ndarray, sample_rate: int, cycles: int = ASSP_CYCLES
) -> Tuple[int, int, float]:
    """Locates the whole-cycle window that ends a lookback buffer.

    The window ends at the last rising zero crossing of u and spans `cycles`
    periods, the period being the mean crossing spacing over the buffer.

    Returns:
    -------
    tuple
        (start, stop, freq): sample bounds [start, stop) and the frequency
        measured over the buffer.
    """
    crossings = zero_crossings(u)
    if crossings.size < 2:
        raise WindowAlignmentError(
            f"buffer of {u.size} samples holds {crossings.size} rising crossings"
        )
    period = (crossings[-1] - crossings[0]) / (crossings.size - 1)
    stop = int(round(crossings[-1]))
    start = stop - int(round(cycles * period))
    if start < 0:
        raise WindowAlignmentError(
            f"buffer of {u.size} samples is shorter than {cycles} cycles before "
            f"its last zero crossing"
        )
    return start, stop, float(sample_rate / period)


def assp_stream(
    u: Waveform,
    i: Waveform,
    report_rate: float = DEFAULT_REPORT_RATE,
    cycles: int = ASSP_CYCLES,
) -> List[ElectricalRecord]:
    """Average for the Synchronous Source Period at every report tick.

    Each tick reports compute_record over the last `cycles` whole mains
    cycles that end at or before the tick.
    """
    _check_pair(u, i)
    fs = u.sample_rate
    tick = fs / report_rate
    if abs(tick - round(tick)) > 1e-9:
        raise WindowAlignmentError(
            f"report rate {report_rate} Hz does not divide {fs} Hz into whole samples"
        )
    tick = int(round(tick))
    n_ticks = len(u) // tick
    if n_ticks == 0:
        raise WindowAlignmentError("waveform shorter than one report interval")

    f_est = measure_frequency(u)
    if fs < MIN_SAMPLES_PER_CYCLE * f_est:
        raise InvalidInputError(
            f"{fs} Hz gives fewer than {MIN_SAMPLES_PER_CYCLE} samples per cycle"
        )
    lookback = int(np.ceil(fs / f_est * (cycles + 2)))

    records = []
    for k in range(1, n_ticks + 1):
        end = k * tick
        lo = max(0, end - lookback)
        start, stop, freq = assp_window(u.samples[lo:end], fs, cycles)
        row = meter_channels(
            u.samples[lo + start : lo + stop],
            i.samples[lo + start : lo + stop],
            fs,
            u.start_time + end / fs,
            freq,
        )[0]
        records.append(ElectricalRecord(*row.tolist()))
    return records
