import math

import numpy as np

from src.metering import Waveform

FS = 10000
F_MAINS = 50.0
V_RMS = 235.0

def sine(
    rms_value: float = V_RMS,
    phase: float = 0.0,
    cycles: float = 2,
    fs: int = FS,
    freq: float = F_MAINS,
    start_time: float = 0.0,
) -> Waveform:
    """rms·√2·sin(ωt + phase) over a whole number of samples."""
    n = int(round(cycles * fs / freq))
    t = start_time + np.arange(n) / fs
    samples = math.sqrt(2.0) * rms_value * np.sin(2.0 * math.pi * freq * t + phase)
    return Waveform(fs, samples, start_time)


def write_scenario(tmp_path, text: str, name: str = "scenario.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path
