import math

import numpy as np
import pytest

import src.metering as mt
from src.errors import InvalidInputError, MeasurementUnavailableError, WindowAlignmentError

from .helpers import FS, sine


def test_rms_of_sine():
    assert mt.rms(sine(235.0)) == pytest.approx(235.0, rel=1e-12)


def test_rms_of_zero_and_constant():
    assert mt.rms(mt.Waveform(FS, np.zeros(200))) == 0.0
    assert mt.rms(mt.Waveform(FS, np.full(200, -10.0))) == pytest.approx(10.0)


def test_rms_of_empty_waveform_raises():
    with pytest.raises(InvalidInputError):
        mt.rms(mt.Waveform(FS, np.empty(0)))


def test_lagging_current_record():
    u = sine(235.0)
    i = sine(5.0, phase=-math.pi / 6)
    rec = mt.compute_record(u, i)
    assert rec.v_rms == pytest.approx(235.0, rel=1e-6)
    assert rec.i_rms == pytest.approx(5.0, rel=1e-6)
    assert rec.p == pytest.approx(235.0 * 5.0 * math.cos(math.pi / 6), rel=1e-6)
    assert rec.q == pytest.approx(235.0 * 5.0 * math.sin(math.pi / 6), rel=1e-6)
    assert rec.s_va == pytest.approx(1175.0, rel=1e-6)
    assert rec.pf == pytest.approx(0.8660, abs=1e-4)
    assert rec.freq == pytest.approx(50.0, abs=0.01)
    assert rec.p == pytest.approx(1017.58, abs=0.01)
    assert rec.q == pytest.approx(587.50, abs=0.01)


def test_leading_current_has_negative_q():
    rec = mt.compute_record(sine(235.0), sine(5.0, phase=math.pi / 6))
    assert rec.q == pytest.approx(-587.5, rel=1e-6)
    assert mt.lead_lag_sign(sine(235.0), sine(5.0, phase=math.pi / 6)) is mt.LeadLagSign.LEAD


def test_resistive_load():
    u = sine(235.0)
    i = mt.Waveform(FS, u.samples / 55.225)
    rec = mt.compute_record(u, i)
    assert rec.p == pytest.approx(1000.0, rel=1e-9)
    assert rec.q == pytest.approx(0.0, abs=1e-3)
    assert rec.pf == pytest.approx(1.0, abs=1e-12)


def test_zero_current_record():
    u = sine(235.0)
    rec = mt.compute_record(u, mt.Waveform(FS, np.zeros(len(u))))
    assert rec.i_rms == 0.0
    assert rec.p == 0.0
    assert rec.q == 0.0
    assert rec.pf == 0.0
    assert mt.lead_lag_sign(u, mt.Waveform(FS, np.zeros(len(u)))) is mt.LeadLagSign.LAG


def test_explicit_sign_overrides_detection():
    rec = mt.compute_record(sine(235.0), sine(5.0, phase=-math.pi / 6), sign=mt.LeadLagSign.LEAD)
    assert rec.q < 0


def test_record_invariants_hold_for_random_loads():
    rng = np.random.default_rng(11)
    u = sine(235.0, cycles=4)
    for _ in range(20):
        i = sine(rng.uniform(0.01, 20.0), phase=rng.uniform(-math.pi / 2, math.pi / 2), cycles=4)
        rec = mt.compute_record(u, i)
        assert rec.s_va**2 >= rec.p**2 - 1e-6
        assert -1.0 <= rec.pf <= 1.0
        assert rec.p**2 + rec.q**2 == pytest.approx(rec.s_va**2, rel=1e-9)


def test_scaling_current_scales_powers():
    u = sine(235.0)
    i = sine(3.0, phase=-0.4)
    base = mt.compute_record(u, i)
    scaled = mt.compute_record(u, mt.Waveform(FS, 2.5 * i.samples))
    assert scaled.p == pytest.approx(2.5 * base.p, rel=1e-9)
    assert scaled.q == pytest.approx(2.5 * base.q, rel=1e-9)
    assert scaled.pf == pytest.approx(base.pf, rel=1e-9)


def test_mismatched_lengths_raise():
    with pytest.raises(InvalidInputError):
        mt.compute_record(sine(235.0, cycles=2), sine(1.0, cycles=3))


def test_partial_cycle_window_raises():
    with pytest.raises(WindowAlignmentError):
        mt.compute_record(sine(235.0, cycles=1.5), sine(1.0, cycles=1.5))


def test_frequency_of_clean_sine():
    assert mt.measure_frequency(sine(235.0, cycles=5)) == pytest.approx(50.0, abs=0.01)


def test_frequency_with_amplitude_noise():
    u = sine(235.0, cycles=10)
    noisy = u.samples * (1.0 + 0.01 * np.random.default_rng(0).standard_normal(len(u)))
    assert mt.measure_frequency(mt.Waveform(FS, noisy)) == pytest.approx(50.0, abs=0.05)


def test_frequency_of_dc_raises():
    with pytest.raises(MeasurementUnavailableError):
        mt.measure_frequency(mt.Waveform(FS, np.full(1000, 5.0)))


def test_zero_crossings_ignore_chatter():
    u = sine(235.0, cycles=3).samples.copy()
    # a small wiggle just after the first crossing must not count twice
    u[201:204] = [1e-3, -1e-3, 1e-3]
    crossings = mt.zero_crossings(u)
    assert crossings.size == 3


def test_assp_window_ends_on_last_crossing():
    u = sine(235.0, cycles=4).samples
    start, stop, freq = mt.assp_window(u[:700], FS)
    assert (start, stop) == (200, 600)
    assert freq == pytest.approx(50.0, abs=1e-6)


def test_assp_stream_steady_load():
    u = sine(235.0, cycles=50)
    i = mt.Waveform(FS, u.samples / 55.225)
    records = mt.assp_stream(u, i)
    assert len(records) == 20
    assert records[0].t == pytest.approx(0.05)
    assert records[-1].t == pytest.approx(1.0)
    for rec in records:
        assert rec.p == pytest.approx(records[0].p, rel=1e-9)
        assert rec.v_rms == pytest.approx(records[0].v_rms, rel=1e-9)


def test_assp_stream_step_change():
    u = sine(235.0, cycles=50)
    t = u.times
    i = mt.Waveform(FS, np.where(t < 0.5, u.samples / 55.225, u.samples / 110.45))
    records = mt.assp_stream(u, i)
    for rec in records:
        if rec.t <= 0.5 + 1e-9:
            assert rec.p == pytest.approx(1000.0, rel=1e-6)
        elif rec.t >= 0.55 - 1e-9:
            assert rec.p == pytest.approx(500.0, rel=1e-6)


def test_assp_stream_zero_current():
    u = sine(235.0, cycles=50)
    records = mt.assp_stream(u, mt.Waveform(FS, np.zeros(len(u))))
    assert len(records) == 20
    assert all(rec.i_rms == 0.0 and rec.p == 0.0 for rec in records)


def test_assp_stream_rejects_undersampling():
    u = sine(235.0, cycles=50, fs=1000)
    with pytest.raises(InvalidInputError):
        mt.assp_stream(u, mt.Waveform(1000, np.zeros(len(u))))


def test_meter_channels_matches_compute_record():
    u = sine(235.0)
    currents = np.vstack((sine(2.0, phase=-0.3).samples, sine(1.0, phase=0.2).samples))
    rows = mt.meter_channels(u.samples, currents, FS, 0.04, 50.0)
    assert rows.shape == (2, len(mt.RECORD_COLUMNS))
    for row, samples in zip(rows, currents):
        rec = mt.compute_record(u, mt.Waveform(FS, samples), freq=50.0, t=0.04)
        np.testing.assert_allclose(row, rec.as_row(), rtol=1e-9, atol=1e-9)


def test_records_frame_columns():
    rec = mt.compute_record(sine(235.0), sine(1.0))
    frame = mt.records_frame([rec, rec])
    assert list(frame.columns) == list(mt.RECORD_COLUMNS)
    assert len(frame) == 2
