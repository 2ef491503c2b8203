import math

import numpy as np
import pandas as pd
import pytest

import src.analysis as an
import src.appliances as ap
import src.panel as pn
import src.scenario as sc
from src.errors import InvalidInputError, UndefinedCorrelationError
from src.metering import RECORD_COLUMNS


def _frame(p, q=None, times=None):
    p = np.asarray(p, dtype=float)
    n = p.size
    q = np.zeros(n) if q is None else np.asarray(q, dtype=float)
    s = np.hypot(p, q)
    data = {
        "time_s": np.arange(1, n + 1) * 0.05 if times is None else times,
        "v_rms": np.full(n, 235.0),
        "i_rms": s / 235.0,
        "p_w": p,
        "q_var": q,
        "s_va": s,
        "pf": np.divide(p, s, out=np.zeros(n), where=s > 0),
        "freq_hz": np.full(n, 50.0),
    }
    return pd.DataFrame(data, columns=list(RECORD_COLUMNS))


def _dataset(aggregate, **per_appliance):
    return pn.Dataset(aggregate=aggregate, per_appliance=per_appliance, events=[], meta={})


def test_state_statistics_small_sample():
    stats = an.state_statistics([1.0, 2.0, 3.0], an.Parameter.P)
    assert stats.n == 3
    assert stats.mean == 2.0
    assert stats.std == 1.0
    assert str(stats) == "2.00±1.00"


def test_state_statistics_constant():
    stats = an.state_statistics([5.0] * 10, an.Parameter.I_RMS)
    assert stats.mean == 5.0
    assert stats.std == 0.0


def test_state_statistics_matches_two_pass_formula():
    data = np.random.default_rng(4).normal(1097.25, 17.67, 500)
    stats = an.state_statistics(data, an.Parameter.P)
    mean = sum(data) / len(data)
    std = math.sqrt(sum((x - mean) ** 2 for x in data) / (len(data) - 1))
    assert stats.mean == pytest.approx(mean, rel=1e-12)
    assert stats.std == pytest.approx(std, rel=1e-9)


def test_state_statistics_needs_two_samples():
    with pytest.raises(InvalidInputError):
        an.state_statistics([1.0], an.Parameter.P)


def test_percentage_error_identical_series():
    x = [4.732, 0.0, 100.0]
    assert np.all(an.percentage_error(x, x, an.Parameter.I_RMS) == 0.0)


def test_percentage_error_below_threshold():
    assert an.percentage_error([0.0004], [0.0009], an.Parameter.I_RMS)[0] == 0.0


def test_percentage_error_regular_value():
    error = an.percentage_error([4.732], [4.800], an.Parameter.I_RMS)[0]
    assert error == pytest.approx(1.437, abs=1e-3)


def test_percentage_error_small_reference_large_difference():
    error = an.percentage_error([0.0], [10.0], an.Parameter.P)[0]
    assert error == pytest.approx(10.0 / 2.0 * 100.0)


def test_percentage_error_is_scale_covariant():
    x = np.array([120.0, 250.0, 900.0])
    y = np.array([118.0, 260.0, 905.0])
    np.testing.assert_allclose(
        an.percentage_error(3 * x, 3 * y, an.Parameter.P),
        an.percentage_error(x, y, an.Parameter.P),
    )


def test_percentage_error_length_mismatch():
    with pytest.raises(InvalidInputError):
        an.percentage_error([1.0, 2.0], [1.0], an.Parameter.P)


def test_correlation_extremes():
    x = [1.0, 2.0, 3.0, 4.0]
    assert an.correlation(x, x) == pytest.approx(1.0)
    assert an.correlation(x, [-v for v in x]) == pytest.approx(-1.0)


def test_correlation_known_value():
    assert 100 * an.correlation([1.0, 2.0, 3.0], [1.0, 2.0, 4.0]) == pytest.approx(98.198, abs=1e-3)


def test_correlation_of_constant_series_is_undefined():
    with pytest.raises(UndefinedCorrelationError):
        an.correlation([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_correlation_is_affine_invariant():
    rng = np.random.default_rng(9)
    x = rng.normal(size=50)
    y = x + rng.normal(scale=0.3, size=50)
    assert an.correlation(x, 4.0 * y + 7.0) == pytest.approx(an.correlation(x, y), rel=1e-12)


def test_self_comparison():
    d = _dataset(_frame([10.0, 50.0, 80.0], [1.0, 3.0, 2.0]), lamp=_frame([0.0, 40.0, 70.0]))
    report = an.compare_datasets(d, d)
    summary = report.summary()
    assert list(summary.index) == [pn.AGGREGATE, "lamp"]
    assert summary.loc[pn.AGGREGATE, "r_p_pct"] == 100.0
    assert summary.loc["lamp", "e_max_p_pct"] == 0.0
    errors = report.error_frame()
    assert "lamp.q" in errors.columns
    assert np.all(errors.drop(columns="time_s").to_numpy() == 0.0)


def test_constant_but_different_series_has_no_correlation():
    reference = _dataset(_frame([10.0, 50.0, 80.0]))
    model = _dataset(_frame([12.0, 49.0, 81.0]))
    report = an.compare_datasets(reference, model)
    # q is zero in the reference and the model, pf is 1 in both
    assert report.channels[pn.AGGREGATE][an.Parameter.Q].r == 1.0
    model_q = _dataset(_frame([12.0, 49.0, 81.0], [5.0, 5.0, 5.0]))
    report = an.compare_datasets(reference, model_q)
    assert report.channels[pn.AGGREGATE][an.Parameter.Q].r is None
    assert math.isnan(report.summary().loc[pn.AGGREGATE, "r_q_pct"])


def test_channel_mismatch_names_the_channel():
    reference = _dataset(_frame([1.0, 2.0]), lamp=_frame([1.0, 2.0]))
    model = _dataset(_frame([1.0, 2.0]), kettle=_frame([1.0, 2.0]))
    with pytest.raises(InvalidInputError, match="lamp"):
        an.compare_datasets(reference, model)


def test_sample_count_mismatch():
    with pytest.raises(InvalidInputError, match="sample counts"):
        an.compare_datasets(_dataset(_frame([1.0, 2.0])), _dataset(_frame([1.0, 2.0, 3.0])))


def test_steady_mask_skips_settling_ticks():
    times = np.arange(1, 201) * 0.05
    events = [sc.GroundTruthEvent(2.0, "lamp", "off", "on")]
    mask = an.steady_mask(times, events)
    assert mask[times < 2.0].all()
    assert not mask[(times >= 2.0) & (times < 7.0)].any()
    assert mask[times >= 7.0].all()


def _air_conditioner_run(noise_std=0.0, seed=0, duration=20.0):
    params = ap.FsmTableParams(states=(ap.FsmState("cool_1", 1097.25, 210.88),))
    spec = ap.ApplianceSpec("ac", ap.ApplianceKind.FSM_TABLE, params)
    scenario = sc.Scenario(
        duration=duration,
        appliances=(spec,),
        schedule=(sc.ScheduledAction(0.0, "ac", ap.ActionKind.TURN_ON),),
    )
    return pn.simulate(scenario, sc.SourceParams(noise_std=noise_std, seed=seed), wave_rate=2000)


def test_calibrated_state_statistics():
    d = _air_conditioner_run(noise_std=2.0, seed=7)
    stats = an.segment_statistics(d, "ac", 1.0, 20.0, steady=True)
    assert stats[an.Parameter.P].mean == pytest.approx(1097.25, abs=17.67)
    assert stats[an.Parameter.PF].mean * 100 == pytest.approx(98.20, abs=0.5)
    assert stats[an.Parameter.Q].mean == pytest.approx(210.88, abs=5.0)
    assert stats[an.Parameter.P].std > 0


def test_segment_statistics_rejects_interval_outside_dataset():
    d = _air_conditioner_run(duration=2.0)
    with pytest.raises(InvalidInputError):
        an.segment_statistics(d, pn.AGGREGATE, 1.0, 5.0)
    with pytest.raises(InvalidInputError):
        an.segment_statistics(d, pn.AGGREGATE, 1.0, 1.0)


def test_noisy_runs_correlate_closely():
    heater = ap.ApplianceSpec("heater", ap.ApplianceKind.ON_OFF_HEATER, ap.HeaterParams(1000.0))
    schedule = tuple(
        sc.ScheduledAction(
            float(t), "heater", ap.ActionKind.TURN_ON if k % 2 == 0 else ap.ActionKind.TURN_OFF
        )
        for k, t in enumerate(range(1, 20, 2))
    )
    scenario = sc.Scenario(duration=20.0, appliances=(heater,), schedule=schedule)
    first = pn.simulate(scenario, sc.SourceParams(noise_std=1.0, seed=1), wave_rate=2000)
    second = pn.simulate(scenario, sc.SourceParams(noise_std=1.0, seed=2), wave_rate=2000)
    r = an.compare_datasets(first, second).channels["heater"][an.Parameter.P].r
    assert 0.95 < r < 1.0
