import json

import numpy as np
import pandas as pd
import pytest

import src.export as ex
import src.panel as pn
import src.scenario as sc
from src.cli import EXIT_ERROR, EXIT_IO_ERROR, EXIT_OK, main

from .helpers import write_scenario

HOUSE = """\
name = "small_house"
duration_s = 12.0

[source]
noise_std = 1.0
seed = 4

[[appliance]]
id = "lamp"
kind = "incandescent"

[appliance.params]
rated_power = 60.0

[[appliance]]
id = "kettle"
kind = "on_off_heater"

[appliance.params]
rated_power = 2000.0

[[action]]
t_s = 1.0
appliance = "lamp"
action = "turn_on"

[[action]]
t_s = 3.0
appliance = "kettle"
action = "turn_on"

[[action]]
t_s = 9.0
appliance = "kettle"
action = "turn_off"
"""


@pytest.fixture
def house(tmp_path):
    return write_scenario(tmp_path, HOUSE)


def _simulate(scenario_path, out, *extra):
    return main(
        ["simulate", "--scenario", str(scenario_path), "--out", str(out), "--wave-hz", "2000", *extra]
    )


def test_simulate_writes_dataset(house, tmp_path):
    out = tmp_path / "run"
    assert _simulate(house, out) == EXIT_OK
    for name in ("aggregate.csv", "appliance_lamp.csv", "appliance_kettle.csv", "events.jsonl", "meta.json"):
        assert (out / name).is_file()
    assert not (out / "source.csv").exists()
    aggregate = pd.read_csv(out / "aggregate.csv")
    assert len(aggregate) == 240
    lines = (out / "events.jsonl").read_text().splitlines()
    assert len(lines) == 3
    assert json.loads(lines[0]) == {
        "t_s": 1.0,
        "appliance": "lamp",
        "from": "off",
        "to": "on",
        "note": "turn_on",
        "warning": False,
    }
    meta = json.loads((out / "meta.json").read_text())
    assert meta["seed"] == 4
    assert meta["wave_rate_hz"] == 2000
    assert meta["scenario_hash"] == sc.scenario_hash(sc.load_scenario(house))


def test_written_dataset_reads_back(house, tmp_path):
    out = tmp_path / "run"
    assert _simulate(house, out, "--format", "aggregate_csv", "--format", "meta_json") == EXIT_OK
    loaded = ex.load_dataset(out)
    expected = pn.simulate(sc.load_scenario(house), wave_rate=2000)
    np.testing.assert_allclose(
        loaded.aggregate.to_numpy(), expected.aggregate.to_numpy(), rtol=0, atol=1e-6
    )
    assert loaded.per_appliance == {}
    assert loaded.events == []


def test_export_round_trip(house, tmp_path):
    d = pn.simulate(sc.load_scenario(house), wave_rate=2000)
    formats = set(ex.ExportFormat)
    ex.write_dataset(d, ex.ExportConfig(tmp_path / "all", formats, decimal_places=9))
    loaded = ex.load_dataset(tmp_path / "all")
    for name in ("lamp", "kettle"):
        np.testing.assert_allclose(
            loaded.per_appliance[name].to_numpy(), d.per_appliance[name].to_numpy(), atol=1e-8
        )
    assert loaded.events == d.events
    assert loaded.meta["decimal_places"] == 9
    np.testing.assert_allclose(loaded.loss_w, d.loss_w, atol=1e-6)
    assert pn.panel_power_identity(loaded).max_residual < 1e-5


def test_simulation_files_are_reproducible(house, tmp_path):
    assert _simulate(house, tmp_path / "a") == EXIT_OK
    assert _simulate(house, tmp_path / "b") == EXIT_OK
    for name in ("aggregate.csv", "events.jsonl", "meta.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_flag_changes_noise(house, tmp_path):
    assert _simulate(house, tmp_path / "a") == EXIT_OK
    assert _simulate(house, tmp_path / "b", "--seed", "5") == EXIT_OK
    a = pd.read_csv(tmp_path / "a" / "aggregate.csv")
    b = pd.read_csv(tmp_path / "b" / "aggregate.csv")
    assert not a["v_rms"].equals(b["v_rms"])
    assert json.loads((tmp_path / "b" / "meta.json").read_text())["seed"] == 5


def test_output_dir_from_environment(house, tmp_path, monkeypatch):
    monkeypatch.setenv(ex.OUTPUT_DIR_ENV, str(tmp_path / "env_out"))
    assert main(["simulate", "--scenario", str(house), "--wave-hz", "2000"]) == EXIT_OK
    assert (tmp_path / "env_out" / "aggregate.csv").is_file()


def test_missing_scenario_is_an_io_error(tmp_path):
    assert _simulate(tmp_path / "missing.toml", tmp_path / "run") == EXIT_IO_ERROR


def test_invalid_scenario_fails(tmp_path):
    path = write_scenario(tmp_path, HOUSE.replace("t_s = 9.0", "t_s = 90.0"))
    assert _simulate(path, tmp_path / "run") == EXIT_ERROR
    assert not (tmp_path / "run").exists()


def test_stats_prints_table(house, tmp_path, capsys):
    out = tmp_path / "run"
    assert _simulate(house, out) == EXIT_OK
    capsys.readouterr()
    csv_path = tmp_path / "stats.csv"
    code = main(
        ["stats", str(out), "--appliance", "kettle", "--interval", "4", "8.5", "--out", str(csv_path)]
    )
    assert code == EXIT_OK
    assert "mean±std" in capsys.readouterr().out
    stats = pd.read_csv(csv_path).set_index("parameter")
    assert stats.loc["p", "mean"] == pytest.approx(2000.0, rel=0.02)
    assert stats.loc["q", "mean"] == pytest.approx(0.0, abs=1.0)


def test_stats_on_single_tick_fails(house, tmp_path):
    out = tmp_path / "run"
    assert _simulate(house, out) == EXIT_OK
    assert main(["stats", str(out), "--interval", "5", "5"]) == EXIT_ERROR


def test_stats_on_missing_dataset(tmp_path):
    assert main(["stats", str(tmp_path / "nothing")]) == EXIT_IO_ERROR


def test_compare_with_itself(house, tmp_path):
    out = tmp_path / "run"
    assert _simulate(house, out) == EXIT_OK
    error_csv = tmp_path / "error.csv"
    assert main(["compare", str(out), str(out), "--error-csv", str(error_csv)]) == EXIT_OK
    errors = pd.read_csv(error_csv)
    assert len(errors) == 240
    assert "kettle.p" in errors.columns
    assert (errors.drop(columns="time_s").to_numpy() == 0.0).all()


def test_compare_mismatched_datasets_fails(house, tmp_path):
    assert _simulate(house, tmp_path / "a") == EXIT_OK
    lamp_only = write_scenario(
        tmp_path, HOUSE.split("[[appliance]]\nid = \"kettle\"")[0], name="lamp.toml"
    )
    assert _simulate(lamp_only, tmp_path / "b") == EXIT_OK
    assert main(["compare", str(tmp_path / "a"), str(tmp_path / "b")]) == EXIT_ERROR


def test_list_appliances(capsys):
    assert main(["list-appliances"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "refrigerator" in out
    assert "triac_dimmer" in out


def test_validate_bundled_scenario(capsys):
    assert main(["validate", "--scenario", "house_evening"]) == EXIT_OK
    assert "14 actions" in capsys.readouterr().out


@pytest.mark.slow
def test_house_evening_export(tmp_path):
    out = tmp_path / "house"
    assert main(["simulate", "--scenario", "house_evening", "--seed", "42", "--out", str(out)]) == EXIT_OK
    assert len(pd.read_csv(out / "aggregate.csv")) == 35400
    assert len((out / "events.jsonl").read_text().splitlines()) == 16
