import json
import math

import pytest

from qpc_monitor import cli
from qpc_monitor.config import parse_config
from qpc_monitor.errors import CapacityExceeded, SchemaError
from qpc_monitor.output import read_rows


def test_minimal_config_defaults():
    cfg = parse_config('{"omega0": 1, "d1": 32, "init": "left"}')
    assert cfg.params.epsilon == 0.0
    assert cfg.tol == 1e-10 and cfg.tail_epsilon == 1e-12
    assert cfg.solver == "ode" and cfg.init.value == "left"


def test_config_units():
    cfg = parse_config('{"omega0": 2, "d1": 16, "epsilon": 0.5, "t_end": 3}')
    assert cfg.params.d1 == 32 and cfg.params.epsilon == 1.0
    assert cfg.t_end == 1.5
    assert cfg.to_dict()["d1"] == 16


@pytest.mark.parametrize("text, path", [
    ('{"d1": -1}', "d1"),
    ('{"d1": 1, "colour": "red"}', "colour"),
    ('{"scenario": {"kind": "observation", "speed": 1}}', "scenario.speed"),
    ('{"init": "middle"}', "init"),
    ('{"t_samples": 1.5}', "t_samples"),
])
def test_schema_errors(text, path):
    with pytest.raises(SchemaError) as err:
        parse_config(text)
    assert err.value.path == path
    assert str(err.value).startswith(path)


def test_invalid_json():
    with pytest.raises(SchemaError):
        parse_config("{d1: 3")


def _run(tmp_path, *argv):
    return cli.run_command([*argv, "--out", str(tmp_path)])


def test_figure_five(tmp_path, capsys):
    assert _run(tmp_path, "figure", "5", "--d1", "32", "--t-max", "1.0") == 0
    rows = read_rows(tmp_path / "figure_5.csv")
    last = [r for r in rows if r[3] == "P_n:ode" and r[0] == 1.0]
    probs = [r[2] for r in last]
    assert probs.index(max(probs)) == 0
    assert abs(max(range(5, len(probs)), key=probs.__getitem__) - 32) <= 2


def test_check_passes(tmp_path, capsys):
    assert cli.run_command(["--check", "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["max_deviation"] < 1e-6


def test_scenario_observation_is_flat(tmp_path, capsys):
    code = _run(tmp_path, "scenario", "--kind", "observation",
                "--thresholds", "4,16,64")
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["label"] == "observation"


def test_csv_format(tmp_path):
    assert _run(tmp_path, "evolve", "--samples", "3") == 0
    raw = (tmp_path / "evolve.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "t,n,value,source"
    t, n, value, source = lines[1].split(",")
    assert n == "" and "." in value
    assert len(value.split("e")[0].replace(".", "").lstrip("-")) >= 12


def test_manifest_contents(tmp_path):
    assert _run(tmp_path, "pn", "--times", "0.5,1", "--seed", "3") == 0
    m = json.loads((tmp_path / "pn.manifest.json").read_text())
    assert m["seed"] == 3 and m["version"]
    assert m["config"]["tol"] == 1e-10
    assert m["runtime_seconds"] >= 0


@pytest.mark.parametrize("argv", [
    ["evolve"],
    ["evolve", "--resolved", "--init", "ground"],
    ["pn", "--solver", "spectral"],
    ["pn", "--solver", "closed_form", "--init", "ground"],
    ["spectral", "--num-k", "8"],
    ["detector", "--t1", "0.3", "--n1", "9"],
    ["scenario", "--kind", "spontaneous", "--t0", "0", "--trajectories", "200"],
    ["figure", "6", "--seed", "9"],
])
def test_replay_is_byte_identical(tmp_path, argv):
    first, second = tmp_path / "a", tmp_path / "b"
    assert cli.run_command([*argv, "--out", str(first)]) == 0
    manifest = next(first.glob("*.manifest.json"))
    assert cli.run_command(["replay", str(manifest), "--out", str(second)]) == 0
    name = manifest.name.replace(".manifest.json", ".csv")
    assert (first / name).read_bytes() == (second / name).read_bytes()


def test_exit_codes(tmp_path, monkeypatch, capsys):
    assert _run(tmp_path, "evolve", "--d1", "-1") == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"d1": 1, "typo": 2}')
    assert _run(tmp_path, "evolve", "--config", str(bad)) == 1
    assert "typo" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exit_info:
        cli.run_command(["evolve", "--bogus"])
    assert exit_info.value.code == 1
    assert _run(tmp_path, "evolve", "--solver", "closed_form", "--init", "right") == 1

    def boom(cfg, options):
        raise CapacityExceeded("too many electrons")

    monkeypatch.setitem(cli.RUNNERS, "pn", boom)
    assert _run(tmp_path, "pn") == 2
    assert "too many electrons" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"d1": 4, "t_end": 2, "t_samples": 3}')
    assert _run(tmp_path, "evolve", "--config", str(cfg), "--d1", "8") == 0
    m = json.loads((tmp_path / "evolve.manifest.json").read_text())
    assert m["config"]["d1"] == 8 and m["config"]["t_end"] == 2
    rows = read_rows(tmp_path / "evolve.csv")
    assert math.isclose(max(r[0] for r in rows), 2.0)
