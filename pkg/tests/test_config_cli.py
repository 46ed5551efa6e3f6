from __future__ import annotations

import json

import pytest

from energybounds.cli import main
from energybounds.config import ConfigError, bundled_configs, load, load_raw, parse, validate

BASE = """
name = "tiny"

[model]
kind = "heisenberg"
L = 4
W = 1.0

[sector]
kind = "spin-z"
n = 2

[[states]]
kind = "ground"

[[measurements]]
method = "gs-opt"
k = {k}

[time]
T = 5.0
points = 11
"""


def write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def problems_for(tmp_path, text):
    return validate(load_raw(write(tmp_path, text)))


@pytest.mark.parametrize("name", sorted(bundled_configs()))
def test_bundled_configs_validate(name):
    raw = load_raw(name)
    assert validate(raw) == []
    parse(raw)


def test_expected_bundled_set():
    assert set(bundled_configs()) == {
        "coarse_8level", "qubit_xbasis", "heisenberg_small_W0", "heisenberg_small_W05", "heisenberg_small_W10",
        "heisenberg_large", "ising_large_W0", "ising_large_W8", "xy_large", "pxp_large"}


def test_k_not_dividing_L(tmp_path):
    problems = problems_for(tmp_path, BASE.format(k=3))
    assert any("k=3 does not divide L=4" in p for p in problems)


def test_incompatible_sector(tmp_path):
    text = BASE.format(k=2).replace('kind = "heisenberg"', 'kind = "ising"')
    assert any("incompatible sector" in p for p in problems_for(tmp_path, text))


def test_unknown_keys_and_aggregation(tmp_path):
    text = BASE.format(k=3).replace("W = 1.0", "W = 1.0\ndisorder = 2").replace("points = 11", "point = 11")
    problems = problems_for(tmp_path, text)
    assert "model.disorder: unknown key" in problems
    assert "time.point: unknown key" in problems
    assert any("does not divide" in p for p in problems)
    with pytest.raises(ConfigError):
        parse(load_raw(write(tmp_path, text)))


def test_field_level_messages(tmp_path):
    text = BASE.format(k=2).replace("points = 11", "points = 0").replace("W = 1.0", "W = -2.0")
    problems = problems_for(tmp_path, text)
    assert any(p.startswith("time.points") for p in problems)
    assert any(p.startswith("model.W") for p in problems)


def test_non_conserved_needs_single_time(tmp_path):
    text = BASE.format(k=2) + "\n[run]\nconserved = false\n"
    assert any("single measurement time" in p for p in problems_for(tmp_path, text))


def test_seed_override():
    cfg = load("heisenberg_small_W10").with_seeds({"disorder": 5, "optimizer": 2})
    assert cfg.model.seed == 5 and cfg.optimizer.seed == 2 and cfg.seeds["haar"] == 0


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", "coarse_8level"]) == 0
    assert main(["validate", str(write(tmp_path, BASE.format(k=3)))]) == 1
    assert "does not divide" in capsys.readouterr().err
    assert main(["validate", "no_such_config"]) == 1


def test_cli_run_coarse_8level(tmp_path, capsys):
    assert main(["run", "coarse_8level", "--output-dir", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "coarse_8level.summary.json").read_text())
    rec = doc["records"][0]
    assert rec["lin"] == [2.25, 3.5]
    assert abs(rec["tight"][0] - 2.5) < 1e-3 and abs(rec["tight"][1] - 3.1) < 1e-3
    assert rec["nested"] and rec["contains_true"]
    assert doc["provenance"]["seeds"] == {"disorder": 0, "haar": 0, "optimizer": 0}
    rows = (tmp_path / "coarse_8level.bounds.tsv").read_text().splitlines()
    assert rows[0] == "state\tset\tl\tE_l\ta_max\tb_min"
    assert len(rows) == 1 + 8
    _, _, l, e, a_max, b_min = rows[3].split("\t")
    assert (l, e, float(a_max)) == ("2", "2", 0.0)
    assert float(b_min) == pytest.approx(0.5, abs=1e-12)


def test_cli_run_qubit(tmp_path):
    assert main(["run", "qubit_xbasis", "--output-dir", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "qubit_xbasis.summary.json").read_text())["records"][0]
    assert rec["Q1"] == pytest.approx(100.0, abs=1e-9)


def test_cli_run_heisenberg_small(tmp_path):
    assert main(["run", "heisenberg_small_W10", "--output-dir", str(tmp_path), "--threads", "2"]) == 0
    doc = json.loads((tmp_path / "heisenberg_small_W10.summary.json").read_text())
    assert {r["state"] for r in doc["records"]} == {"G", "C", "H"}
    for rec in doc["records"]:
        assert rec["nested"] and rec["contains_true"]
        lo, hi = rec["tight"]
        assert rec["lin"][0] <= lo + 1e-6 and hi <= rec["lin"][1] + 1e-6
    assert len(doc["provenance"]["disorder"]) == 6


def test_cli_threads_env_and_seed_override(tmp_path, monkeypatch):
    monkeypatch.setenv("ENERGYBOUNDS_THREADS", "2")
    path = write(tmp_path, BASE.format(k=2))
    out = tmp_path / "out"
    assert main(["run", str(path), "--output-dir", str(out), "--seed-override", "disorder=9"]) == 0
    doc = json.loads((out / "tiny.summary.json").read_text())
    assert doc["provenance"]["seeds"]["disorder"] == 9
    with pytest.raises(SystemExit):
        main(["run", str(path), "--seed-override", "colour=3"])


def test_cli_runtime_error_exit_2(tmp_path, capsys):
    text = BASE.format(k=2).replace('kind = "ground"', 'kind = "amplitudes"\nreal = [1.0, 0.0]')
    assert main(["run", str(write(tmp_path, text)), "--output-dir", str(tmp_path)]) == 2
    assert "amplitudes" in capsys.readouterr().err


def test_cli_list(capsys):
    assert main(["list"]) == 0
    assert "coarse_8level" in capsys.readouterr().out
