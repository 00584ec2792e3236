from __future__ import annotations

import json

import pytest

from parabolic.cli import main


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def record(tmp_path, name):
    return json.loads((tmp_path / f"{name}.json").read_text())


def test_expand_prints_signed_string(tmp_path, capsys):
    assert run(tmp_path, "expand", "--x", "-3/5") == 0
    assert capsys.readouterr().out.strip() == "(2:-)(3:-)"
    rec = record(tmp_path, "expand")
    assert rec["ok"] and rec["config"]["options"]["x"] == "-3/5"


@pytest.mark.parametrize("bad", ["0.6", "1e-3", "abc", "1/0"])
def test_expand_rejects_inexact(tmp_path, bad):
    assert run(tmp_path, "expand", "--x", bad) == 2


def test_usage_errors(tmp_path):
    assert main([]) == 2
    assert run(tmp_path, "no-such-command") == 2
    assert run(tmp_path, "fatou-check", "--tilt", "0.3", "--samples", "3") == 2


def test_mcf_check(tmp_path):
    assert run(tmp_path, "mcf-check", "--trials", "200", "--geometry-samples", "50") == 0
    assert record(tmp_path, "mcf_check")["ok"]


def test_valley_tower(tmp_path):
    assert run(tmp_path, "valley-tower", "--depth", "10") == 0
    tower = json.loads((tmp_path / "tower.json").read_text())
    assert len(tower) == 10
    # a stream with no big entries is not valley-type
    assert run(tmp_path, "valley-tower", "--stream", "(2:+)(2:+)(2:+)") == 2


def test_series_and_fatou(tmp_path):
    assert run(tmp_path, "series", "--omega", "(2:+)", "--order", "6") == 0
    assert run(tmp_path, "fatou-check", "--samples", "10", "--tilt", "0.2") == 0
    lines = (tmp_path / "fatou_samples.csv").read_text().splitlines()
    assert len(lines) == 11
    assert record(tmp_path, "fatou_check")["ok"]


def test_horn_sample(tmp_path):
    assert run(tmp_path, "horn-sample", "--n", "16", "--critical") == 0
    assert (tmp_path / "horn_samples.csv").exists()
    assert record(tmp_path, "horn_sample")["ok"]


def test_renders_are_deterministic(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("PARABOLIC_THREADS", "1")
    assert run(a, "basin-render", "--res", "48") == 0
    monkeypatch.setenv("PARABOLIC_THREADS", "2")
    assert run(b, "basin-render", "--res", "48") == 0
    ppm = sorted(p.name for p in a.iterdir() if p.suffix == ".ppm")
    assert ppm
    for name in ppm:
        assert (a / name).read_bytes() == (b / name).read_bytes()
        side = name[:-4] + ".json"
        assert (a / side).read_bytes() == (b / side).read_bytes()


def test_renorm_render(tmp_path):
    assert run(tmp_path, "renorm-render", "--res", "64") == 0
    assert record(tmp_path, "renorm_render")["ok"]


def test_lavaurs(tmp_path):
    assert run(tmp_path, "lavaurs", "--ks", "100,400") == 0
    assert (tmp_path / "lavaurs.csv").read_text().count("\n") == 3


def test_gate(tmp_path):
    assert run(tmp_path, "gate", "--alpha", "1/100", "--starts", "2") == 0
    rows = (tmp_path / "gate.jsonl").read_text().splitlines()
    assert len(rows) == 2 and all(json.loads(r)["in_window"] for r in rows)
    assert run(tmp_path, "gate", "--alpha", "-1/100", "--omega", "(3:-)", "--starts", "2") == 0


def test_gate_budget_exhaustion(tmp_path):
    assert run(tmp_path, "gate", "--alpha", "1/100", "--budget", "10") == 3
    err = json.loads((tmp_path / "error.json").read_text())
    assert err["error"] and "diagnostics" in err


def test_skew_step(tmp_path):
    assert run(tmp_path, "skew-step", "--omega", "(2:+)", "--x", "3/7") == 0
    assert run(tmp_path, "skew-step", "--alpha", "0.01,0.004", "--numeric") == 0
    assert record(tmp_path, "skew_step")["ok"]
