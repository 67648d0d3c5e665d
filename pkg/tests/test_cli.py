import csv
import json
from pathlib import Path

import pytest

from lipsums import cli

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_bundled_scenarios_validate(path):
    res = cli.validate(json.loads(path.read_text()))
    assert res["ok"], res["errors"]


def test_missing_seed_defaults_with_warning():
    res = cli.validate({"command": "estimate-type", "space": "l2^4", "n": 4})
    assert res["ok"] and res["warnings"] == ["seed: missing, defaulted to 0"]


def test_bad_exponent_reports_path():
    res = cli.validate({"command": "estimate-type", "seed": 0,
                        "parameters": {"space": {"p": 0.5, "dim": 3}, "n": 2}})
    assert not res["ok"]
    assert res["errors"][0]["path"] == "parameters.space"
    assert "p must be ≥ 1" in res["errors"][0]["message"]


def test_exact_capacity_rejected():
    res = cli.validate({"command": "estimate-type", "seed": 0, "space": "l1^30",
                        "noise": "rademacher-exact", "n": 30})
    assert not res["ok"] and res["errors"][0]["message"].startswith("capacity:")


@pytest.mark.parametrize("scenario,path", [
    ({"seed": 0}, "command"),
    ({"command": "nope"}, "command"),
    ({"command": "estimate-type", "seed": 0, "n": 2}, "parameters.space"),
    ({"command": "estimate-type", "seed": 0, "space": "l2^2", "n": 0}, "parameters.n"),
    ({"command": "estimate-type", "seed": 0, "space": "l2^2", "n": 2, "colour": 1},
     "parameters.colour"),
    ({"command": "growth-curve", "seed": 0, "space_family": "inf", "n": [2],
      "search": {"restart": 3}}, "parameters.search"),
    ({"command": "estimate-type", "seed": -1, "space": "l2^2", "n": 2}, "seed"),
])
def test_schema_errors(scenario, path):
    res = cli.validate(scenario)
    assert not res["ok"]
    assert res["errors"][0]["path"] == path


def test_validate_never_runs(monkeypatch):
    monkeypatch.setattr(cli, "_dispatch", lambda *a: pytest.fail("estimator executed"))
    assert cli.validate({"command": "verify-constructions"})["ok"]


def test_report_layout():
    rep = cli.run({"command": "estimate-type", "seed": 3, "space": "l2^3", "n": 3,
                   "search": {"restarts": 2, "iters": 20, "eval_samples": 10_000}})
    assert rep["schema"] == "1"
    assert rep["environment"]["seed"] == 3 and rep["environment"]["workers"] == 1
    params = rep["scenario"]["parameters"]
    assert params["space"] == {"kind": "lp", "p": 2.0, "dim": 3}
    assert params["search"]["samples_per_eval"] == 4096
    assert "seconds" in rep["timing"]
    assert abs(rep["results"]["lower_bound"] - 1) < 0.05


def test_results_identical_across_workers():
    sc = {"command": "estimate-cotype", "seed": 5, "space": "l3^3", "n": 3,
          "search": {"restarts": 2, "iters": 20, "eval_samples": 20_000}}
    a, b = cli.run(sc, workers=1), cli.run(sc, workers=4)
    assert cli.results_bytes(a) == cli.results_bytes(b)


def test_main_writes_report_and_csv(tmp_path):
    sc = _write(tmp_path, {"command": "growth-curve", "seed": 0, "constant": "type2",
                           "space_family": "l_1", "n": [2, 3], "noise": "rademacher",
                           "search": {"restarts": 2, "iters": 10}})
    out = tmp_path / "out"
    assert cli.main(["--scenario", sc, "--out", str(out), "--workers", "2"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["scenario"]["parameters"]["space_family"] == 1.0
    with (out / "growth_curve.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert [r["n"] for r in rows] == ["2", "3"]
    assert float(rows[0]["lower_bound"]) == pytest.approx(2 ** 0.5, abs=1e-12)


def test_set_and_seed_overrides(tmp_path, capsys):
    sc = _write(tmp_path, {"command": "estimate-type", "space": "l2^2", "n": 2})
    code = cli.main(["--scenario", sc, "--seed", "9", "--set", "search.restarts=1",
                     "--set", "search.iters=5", "--set", "search.eval_samples=2000",
                     "--set", "noise=rademacher"])
    assert code == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["environment"]["seed"] == 9
    assert rep["scenario"]["parameters"]["search"]["restarts"] == 1
    assert rep["scenario"]["parameters"]["noise"] == {"family": "rademacher"}


def test_exit_codes(tmp_path, monkeypatch):
    ok = _write(tmp_path, {"command": "estimate-type", "seed": 0, "space": "l2^2", "n": 2,
                           "search": {"restarts": 1, "iters": 5, "eval_samples": 1000}})
    bad = _write(tmp_path, {"command": "estimate-type", "seed": 0, "space": "l0.5^2", "n": 2},
                 "bad.json")
    cap = _write(tmp_path, {"command": "estimate-type", "seed": 0, "space": "l1^2", "n": 30,
                            "noise": "rademacher-exact"}, "cap.json")
    assert cli.main(["--scenario", ok, "--validate"]) == cli.EXIT_OK
    assert cli.main(["--scenario", bad]) == cli.EXIT_USAGE
    assert cli.main(["--scenario", cap]) == cli.EXIT_CAPACITY
    assert cli.main(["--scenario", cap, "--validate"]) == cli.EXIT_CAPACITY
    assert cli.main(["--scenario", str(tmp_path / "missing.json")]) == cli.EXIT_USAGE
    assert cli.main(["--bogus"]) == cli.EXIT_USAGE
    assert cli.main(["--scenario", ok, "--set", "noequals"]) == cli.EXIT_USAGE

    def boom(*a):
        raise RuntimeError("bug")

    monkeypatch.setattr(cli, "_dispatch", boom)
    assert cli.main(["--scenario", ok]) == cli.EXIT_INTERNAL


def test_construction_failure_is_capacity(tmp_path):
    sc = _write(tmp_path, {"command": "counterexample-search", "seed": 0, "X": "linf^4",
                           "Y": "l1^3", "n": 3, "eps": 0.01,
                           "search": {"restarts": 1, "iters": 5, "eval_samples": 1000}})
    assert cli.main(["--scenario", sc]) == cli.EXIT_CAPACITY


def test_space_shorthand():
    assert cli.parse_space("linf^8").to_json() == {"kind": "lp", "p": "inf", "dim": 8}
    assert cli.parse_space("l_1.5^3").p == 1.5
    with pytest.raises(cli.InputError):
        cli.parse_space("banach")
