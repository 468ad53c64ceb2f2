import json
import math
import re
from pathlib import Path
import xml.etree.ElementTree as ET

import pytest

from nashflow.cli import main
from nashflow.scenario import (BUILTINS, ScenarioError, load_scenario, scenario_from_dict,
                               scenario_to_dict)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_scenario(tmp_path, doc, name="s.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# ------------------------------------------------------------------ scenarios

def test_load_cournot3():
    s = load_scenario("cournot3")
    assert s.game.n == 3
    assert [p.lower for p in s.game.players] == [0.0] * 3
    assert [p.upper for p in s.game.players] == [100.0] * 3
    assert [let.name for let in s.game.lets] == ["p"]


def test_load_pollution():
    s = load_scenario("pollution")
    assert s.game.n == 3 and [let.name for let in s.game.lets] == ["tax"]
    assert s.rule().alpha == 0.5


@pytest.mark.parametrize("name", BUILTINS)
def test_builtin_round_trip(name, tmp_path):
    s = load_scenario(name)
    path = write_scenario(tmp_path, scenario_to_dict(s))
    assert load_scenario(path) == s


def test_empty_players(tmp_path):
    with pytest.raises(ScenarioError, match="n must be ≥ 1"):
        load_scenario(write_scenario(tmp_path, {"name": "x", "players": []}))


def test_unknown_keys_rejected():
    doc = scenario_to_dict(load_scenario("pollution"))
    doc["colour"] = "red"
    doc["players"][0]["cost"] = "0"
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert "unknown key 'colour' in scenario" in err.value.problems
    assert "unknown key 'cost' in players[0]" in err.value.problems


def test_validation_defects_all_listed():
    doc = {"name": "bad", "players": [{"payoff": "q4 + z"}], "lets": [{"name": "p", "expr": "1"},
                                                                    {"name": "p", "expr": "2"}]}
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert "duplicate let p" in err.value.problems
    assert "unbound variable q4 in payoff of player 1" in err.value.problems
    assert "unbound variable z in payoff of player 1" in err.value.problems


def test_null_upper_is_unbounded():
    s = scenario_from_dict({"name": "u", "players": [{"payoff": "q1", "upper": None}]})
    assert s.game.players[0].upper == math.inf
    assert scenario_to_dict(s)["players"][0]["upper"] is None


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(str(tmp_path / "nope.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(ScenarioError, match="malformed JSON"):
        load_scenario(str(bad))


def test_bad_defaults_rejected():
    with pytest.raises(ScenarioError):
        scenario_from_dict({"name": "d", "players": [{"payoff": "q1"}], "defaults": {"alpha": 2}})


def test_flag_precedence():
    s = load_scenario("pollution")
    assert s.rule().alpha == 0.5
    assert s.rule(alpha=1.0).alpha == 1.0
    assert s.stop().max_steps == 10_000
    assert s.stop(max_steps=7).max_steps == 7


# ------------------------------------------------------------------ commands

def test_run_pollution_damped(capsys):
    code, out, _ = run(capsys, "run", "pollution", "--initial", "10,100,50", "--alpha", "0.5")
    report = json.loads(out)
    assert code == 0
    assert report["outcome"]["kind"] == "converged"
    assert abs(sum(report["outcome"]["profile"]) - 200) <= 1e-6
    assert list(report) == ["scenario", "rule", "stop", "initial", "outcome", "certificate",
                            "trajectory", "wall_time_s"]


def test_run_pollution_cycle_exit_code(capsys):
    code, out, _ = run(capsys, "run", "pollution", "--initial", "10,100,50", "--alpha", "1")
    assert code == 10
    assert json.loads(out)["outcome"]["period"] == 2


def test_run_at_fixed_point(capsys):
    code, out, _ = run(capsys, "run", "cournot3", "--initial", "6.25,6.25,6.25")
    assert code == 0
    assert json.loads(out)["outcome"] == {"kind": "converged", "profile": [6.25] * 3, "steps": 0}


def test_run_max_steps_exit_code(capsys):
    code, _, _ = run(capsys, "run", "cournot3", "--steps", "2")
    assert code == 12


def test_run_divergence_exit_code(capsys, tmp_path):
    path = write_scenario(tmp_path, {"name": "grow", "players": [
        {"payoff": "q1", "upper": None, "best_response": "2*q1 + 1"}]})
    code, out, _ = run(capsys, "run", path, "--initial", "1")
    assert code == 11
    assert json.loads(out)["certificate"] is None


def test_run_evaluation_error_exit_code(capsys, tmp_path):
    path = write_scenario(tmp_path, {"name": "bad", "players": [
        {"payoff": "q1", "upper": 10, "best_response": "1/(q1 - 2)"}]})
    code, _, err = run(capsys, "run", path, "--initial", "2.5")
    assert code == 3
    assert "step 2" in err


def test_run_bad_profile(capsys):
    code, _, err = run(capsys, "run", "pollution", "--initial", "1,2")
    assert code == 1 and "profile" in err


def test_run_writes_files(capsys, tmp_path):
    out = tmp_path / "out"
    code, _, _ = run(capsys, "run", "cournot3", "--out", str(out), "--plot")
    assert code == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "step,q1,q2,q3,Q,p"
    assert lines[1] == "0,0.0,5.0,10.0,15.0,88.5"
    report = json.loads((out / "report.json").read_text())
    assert report["trajectory"] == str(out / "trajectory.csv")
    svg = ET.parse(out / "trajectory.svg").getroot()
    polylines = svg.findall(".//{http://www.w3.org/2000/svg}polyline")
    assert sorted(p.get("data-series") for p in polylines) == ["Q", "p", "q1", "q2", "q3"]
    for p in polylines:
        for pair in p.get("points").split():
            assert all(math.isfinite(float(v)) for v in pair.split(","))


def test_outputs_byte_identical(capsys, tmp_path):
    for k in (1, 2):
        run(capsys, "run", "pollution", "--out", str(tmp_path / f"r{k}"), "--plot")
        run(capsys, "enumerate", "pollution", "--step", "50", "--out", str(tmp_path / f"e{k}"))
        run(capsys, "basin", "pollution", "--grid", "0,100;0,100;50", "--out", str(tmp_path / f"b{k}"))
    for d, name in [("r", "trajectory.csv"), ("r", "trajectory.svg"), ("e", "accepted.csv"),
                    ("e", "clusters.json"), ("b", "basin.csv"), ("b", "equilibria.json")]:
        assert (tmp_path / f"{d}1" / name).read_bytes() == (tmp_path / f"{d}2" / name).read_bytes()
    r1, r2 = (json.loads((tmp_path / f"r{k}" / "report.json").read_text()) for k in (1, 2))
    r1.pop("wall_time_s"), r2.pop("wall_time_s")
    r1.pop("trajectory"), r2.pop("trajectory")
    assert r1 == r2


def test_verify_pollution(capsys):
    code, out, _ = run(capsys, "verify", "pollution", "--profile", "50,75,75")
    cert = json.loads(out)
    assert code == 0
    assert cert["fixed_point_residual"] <= 1e-6 and cert["epsilon_nash_residual"] <= 1e-6
    _, out, _ = run(capsys, "verify", "pollution", "--profile", "0,0,0")
    assert json.loads(out)["fixed_point_residual"] == 200.0


def test_verify_cournot_warns(capsys):
    code, out, err = run(capsys, "verify", "cournot3", "--profile", "6.25,6.25,6.25")
    cert = json.loads(out)
    assert cert["fixed_point_residual"] <= 1e-9
    assert cert["epsilon_nash_residual"] > 1000
    assert "warning" in err


def test_enumerate_pollution(capsys, tmp_path):
    code, out, _ = run(capsys, "enumerate", "pollution", "--step", "25", "--upper", "250",
                       "--out", str(tmp_path))
    summary = json.loads(out)
    assert code == 0
    assert summary["accepted"] == 45 and len(summary["clusters"]) == 1
    rows = (tmp_path / "accepted.csv").read_text().splitlines()
    assert rows[0] == "q1,q2,q3,gain,cluster"
    assert len(rows) == 46


def test_enumerate_concave(capsys):
    _, out, _ = run(capsys, "enumerate", "cournot3-concave", "--step", "2.5")
    (c,) = json.loads(out)["clusters"]
    assert c["representative"] == [37.5, 37.5, 37.5]


def test_enumerate_infinite_bounds(capsys, tmp_path):
    path = write_scenario(tmp_path, {"name": "u", "players": [{"payoff": "-q1^2", "upper": None}]})
    code, _, err = run(capsys, "enumerate", path, "--step", "1")
    assert code == 1 and "finite bounds required" in err


def test_basin_pollution_csv(capsys):
    code, out, _ = run(capsys, "basin", "pollution", "--grid", "0,50,100,150;0,50,100,150;50",
                       "--alpha", "0.5")
    rows = out.splitlines()
    assert code == 0
    assert rows[0] == "init_q1,init_q2,init_q3,label,limit_q1,limit_q2,limit_q3"
    assert len(rows) == 17
    assert all(r.split(",")[3].startswith("eq") for r in rows[1:])


def test_basin_cournot_single_cluster(capsys, tmp_path):
    code, out, _ = run(capsys, "basin", "cournot3", "--grid", "0:100:5", "--out", str(tmp_path))
    summary = json.loads(out)
    assert summary["points"] == 125 and summary["labels"] == {"eq0": 125}


def test_basin_empty_grid(capsys):
    code, _, err = run(capsys, "basin", "cournot3", "--grid", "")
    assert code == 1 and "empty grid" in err


def test_br_command(capsys):
    code, out, _ = run(capsys, "br", "pollution", "--profile", "10,100,50")
    assert json.loads(out)["best_response"] == [50.0, 140.0, 90.0]


def test_list_scenarios(capsys):
    code, out, _ = run(capsys, "list-scenarios")
    assert [line.split("\t")[0] for line in out.splitlines()] == list(BUILTINS)


def test_readme_scenario_example_runs(tmp_path, capsys):
    readme = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    block = re.search(r"```json\n(.*?)```", readme, re.S).group(1)
    path = tmp_path / "duopoly.json"
    path.write_text(block)
    assert main(["run", str(path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert all(abs(x - 120 / 7) < 1e-6 for x in report["outcome"]["profile"])
    assert report["certificate"]["epsilon_nash_residual"] < 1e-6
