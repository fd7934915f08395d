"""Command-line interface: exit codes, payload shapes, canonical output."""

from __future__ import annotations

import json

import numpy as np
import pytest

from formation_ppc.cli import decomposition_to_dict, main
from formation_ppc.graphs import graph_to_dict
from formation_ppc.jsonio import canonical_dumps
from formation_ppc.scenarios import builtin_scenario
from formation_ppc.topology import complete_decomposition, flf_path, suggest_leaders

from conftest import star


def run_cli(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- canonical serializer ------------------------------------------------------


def test_canonical_dumps_rounds_and_sorts():
    assert canonical_dumps(1.0 / 3.0) == "0.333333333"
    assert canonical_dumps({"b": 1, "a": [1.5, 2]}) == '{"a":[1.5,2],"b":1}'
    assert canonical_dumps(np.array([1.0, 0.25])) == "[1.0,0.25]"
    assert canonical_dumps(np.float64(0.1)) == "0.1"
    with pytest.raises(ValueError):
        canonical_dumps(float("nan"))
    with pytest.raises(TypeError):
        canonical_dumps({1: "non-string key"})
    with pytest.raises(TypeError):
        canonical_dumps(object())


# -- check ---------------------------------------------------------------------


def test_check_default_runs_both_theorems(capsys):
    code, out, err = run_cli(capsys, "check", "graphB")
    assert code == 0 and err == ""
    payload = json.loads(out)
    assert set(payload) == {"theorem1", "theorem2"}
    assert payload["theorem1"]["verdict"] == "pass"
    assert payload["theorem2"]["verdict"] == "pass"
    # stdout is canonical JSON plus one newline
    assert out == canonical_dumps(payload) + "\n"


def test_check_failing_graph_exits_one(capsys):
    code, out, _ = run_cli(capsys, "check", "graphA")
    assert code == 1
    payload = json.loads(out)
    assert payload["theorem2"]["verdict"] == "fail"
    assert payload["theorem2"]["witness"] is not None


def test_check_single_flag_emits_bare_report(capsys):
    code, out, _ = run_cli(capsys, "check", "graphA", "--theorem2")
    assert code == 1
    payload = json.loads(out)
    assert set(payload) == {"verdict", "edges", "paths", "witness"}
    edge_rows = {row["edge"]: row for row in payload["edges"]}
    assert edge_rows[5] == {"edge": 5, "cycle_term": 0, "E_i": 5, "margin": 3}
    path_rows = {tuple(row["nodes"]): row for row in payload["paths"]}
    assert path_rows[(5, 2, 6)]["F_i"] == 4
    assert path_rows[(5, 3, 7, 6)]["bypass"] is True


def test_check_lemma_on_tree(capsys):
    code, out, _ = run_cli(capsys, "check", "graphC", "--lemma1")
    assert code == 0
    assert json.loads(out)["verdict"] == "pass"


def test_check_lemma_on_non_tree_is_an_error(capsys):
    code, out, err = run_cli(capsys, "check", "graphA", "--lemma1")
    assert code == 2
    assert out == ""
    assert err.startswith("error:") and "cycles" in err


# -- decompose -----------------------------------------------------------------


def test_decompose_edge_payload(capsys):
    code, out, _ = run_cli(capsys, "decompose", "fig2left", "--edge", "3")
    assert code == 0
    payload = json.loads(out)
    expected = decomposition_to_dict(
        complete_decomposition(builtin_scenario("fig2left").graph, 3)
    )
    assert payload == json.loads(canonical_dumps(expected))
    assert payload["anchor"] == {"edge": 3}
    assert payload["margin"] == -3
    assert len(payload["cycles"]) == 2


def test_decompose_path_payload(capsys):
    code, out, _ = run_cli(capsys, "decompose", "graphA", "--path", "5,2,6")
    assert code == 0
    payload = json.loads(out)
    graph = builtin_scenario("graphA").graph
    expected = decomposition_to_dict(
        complete_decomposition(graph, flf_path(graph, (5, 2, 6)))
    )
    assert payload == json.loads(canonical_dumps(expected))
    assert payload["anchor"] == {"path": [5, 2, 6]}
    assert payload["bypass"] is False
    assert "F_i" in payload and "E_i" not in payload


def test_decompose_rejects_garbled_path(capsys):
    code, _, err = run_cli(capsys, "decompose", "graphA", "--path", "5,x,6")
    assert code == 2
    assert "comma-separated" in err


# -- simulate ------------------------------------------------------------------


def test_simulate_zero_error_scenario(capsys, tmp_path):
    out_dir = tmp_path / "run"
    code, out, _ = run_cli(
        capsys, "simulate", "example1", "--out", str(out_dir), "--backend", "numpy"
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["violations"] == []
    assert summary["max_normalized_error"] == 0.0
    assert (out_dir / "summary.json").read_text() == out
    header = (out_dir / "trajectory.csv").read_text().splitlines()[0]
    assert header.split(",")[:3] == ["time", "p_1_0", "p_2_0"]


def test_simulate_platoon_records_violations(capsys, tmp_path):
    out_dir = tmp_path / "platoon"
    code, out, _ = run_cli(capsys, "simulate", "graphC", "--out", str(out_dir))
    assert code == 1
    summary = json.loads(out)
    assert len(summary["violations"]) >= 1
    assert min(v["time"] for v in summary["violations"]) == pytest.approx(
        3.426, abs=1e-9
    )
    table = np.loadtxt(out_dir / "trajectory.csv", delimiter=",", skiprows=1)
    assert table.shape[0] == 10001  # dt 1e-3 over horizon 10, stride 1


# -- suggest -------------------------------------------------------------------


def test_suggest_builtin(capsys):
    code, out, _ = run_cli(capsys, "suggest", "example1", "--max-leaders", "1")
    assert code == 0
    payload = json.loads(out)
    graph = builtin_scenario("example1").graph
    expected = [
        {"leaders": list(a)} for a in suggest_leaders(graph, 1)
    ]
    assert payload == {"assignments": expected}
    # the all-follower star fails, each singleton passes
    assert [a["leaders"] for a in payload["assignments"]] == [[1], [2], [3], [4], [5]]


def test_suggest_bare_graph_file(capsys, tmp_path):
    g = star(3)
    path = tmp_path / "graph.json"
    path.write_text(json.dumps(graph_to_dict(g)))
    code, out, _ = run_cli(capsys, "suggest", str(path), "--max-leaders", "1")
    assert code == 0
    payload = json.loads(out)
    assert payload["assignments"] == [
        {"leaders": list(a)} for a in suggest_leaders(g, 1)
    ]


def test_suggest_scenario_file(capsys, tmp_path):
    sc = builtin_scenario("graphA")
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(sc.to_json_dict()))
    code, out, _ = run_cli(capsys, "suggest", str(path), "--max-leaders", "0")
    assert code == 0
    assert json.loads(out) == {"assignments": []}


def test_suggest_missing_file(capsys, tmp_path):
    code, _, err = run_cli(
        capsys, "suggest", str(tmp_path / "nope.json"), "--max-leaders", "1"
    )
    assert code == 2
    assert err.startswith("error:")


# -- errors --------------------------------------------------------------------


def test_unknown_scenario_is_an_error(capsys):
    code, out, err = run_cli(capsys, "check", "graphD")
    assert code == 2
    assert out == ""
    assert err.startswith("error:") and "graphD" in err
