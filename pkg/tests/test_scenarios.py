"""Scenario bundles: the built-in library and the JSON file format."""

from __future__ import annotations

import json

import numpy as np
import pytest

from formation_ppc.errors import ScenarioError
from formation_ppc.scenarios import (
    BUILTIN_NAMES,
    FORMAT_VERSION,
    builtin_scenario,
    load_scenario,
    scenario_from_dict,
)


def test_builtin_names():
    assert BUILTIN_NAMES == (
        "example1",
        "fig2left",
        "fig2right",
        "graphA",
        "graphB",
        "graphC",
    )


def test_unknown_builtin_lists_choices():
    with pytest.raises(ScenarioError, match="graphC"):
        builtin_scenario("graphD")


def test_robot_scenarios_differ_only_in_roles():
    a = builtin_scenario("graphA")
    b = builtin_scenario("graphB")
    assert a.graph.edges == b.graph.edges
    assert a.graph.leader_ids == (2, 3, 7, 8, 9)
    assert b.graph.leader_ids == (5, 6, 7, 8, 9)
    assert a.formation == b.formation
    assert a.ppc == b.ppc
    assert a.sim == b.sim


def test_robot_scenario_parameters():
    b = builtin_scenario("graphB")
    assert b.graph.n == 11 and b.graph.m == 11
    assert b.formation.dimension == 2
    settings = b.ppc.default
    assert (settings.rho0, settings.rho_inf, settings.rate) == (15.1, 0.1, 1.0)
    assert settings.gain == 100.0
    assert b.ppc.overrides == ()
    assert (b.sim.dt, b.sim.horizon, b.sim.record_stride) == (8e-6, 10.0, 125)
    # robots launch from the origin, far targets still inside the funnels
    assert not np.any(b.initial_array)
    assert b.initial_array.shape == (11, 2)


def test_platoon_scenario_parameters():
    c = builtin_scenario("graphC")
    assert c.graph.n == 9 and c.graph.m == 8
    assert c.graph.leader_ids == (3, 4, 7, 9)
    assert c.formation.dimension == 1
    settings = c.ppc.default
    assert (settings.rho0, settings.rho_inf, settings.rate, settings.gain) == (
        20.1, 0.1, 1.0, 1.0,
    )
    assert (c.sim.dt, c.sim.horizon, c.sim.record_stride) == (1e-3, 10.0, 1)
    starts = dict(c.initial_positions)
    assert starts[1] == (0.0,) and starts[9] == (250.0,)
    # consecutive vehicles sit 30 apart in the target formation
    pdes = dict(c.formation.displacements)
    assert all(vec == (30.0,) for vec in pdes.values())


def test_decomposition_demo_graphs_are_leaderless():
    for name in ("example1", "fig2left", "fig2right"):
        sc = builtin_scenario(name)
        assert sc.graph.leader_ids == ()
        assert sc.sim == type(sc.sim)()


def test_json_round_trip():
    for name in BUILTIN_NAMES:
        sc = builtin_scenario(name)
        data = json.loads(json.dumps(sc.to_json_dict()))
        again = scenario_from_dict(data)
        assert again == sc


def test_load_scenario_accepts_name_and_path(tmp_path):
    by_name = load_scenario("graphC")
    path = tmp_path / "custom.json"
    data = by_name.to_json_dict()
    data["name"] = "custom"
    path.write_text(json.dumps(data))
    from_file = load_scenario(path)
    assert from_file.name == "custom"
    assert from_file.graph == by_name.graph
    with pytest.raises(ScenarioError, match="neither"):
        load_scenario(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario(bad)


def test_format_version_checked():
    data = builtin_scenario("example1").to_json_dict()
    assert data["format_version"] == FORMAT_VERSION == 1
    data["format_version"] = 2
    with pytest.raises(ScenarioError, match="format_version"):
        scenario_from_dict(data)
    del data["format_version"]
    with pytest.raises(ScenarioError):
        scenario_from_dict(data)


def test_missing_keys_rejected():
    data = builtin_scenario("example1").to_json_dict()
    del data["ppc"]
    with pytest.raises(ScenarioError, match="ppc"):
        scenario_from_dict(data)
    with pytest.raises(ScenarioError):
        scenario_from_dict([1, 2, 3])


def test_position_errors():
    data = builtin_scenario("example1").to_json_dict()
    data["initial_positions"]["99"] = [0.0]
    with pytest.raises(ScenarioError, match="unknown nodes"):
        scenario_from_dict(data)

    data = builtin_scenario("example1").to_json_dict()
    del data["initial_positions"]["3"]
    with pytest.raises(ScenarioError, match="missing \\[3\\]"):
        scenario_from_dict(data)

    data = builtin_scenario("example1").to_json_dict()
    data["initial_positions"]["3"] = [0.0, 0.0]  # wrong dimension
    with pytest.raises(ScenarioError, match="components"):
        scenario_from_dict(data)

    data = builtin_scenario("example1").to_json_dict()
    data["initial_positions"] = [0.0]
    with pytest.raises(ScenarioError, match="object"):
        scenario_from_dict(data)


def test_initial_array_is_cached_and_ordered():
    sc = builtin_scenario("graphC")
    arr = sc.initial_array
    assert arr is sc.initial_array
    assert arr.shape == (9, 1)
    assert list(arr[:, 0]) == [0.0, 20.0, 60.0, 105.0, 125.0, 145.0, 185.0, 205.0, 250.0]
