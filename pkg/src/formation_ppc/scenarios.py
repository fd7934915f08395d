"""Scenario bundles: graph + formation + funnels + integration settings.

A scenario file is a JSON object with format_version 1:

    {
      "format_version": 1,
      "name": "...",
      "graph": {"nodes": [{"id", "role"}], "edges": [{"id", "head", "tail"}]},
      "formation": {"dimension", "displacements", "anchors"?},
      "ppc": {"default": {"rho0", "rho_inf", "l", "gain"}, "edges": {...}},
      "sim": {"dt", "horizon", "integrator", "violation_policy"},
      "initial_positions": {"<node-id>": [..]}
    }

The built-in library holds the reference scenarios used across tests and the
explorer UI: two 11-robot formations that differ only in which nodes lead
(graphA fails the feasibility check, graphB passes), a 9-vehicle platoon
(graphC), the all-follower demonstration star (example1), and the two cycle
decomposition examples (fig2left, fig2right).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .errors import ScenarioError
from .funnels import FunnelSettings, PpcConfig
from .graphs import (
    FormationSpec,
    LeaderFollowerGraph,
    formation_from_dict,
    formation_to_dict,
    graph_from_dict,
    graph_to_dict,
    validate_formation,
)
from .simulate import SimConfig, positions_array

__all__ = [
    "Scenario",
    "BUILTIN_NAMES",
    "builtin_scenario",
    "load_scenario",
    "scenario_from_dict",
]

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Scenario:
    name: str
    graph: LeaderFollowerGraph
    formation: FormationSpec
    ppc: PpcConfig
    sim: SimConfig
    initial_positions: tuple[tuple[int, tuple[float, ...]], ...]

    def __post_init__(self) -> None:
        validate_formation(self.graph, self.formation)
        self.ppc.validate_edges(self.graph)
        object.__setattr__(
            self,
            "initial_positions",
            tuple(
                (int(i), tuple(float(x) for x in vec))
                for i, vec in self.initial_positions
            ),
        )
        covered = {i for i, _ in self.initial_positions}
        if covered != set(self.graph.node_ids):
            missing = sorted(set(self.graph.node_ids) - covered)
            extra = sorted(covered - set(self.graph.node_ids))
            raise ScenarioError(
                f"initial positions mismatch: missing {missing}, extra {extra}"
            )
        for node_id, vec in self.initial_positions:
            if len(vec) != self.formation.dimension:
                raise ScenarioError(
                    f"initial position for node {node_id} has {len(vec)} "
                    f"components, expected {self.formation.dimension}"
                )

    @cached_property
    def initial_array(self) -> np.ndarray:
        return positions_array(
            self.graph, dict(self.initial_positions), self.formation.dimension
        )

    def to_json_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "name": self.name,
            "graph": graph_to_dict(self.graph),
            "formation": formation_to_dict(self.formation),
            "ppc": self.ppc.to_json_dict(),
            "sim": self.sim.to_json_dict(),
            "initial_positions": {
                str(i): list(vec) for i, vec in self.initial_positions
            },
        }


def scenario_from_dict(data: object) -> Scenario:
    if not isinstance(data, Mapping):
        raise ScenarioError("scenario JSON must be an object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ScenarioError(
            f"unsupported scenario format_version {version!r}; expected "
            f"{FORMAT_VERSION}"
        )
    required = {"name", "graph", "formation", "ppc", "sim", "initial_positions"}
    missing = required - set(data)
    if missing:
        raise ScenarioError(f"scenario JSON missing keys {sorted(missing)}")
    graph = graph_from_dict(data["graph"])
    formation = formation_from_dict(data["formation"])
    ppc = PpcConfig.from_json_dict(data["ppc"])
    sim = SimConfig.from_json_dict(data["sim"])
    raw_positions = data["initial_positions"]
    if not isinstance(raw_positions, Mapping):
        raise ScenarioError("scenario 'initial_positions' must be an object")
    positions = tuple(
        (int(node_id), tuple(vec)) for node_id, vec in raw_positions.items()
    )
    # store positions in graph node order for stable round-trips
    by_id = dict(positions)
    unknown = set(by_id) - set(graph.node_ids)
    if unknown:
        raise ScenarioError(f"initial positions for unknown nodes {sorted(unknown)}")
    ordered = tuple(
        (i, by_id[i]) for i in graph.node_ids if i in by_id
    )
    return Scenario(
        name=str(data["name"]),
        graph=graph,
        formation=formation,
        ppc=ppc,
        sim=sim,
        initial_positions=ordered,
    )


def load_scenario(source: str | Path) -> Scenario:
    """Load a built-in scenario by name or a scenario file by path."""
    name = str(source)
    if name in BUILTIN_NAMES:
        return builtin_scenario(name)
    path = Path(source)
    if not path.exists():
        raise ScenarioError(
            f"{name!r} is neither a built-in scenario "
            f"({', '.join(BUILTIN_NAMES)}) nor an existing file"
        )
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc}") from None
    return scenario_from_dict(data)


# -- built-in library ---------------------------------------------------------


def _default_ppc(rho0: float, rho_inf: float, rate: float, gain: float) -> PpcConfig:
    return PpcConfig(default=FunnelSettings(rho0, rho_inf, rate, gain))


def _zero_positions(graph: LeaderFollowerGraph, dimension: int):
    return tuple((i, (0.0,) * dimension) for i in graph.node_ids)


def _example1() -> Scenario:
    """All-follower 4-edge star; the textbook infeasible tree."""
    graph = LeaderFollowerGraph(
        nodes=tuple((i, "follower") for i in (1, 2, 3, 4, 5)),
        edges=((1, 2, 1), (2, 1, 3), (3, 1, 4), (4, 1, 5)),
    )
    formation = FormationSpec.from_displacements(
        1, {e: (0.0,) for e in graph.edge_ids}
    )
    return Scenario(
        name="example1",
        graph=graph,
        formation=formation,
        ppc=_default_ppc(20.1, 0.1, 1.0, 1.0),
        sim=SimConfig(),
        initial_positions=_zero_positions(graph, 1),
    )


def _fig2left() -> Scenario:
    """Triangle and square sharing one edge; decomposition demo."""
    graph = LeaderFollowerGraph(
        nodes=tuple((i, "follower") for i in (1, 2, 3, 4, 5)),
        edges=(
            (1, 1, 2),
            (2, 2, 3),
            (3, 3, 1),
            (4, 1, 4),
            (5, 4, 5),
            (6, 5, 3),
        ),
    )
    formation = FormationSpec.from_displacements(
        1, {e: (0.0,) for e in graph.edge_ids}
    )
    return Scenario(
        name="fig2left",
        graph=graph,
        formation=formation,
        ppc=_default_ppc(20.1, 0.1, 1.0, 1.0),
        sim=SimConfig(),
        initial_positions=_zero_positions(graph, 1),
    )


def _fig2right() -> Scenario:
    """Two triangles sharing an edge plus two pendants; decomposition demo."""
    graph = LeaderFollowerGraph(
        nodes=tuple((i, "follower") for i in (1, 2, 3, 4, 5, 6)),
        edges=(
            (1, 2, 3),
            (2, 3, 6),
            (3, 2, 4),
            (4, 1, 2),
            (5, 3, 1),
            (6, 4, 1),
            (7, 1, 5),
        ),
    )
    formation = FormationSpec.from_displacements(
        1, {e: (0.0,) for e in graph.edge_ids}
    )
    return Scenario(
        name="fig2right",
        graph=graph,
        formation=formation,
        ppc=_default_ppc(20.1, 0.1, 1.0, 1.0),
        sim=SimConfig(),
        initial_positions=_zero_positions(graph, 1),
    )


_ROBOT_EDGES = (
    (1, 5, 3),
    (2, 5, 2),
    (3, 6, 2),
    (4, 7, 6),
    (5, 5, 4),
    (6, 8, 4),
    (7, 9, 8),
    (8, 5, 1),
    (9, 5, 10),
    (10, 5, 11),
    (11, 7, 3),
)

_ROBOT_ANCHORS = {
    1: (-9.8, 0.0),
    2: (0.0, 9.8),
    3: (9.8, 0.0),
    4: (0.0, -9.8),
    5: (0.0, 0.0),
    6: (9.8, 19.6),
    7: (19.6, 9.8),
    8: (9.8, -19.6),
    9: (19.6, -9.8),
    10: (-9.8, 9.8),
    11: (-9.8, -9.8),
}


def _robot_scenario(name: str, leaders: set[int]) -> Scenario:
    graph = LeaderFollowerGraph(
        nodes=tuple(
            (i, "leader" if i in leaders else "follower") for i in range(1, 12)
        ),
        edges=_ROBOT_EDGES,
    )
    formation = FormationSpec.from_anchors(2, graph, _ROBOT_ANCHORS)
    # gain 100 holds the hub edges inside their funnels once the shared
    # leader has to serve six of them; the loop then turns stiff near
    # rho_inf (closed-loop rate ~ 4 * gain * lambda_max(D_L^T D_L) /
    # rho_inf^2), which caps the stable RK4 step just above 1e-5.
    return Scenario(
        name=name,
        graph=graph,
        formation=formation,
        ppc=_default_ppc(15.1, 0.1, 1.0, 100.0),
        sim=SimConfig(dt=8e-6, horizon=10.0, record_stride=125),
        initial_positions=_zero_positions(graph, 2),
    )


def _graph_a() -> Scenario:
    """11-robot formation whose leader placement fails the feasibility check."""
    return _robot_scenario("graphA", leaders={2, 3, 7, 8, 9})


def _graph_b() -> Scenario:
    """Same structure as graphA with a passing leader placement."""
    return _robot_scenario("graphB", leaders={5, 6, 7, 8, 9})


def _graph_c() -> Scenario:
    """9-vehicle platoon on a line, 30 m spacing targets."""
    graph = LeaderFollowerGraph(
        nodes=tuple(
            (i, "leader" if i in (3, 4, 7, 9) else "follower")
            for i in range(1, 10)
        ),
        edges=tuple((k, k + 1, k) for k in range(1, 9)),
    )
    formation = FormationSpec.from_displacements(
        1, {e: (30.0,) for e in graph.edge_ids}
    )
    start = (0.0, 20.0, 60.0, 105.0, 125.0, 145.0, 185.0, 205.0, 250.0)
    return Scenario(
        name="graphC",
        graph=graph,
        formation=formation,
        ppc=_default_ppc(20.1, 0.1, 1.0, 1.0),
        sim=SimConfig(dt=1e-3, horizon=10.0),
        initial_positions=tuple(
            (i, (start[i - 1],)) for i in graph.node_ids
        ),
    )


_BUILTIN_FACTORIES: dict[str, Callable[[], Scenario]] = {
    "example1": _example1,
    "fig2left": _fig2left,
    "fig2right": _fig2right,
    "graphA": _graph_a,
    "graphB": _graph_b,
    "graphC": _graph_c,
}

BUILTIN_NAMES = tuple(_BUILTIN_FACTORIES)


def builtin_scenario(name: str) -> Scenario:
    try:
        factory = _BUILTIN_FACTORIES[name]
    except KeyError:
        raise ScenarioError(
            f"unknown built-in scenario {name!r}; available: "
            f"{', '.join(BUILTIN_NAMES)}"
        ) from None
    return factory()
