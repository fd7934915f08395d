"""Cycle decompositions, follower-end cores, and feasibility checks.

This module answers the static design question: given a leader-follower
graph, can prescribed transient funnels on every edge error be enforced at
all? The checks work on worst-case decay margins. For an anchored edge or
follower-leader-follower path, a canonical set of cycles through the anchor
is selected; short cycles help (negative terms), long cycles saturate, and
leftover neighbor edges hurt. An anchor passes when its margin is <= 0.

Anchors and reports use edge ids and node ids, never matrix indices.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Union

from .errors import (
    EnumerationCapError,
    GraphError,
    TreeRequiredError,
    UnknownEdgeError,
)
from .graphs import (
    LeaderFollowerGraph,
    NodeRole,
    _induce,
    classify_edges,
    edge_neighbors,
    is_tree,
)

__all__ = [
    "Cycle",
    "FlfPath",
    "Decomposition",
    "FollowerEndCore",
    "EdgeCheck",
    "PathCheck",
    "CheckWitness",
    "ConditionReport",
    "cycles_through",
    "flf_path",
    "bare_edge_path",
    "path_neighborhood",
    "anchor_neighborhood",
    "enumerate_flf_paths",
    "complete_decomposition",
    "edge_condition_terms",
    "path_condition_terms",
    "worst_case_margin",
    "max_follower_end_subgraph",
    "check_tree_necessary",
    "check_necessary",
    "check_feasibility",
    "suggest_leaders",
]

# Hard caps keeping exhaustive searches at desk scale; exceeding one raises
# EnumerationCapError rather than hanging.
MAX_CYCLES_PER_ANCHOR = 50_000
MAX_FLF_PATHS = 100_000
SUBSET_BALL_CAP = 20
SUGGEST_NODE_CAP = 16


@dataclass(frozen=True)
class Cycle:
    """Simple cycle stored in canonical traversal order.

    edges[i] joins nodes[i] and nodes[(i+1) % len]; the rotation/direction is
    normalized so the edge-id tuple is lexicographically smallest.
    """

    edges: tuple[int, ...]
    nodes: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_set(self) -> frozenset[int]:
        return frozenset(self.edges)


def _canonical_cycle(nodes: list[int], edges: list[int]) -> Cycle:
    length = len(edges)
    rev_nodes = list(reversed(nodes))
    rev_edges = [edges[(length - 2 - i) % length] for i in range(length)]
    best: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    for seq_nodes, seq_edges in ((nodes, edges), (rev_nodes, rev_edges)):
        for start in range(length):
            cand_edges = tuple(seq_edges[(start + i) % length] for i in range(length))
            cand_nodes = tuple(seq_nodes[(start + i) % length] for i in range(length))
            if best is None or (cand_edges, cand_nodes) < best:
                best = (cand_edges, cand_nodes)
    assert best is not None
    return Cycle(edges=best[0], nodes=best[1])


@dataclass(frozen=True)
class FlfPath:
    """Simple path with follower endpoints and all-leader interior.

    The generalized one-edge form (both endpoints followers, no interior) is
    allowed only where a bare follower-follower edge is treated as a path.
    """

    nodes: tuple[int, ...]
    edges: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.edges)


Anchor = Union[int, FlfPath]


def flf_path(
    graph: LeaderFollowerGraph,
    node_seq: tuple[int, ...] | list[int],
    allow_bare_edge: bool = False,
) -> FlfPath:
    """Build and validate an FLF path from a node sequence."""
    nodes = tuple(int(i) for i in node_seq)
    if len(nodes) < 2:
        raise GraphError("a path needs at least two nodes")
    if len(set(nodes)) != len(nodes):
        raise GraphError(f"path nodes repeat: {nodes}")
    if len(nodes) == 2 and not allow_bare_edge:
        raise GraphError("a proper follower-leader-follower path needs interior nodes")
    edge_of: dict[frozenset[int], int] = {
        frozenset((h, t)): e for e, h, t in graph.edges
    }
    edges = []
    for a, b in zip(nodes, nodes[1:]):
        edge_id = edge_of.get(frozenset((a, b)))
        if edge_id is None:
            raise GraphError(f"nodes {a} and {b} are not adjacent")
        edges.append(edge_id)
    for endpoint in (nodes[0], nodes[-1]):
        if graph.role(endpoint) is not NodeRole.FOLLOWER:
            raise GraphError(f"path endpoint {endpoint} must be a follower")
    for interior in nodes[1:-1]:
        if graph.role(interior) is not NodeRole.LEADER:
            raise GraphError(f"path interior node {interior} must be a leader")
    if nodes[0] > nodes[-1]:
        nodes = tuple(reversed(nodes))
        edges = list(reversed(edges))
    return FlfPath(nodes=nodes, edges=tuple(edges))


def bare_edge_path(graph: LeaderFollowerGraph, edge_id: int) -> FlfPath:
    """A follower-follower edge viewed as a generalized (interior-free) path."""
    head, tail = graph.ends(edge_id)
    return flf_path(graph, (head, tail), allow_bare_edge=True)


def path_neighborhood(graph: LeaderFollowerGraph, path: FlfPath) -> frozenset[int]:
    """Edges touching the path's endpoint nodes, excluding the path's own edges.

    Interior nodes deliberately contribute nothing.
    """
    nearby: set[int] = set()
    for endpoint in (path.nodes[0], path.nodes[-1]):
        nearby.update(graph.incident_edges_of(endpoint))
    return frozenset(nearby - set(path.edges))


def anchor_neighborhood(graph: LeaderFollowerGraph, anchor: Anchor) -> frozenset[int]:
    if isinstance(anchor, FlfPath):
        return path_neighborhood(graph, anchor)
    return edge_neighbors(graph, anchor)


def _anchor_arc_spec(
    graph: LeaderFollowerGraph, anchor: Anchor
) -> tuple[list[int], list[int], set[int], set[int]]:
    """(anchor nodes, anchor edges, forbidden interior nodes, forbidden edges)."""
    if isinstance(anchor, FlfPath):
        nodes = list(anchor.nodes)
        edges = list(anchor.edges)
    else:
        head, tail = graph.ends(anchor)
        nodes = [head, tail]
        edges = [anchor]
    return nodes, edges, set(nodes[1:-1]), set(edges)


def cycles_through(
    graph: LeaderFollowerGraph,
    anchor: Anchor,
    cap: int = MAX_CYCLES_PER_ANCHOR,
) -> tuple[Cycle, ...]:
    """All simple cycles containing the anchor edge or every edge of the
    anchor path, sorted by length then lexicographic edge tuple.

    A cycle through a path is the path plus a connecting arc between its
    endpoints that avoids the path interior.
    """
    nodes, edges, forbidden_nodes, forbidden_edges = _anchor_arc_spec(graph, anchor)
    source, target = nodes[-1], nodes[0]
    found: list[Cycle] = []

    def extend(current: int, arc_nodes: list[int], arc_edges: list[int]) -> None:
        for neighbor, edge_id in graph.adjacency[current]:
            if edge_id in forbidden_edges:
                continue
            if neighbor == target:
                cycle_nodes = nodes + arc_nodes
                cycle_edges = edges + arc_edges + [edge_id]
                found.append(_canonical_cycle(cycle_nodes, cycle_edges))
                if len(found) > cap:
                    raise EnumerationCapError(
                        f"more than {cap} cycles through anchor {anchor!r}"
                    )
                continue
            if neighbor in forbidden_nodes or neighbor in arc_nodes or neighbor in nodes:
                continue
            arc_nodes.append(neighbor)
            arc_edges.append(edge_id)
            extend(neighbor, arc_nodes, arc_edges)
            arc_nodes.pop()
            arc_edges.pop()

    extend(source, [], [])
    found.sort(key=lambda c: (len(c), c.edges, c.nodes))
    return tuple(found)


def enumerate_flf_paths(
    graph: LeaderFollowerGraph, cap: int = MAX_FLF_PATHS
) -> tuple[FlfPath, ...]:
    """All proper FLF paths, canonically oriented (smaller endpoint first)
    and sorted by node tuple."""
    followers = sorted(graph.follower_ids)
    paths: list[FlfPath] = []

    def extend(start: int, current: int, nodes: list[int], edges: list[int]) -> None:
        for neighbor, edge_id in graph.adjacency[current]:
            if neighbor in nodes:
                continue
            if graph.roles[neighbor] is NodeRole.FOLLOWER:
                if neighbor > start and len(nodes) >= 2:
                    paths.append(
                        FlfPath(
                            nodes=tuple(nodes + [neighbor]),
                            edges=tuple(edges + [edge_id]),
                        )
                    )
                    if len(paths) > cap:
                        raise EnumerationCapError(
                            f"more than {cap} follower-leader-follower paths"
                        )
                continue
            nodes.append(neighbor)
            edges.append(edge_id)
            extend(start, neighbor, nodes, edges)
            nodes.pop()
            edges.pop()

    for start in followers:
        extend(start, start, [start], [])
    paths.sort(key=lambda p: p.nodes)
    return tuple(paths)


# -- complete decomposition --------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    """Canonical cycle selection through an anchor plus the leftover edges.

    cycles: selected cycles (admissible, pairwise disjoint on the anchor
    neighborhood, greedily maximal in ascending (length, edge-tuple) order).
    leftover: edges in no selected cycle, excluding the anchor's own edges.
    neighborhood: the anchor neighborhood within the decomposed graph.
    boundary: neighborhood edges left uncovered; these are the harmful ones.
    """

    anchor: Anchor
    cycles: tuple[Cycle, ...]
    leftover: frozenset[int]
    neighborhood: frozenset[int]

    @property
    def boundary(self) -> frozenset[int]:
        return self.neighborhood & self.leftover


def complete_decomposition(
    graph: LeaderFollowerGraph, anchor: Anchor
) -> Decomposition:
    """Select the canonical cycle set through the anchor.

    A candidate cycle is admissible iff no strictly shorter cycle through the
    anchor shares an anchor-neighborhood edge with it (the witness ranges
    over all cycles, selected or not). Admissible cycles are then picked
    greedily in ascending (length, edge-tuple) order subject to pairwise
    disjoint neighborhood intersections.
    """
    if isinstance(anchor, FlfPath):
        missing = [e for e in anchor.edges if e not in graph.edge_index]
        if missing:
            raise UnknownEdgeError(f"anchor path edges {missing} not in graph")
    elif anchor not in graph.edge_index:
        raise UnknownEdgeError(f"unknown edge id {anchor}")
    neighborhood = anchor_neighborhood(graph, anchor)
    candidates = cycles_through(graph, anchor)
    touched = [cycle.edge_set & neighborhood for cycle in candidates]
    selected: list[Cycle] = []
    used: set[int] = set()
    for i, cycle in enumerate(candidates):
        admissible = not any(
            len(other) < len(cycle) and touched[i] & touched[j]
            for j, other in enumerate(candidates)
        )
        if admissible and not (touched[i] & used):
            selected.append(cycle)
            used.update(touched[i])
    covered: set[int] = set()
    for cycle in selected:
        covered.update(cycle.edges)
    _, anchor_edges, _, _ = _anchor_arc_spec(graph, anchor)
    leftover = frozenset(set(graph.edge_ids) - covered - set(anchor_edges))
    return Decomposition(
        anchor=anchor,
        cycles=tuple(selected),
        leftover=leftover,
        neighborhood=neighborhood,
    )


def edge_condition_terms(dec: Decomposition) -> tuple[int, int, int]:
    """(cycle_term, boundary_count, margin) for an edge anchor.

    Short selected cycles contribute min(len - 4, 2); each uncovered
    neighborhood edge contributes +1; the margin subtracts the bound 2.
    """
    cycle_term = sum(min(len(c) - 4, 2) for c in dec.cycles)
    boundary_count = len(dec.boundary)
    return cycle_term, boundary_count, cycle_term + boundary_count - 2


def path_condition_terms(dec: Decomposition) -> tuple[bool, int, int, int]:
    """(bypass, cycle_term, boundary_count, margin) for a path anchor.

    bypass: some selected cycle is shorter than twice the path length, which
    certifies the path without a margin test. Otherwise each selected cycle
    contributes min(len - 2*path_len - 2, 2).
    """
    path = dec.anchor
    if not isinstance(path, FlfPath):
        raise GraphError("path_condition_terms needs a path anchor")
    path_len = len(path.edges)
    bypass = any(len(c) < 2 * path_len for c in dec.cycles)
    cycle_term = sum(min(len(c) - 2 * path_len - 2, 2) for c in dec.cycles)
    boundary_count = len(dec.boundary)
    return bypass, cycle_term, boundary_count, cycle_term + boundary_count - 2


def worst_case_margin(graph: LeaderFollowerGraph, anchor: Anchor) -> int:
    """Margin of the anchor in the given graph; <= 0 is the passing range."""
    dec = complete_decomposition(graph, anchor)
    if isinstance(anchor, FlfPath):
        return path_condition_terms(dec)[3]
    return edge_condition_terms(dec)[2]


# -- maximum follower-end subgraph -------------------------------------------


@dataclass(frozen=True)
class FollowerEndCore:
    """Largest induced subgraph in which every leader lies on an FLF path.

    Unique: subgraphs with that property are closed under union, so iterated
    peeling of uncovered leaders converges to the maximum.
    """

    subgraph: LeaderFollowerGraph
    removed_nodes: frozenset[int]
    removed_edges: frozenset[int]


def max_follower_end_subgraph(graph: LeaderFollowerGraph) -> FollowerEndCore:
    current = set(graph.node_ids)
    sub = _induce(graph, current)
    while True:
        covered: set[int] = set()
        for path in enumerate_flf_paths(sub):
            covered.update(path.nodes)
        uncovered = [
            i for i in sub.node_ids if sub.roles[i] is NodeRole.LEADER and i not in covered
        ]
        if not uncovered:
            break
        current -= set(uncovered)
        sub = _induce(graph, current)
    return FollowerEndCore(
        subgraph=sub,
        removed_nodes=frozenset(set(graph.node_ids) - current),
        removed_edges=frozenset(set(graph.edge_ids) - set(sub.edge_ids)),
    )


# -- condition reports --------------------------------------------------------


@dataclass(frozen=True)
class EdgeCheck:
    edge: int
    cycle_term: int
    boundary_count: int
    margin: int
    witness_nodes: tuple[int, ...] | None = None


@dataclass(frozen=True)
class PathCheck:
    nodes: tuple[int, ...]
    bypass: bool
    cycle_term: int
    boundary_count: int
    margin: int


@dataclass(frozen=True)
class CheckWitness:
    kind: str  # "edge" | "path"
    margin: int
    edge: int | None = None
    nodes: tuple[int, ...] | None = None
    subgraph_nodes: tuple[int, ...] | None = None


@dataclass(frozen=True)
class ConditionReport:
    passed: bool
    edges: tuple[EdgeCheck, ...]
    paths: tuple[PathCheck, ...]
    witness: CheckWitness | None

    def to_json_dict(self) -> dict:
        witness: dict | None = None
        if self.witness is not None:
            witness = {"kind": self.witness.kind, "margin": self.witness.margin}
            if self.witness.edge is not None:
                witness["edge"] = self.witness.edge
            if self.witness.nodes is not None:
                witness["nodes"] = list(self.witness.nodes)
            if self.witness.subgraph_nodes is not None:
                witness["subgraph_nodes"] = list(self.witness.subgraph_nodes)
        return {
            "verdict": "pass" if self.passed else "fail",
            "edges": [
                {
                    "edge": r.edge,
                    "cycle_term": r.cycle_term,
                    "E_i": r.boundary_count,
                    "margin": r.margin,
                }
                for r in self.edges
            ],
            "paths": [
                {
                    "nodes": list(r.nodes),
                    "bypass": r.bypass,
                    "cycle_term": r.cycle_term,
                    "F_i": r.boundary_count,
                    "margin": r.margin,
                }
                for r in self.paths
            ],
            "witness": witness,
        }


def _follower_component(
    sub: LeaderFollowerGraph, start_edge: int
) -> tuple[int, ...]:
    head, tail = sub.ends(start_edge)
    seen = {head}
    queue = deque([head])
    while queue:
        node = queue.popleft()
        for other, _ in sub.adjacency[node]:
            if other not in seen:
                seen.add(other)
                queue.append(other)
    assert tail in seen
    return tuple(sorted(seen))


def _verdict(
    edge_records: list[EdgeCheck], path_records: list[PathCheck]
) -> tuple[bool, CheckWitness | None]:
    for record in edge_records:
        if record.margin > 0:
            return False, CheckWitness(
                kind="edge",
                margin=record.margin,
                edge=record.edge,
                subgraph_nodes=record.witness_nodes,
            )
    for record in path_records:
        if not record.bypass and record.margin > 0:
            return False, CheckWitness(
                kind="path", margin=record.margin, nodes=record.nodes
            )
    return True, None


def check_tree_necessary(graph: LeaderFollowerGraph) -> ConditionReport:
    """Necessary condition for trees: inside the follower-induced subgraph no
    edge may have more than two neighboring edges.

    Raises TreeRequiredError for graphs with cycles; use check_necessary.
    """
    if not is_tree(graph):
        raise TreeRequiredError(
            "graph has cycles; use the general necessary-condition check "
            "(CLI flag --theorem1)"
        )
    records: list[EdgeCheck] = []
    followers = set(graph.follower_ids)
    if followers:
        sub = _induce(graph, followers)
        for edge_id in sorted(sub.edge_ids):
            count = len(edge_neighbors(sub, edge_id))
            records.append(
                EdgeCheck(
                    edge=edge_id,
                    cycle_term=0,
                    boundary_count=count,
                    margin=count - 2,
                    witness_nodes=_follower_component(sub, edge_id),
                )
            )
    passed, witness = _verdict(records, [])
    return ConditionReport(
        passed=passed, edges=tuple(records), paths=(), witness=witness
    )


def _distance_ball(
    sub: LeaderFollowerGraph, sources: tuple[int, int], radius: int
) -> set[int]:
    dist = {s: 0 for s in sources}
    queue = deque(sources)
    while queue:
        node = queue.popleft()
        if dist[node] == radius:
            continue
        for other, _ in sub.adjacency[node]:
            if other not in dist:
                dist[other] = dist[node] + 1
                queue.append(other)
    return set(dist)


def check_necessary(graph: LeaderFollowerGraph) -> ConditionReport:
    """Necessary condition for general graphs.

    For each follower-follower edge, the margin is maximized over induced
    subgraphs of followers around the edge. Only followers within distance 2
    of the endpoints (inside the follower-induced subgraph) can change the
    result: every anchor cycle covers exactly two neighborhood edges, so
    cycles of length >= 6 contribute net zero and anything relevant lives in
    that ball.
    """
    records: list[EdgeCheck] = []
    followers = set(graph.follower_ids)
    if followers:
        fsub = _induce(graph, followers)
        for edge_id in sorted(fsub.edge_ids):
            head, tail = fsub.ends(edge_id)
            ball = _distance_ball(fsub, (head, tail), 2)
            if len(ball) > SUBSET_BALL_CAP:
                raise EnumerationCapError(
                    f"edge {edge_id}: {len(ball)} followers within distance 2 "
                    f"exceeds the enumeration cap {SUBSET_BALL_CAP}"
                )
            others = sorted(ball - {head, tail})
            best: tuple[int, int, int, tuple[int, ...]] | None = None
            for size in range(len(others) + 1):
                for combo in itertools.combinations(others, size):
                    nodes = {head, tail, *combo}
                    dec = complete_decomposition(_induce(fsub, nodes), edge_id)
                    cycle_term, boundary, margin = edge_condition_terms(dec)
                    if best is None or margin > best[0]:
                        best = (margin, cycle_term, boundary, tuple(sorted(nodes)))
            assert best is not None
            records.append(
                EdgeCheck(
                    edge=edge_id,
                    cycle_term=best[1],
                    boundary_count=best[2],
                    margin=best[0],
                    witness_nodes=best[3],
                )
            )
    passed, witness = _verdict(records, [])
    return ConditionReport(
        passed=passed, edges=tuple(records), paths=(), witness=witness
    )


def check_feasibility(graph: LeaderFollowerGraph) -> ConditionReport:
    """Necessary and sufficient check on the maximum follower-end subgraph.

    Follower-follower edges of the core are checked with the edge condition;
    every FLF path of the core is checked with the path condition unless a
    short cycle bypasses it.
    """
    core = max_follower_end_subgraph(graph)
    gs = core.subgraph
    partition = classify_edges(gs)
    edge_records: list[EdgeCheck] = []
    for edge_id in sorted(partition.follower_follower):
        dec = complete_decomposition(gs, edge_id)
        cycle_term, boundary, margin = edge_condition_terms(dec)
        edge_records.append(
            EdgeCheck(
                edge=edge_id,
                cycle_term=cycle_term,
                boundary_count=boundary,
                margin=margin,
            )
        )
    path_records: list[PathCheck] = []
    for path in enumerate_flf_paths(gs):
        dec = complete_decomposition(gs, path)
        bypass, cycle_term, boundary, margin = path_condition_terms(dec)
        path_records.append(
            PathCheck(
                nodes=path.nodes,
                bypass=bypass,
                cycle_term=cycle_term,
                boundary_count=boundary,
                margin=margin,
            )
        )
    passed, witness = _verdict(edge_records, path_records)
    return ConditionReport(
        passed=passed,
        edges=tuple(edge_records),
        paths=tuple(path_records),
        witness=witness,
    )


def _with_leaders(
    graph: LeaderFollowerGraph, leader_set: set[int]
) -> LeaderFollowerGraph:
    nodes = tuple(
        (i, NodeRole.LEADER if i in leader_set else NodeRole.FOLLOWER)
        for i, _ in graph.nodes
    )
    return LeaderFollowerGraph(nodes, graph.edges, allow_disconnected=True)


def _tree_prune_fails(graph: LeaderFollowerGraph) -> bool:
    # Sound for trees only: with no cycles anywhere, a follower-follower edge
    # whose follower-induced neighborhood has >= 3 edges can never pass (the
    # core keeps all followers, so its neighborhood only grows).
    followers = set(graph.follower_ids)
    if not followers:
        return False
    sub = _induce(graph, followers)
    return any(len(edge_neighbors(sub, e)) > 2 for e in sub.edge_ids)


def suggest_leaders(
    graph: LeaderFollowerGraph, max_leaders: int
) -> tuple[tuple[int, ...], ...]:
    """All role assignments with at most max_leaders leaders that pass
    check_feasibility, ordered by leader count then lexicographically.

    Input roles are ignored; only the structure matters.
    """
    if graph.n > SUGGEST_NODE_CAP:
        raise EnumerationCapError(
            f"{graph.n} nodes exceeds the suggestion cap {SUGGEST_NODE_CAP}"
        )
    if max_leaders < 0:
        raise GraphError("max_leaders must be >= 0")
    tree = is_tree(graph)
    ids = sorted(graph.node_ids)
    passing: list[tuple[int, ...]] = []
    for count in range(min(max_leaders, graph.n) + 1):
        for combo in itertools.combinations(ids, count):
            candidate = _with_leaders(graph, set(combo))
            if tree and _tree_prune_fails(candidate):
                continue
            if check_feasibility(candidate).passed:
                passing.append(combo)
    return tuple(passing)
