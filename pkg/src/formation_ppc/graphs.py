"""Leader-follower graph representation and its linear-algebraic views.

The topology is an undirected simple graph. Each edge additionally carries a
fixed orientation (head, tail) used as bookkeeping for the incidence matrix
and for the sign of relative states; flipping an orientation never changes
any structural result, only signs.

Conventions used throughout the package:

* incidence matrix D is n x m with D[head, k] = +1 and D[tail, k] = -1,
* graph Laplacian L = D D^T, edge Laplacian L_e = D^T D,
* the relative state of edge k is xbar_k = (p_head - p_tail) - d_k where d_k
  is the desired displacement from FormationSpec.

All public types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DisconnectedGraphError,
    DuplicateEdgeError,
    DuplicateIdError,
    EmptySubsetError,
    FormationSpecError,
    GraphError,
    SelfLoopError,
    UnknownEdgeError,
    UnknownEndpointError,
    UnknownNodeError,
)

__all__ = [
    "NodeRole",
    "LeaderFollowerGraph",
    "EdgePartition",
    "FormationSpec",
    "validate_graph",
    "incidence_matrix",
    "edge_laplacian",
    "edge_laplacian_from_rules",
    "edge_neighbors",
    "classify_edges",
    "induced_subgraph",
    "is_tree",
    "graph_from_dict",
    "graph_to_dict",
]


class NodeRole(enum.Enum):
    """Role of a node: leaders receive an exogenous control input."""

    LEADER = "leader"
    FOLLOWER = "follower"


def _as_role(value: object) -> NodeRole:
    if isinstance(value, NodeRole):
        return value
    try:
        return NodeRole(value)
    except ValueError:
        raise GraphError(f"unknown node role {value!r}") from None


@dataclass(frozen=True)
class LeaderFollowerGraph:
    """Undirected simple graph with per-node roles and oriented edges.

    Parameters
    ----------
    nodes : iterable of (id, role)
        Node ids are integers; roles are NodeRole values or their strings.
        Input order is preserved and fixes the row order of matrices.
    edges : iterable of (id, head, tail)
        Edge ids are integers; input order fixes the column order.
    allow_disconnected : bool
        Internal switch used for induced subgraphs; the default constructor
        rejects disconnected graphs.
    """

    nodes: tuple[tuple[int, NodeRole], ...]
    edges: tuple[tuple[int, int, int], ...]
    allow_disconnected: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "nodes", tuple((int(i), _as_role(r)) for i, r in self.nodes)
        )
        object.__setattr__(
            self, "edges", tuple((int(e), int(h), int(t)) for e, h, t in self.edges)
        )
        self._check_structure()
        if not self.allow_disconnected:
            self._check_connected()

    # -- construction-time validation -------------------------------------

    def _check_structure(self) -> None:
        seen_nodes: set[int] = set()
        for node_id, _ in self.nodes:
            if node_id in seen_nodes:
                raise DuplicateIdError(f"duplicate node id {node_id}")
            seen_nodes.add(node_id)
        seen_edges: set[int] = set()
        seen_pairs: set[frozenset[int]] = set()
        for edge_id, head, tail in self.edges:
            if edge_id in seen_edges:
                raise DuplicateIdError(f"duplicate edge id {edge_id}")
            seen_edges.add(edge_id)
            if head == tail:
                raise SelfLoopError(f"edge {edge_id} is a self-loop at node {head}")
            for endpoint in (head, tail):
                if endpoint not in seen_nodes:
                    raise UnknownEndpointError(
                        f"edge {edge_id} references undeclared node {endpoint}"
                    )
            pair = frozenset((head, tail))
            if pair in seen_pairs:
                raise DuplicateEdgeError(
                    f"edge {edge_id} duplicates the node pair {sorted(pair)}"
                )
            seen_pairs.add(pair)

    def _check_connected(self) -> None:
        if self.n == 0:
            raise EmptySubsetError("graph has no nodes")
        if self.n == 1:
            return
        seen = {self.node_ids[0]}
        queue = deque(seen)
        while queue:
            node = queue.popleft()
            for other, _ in self.adjacency[node]:
                if other not in seen:
                    seen.add(other)
                    queue.append(other)
        if len(seen) != self.n:
            missing = sorted(set(self.node_ids) - seen)
            raise DisconnectedGraphError(
                f"graph is disconnected; unreachable nodes {missing}"
            )

    # -- basic shape -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.nodes)

    @cached_property
    def edge_ids(self) -> tuple[int, ...]:
        return tuple(e for e, _, _ in self.edges)

    @cached_property
    def node_index(self) -> dict[int, int]:
        return {node_id: i for i, node_id in enumerate(self.node_ids)}

    @cached_property
    def edge_index(self) -> dict[int, int]:
        return {edge_id: k for k, edge_id in enumerate(self.edge_ids)}

    @cached_property
    def roles(self) -> dict[int, NodeRole]:
        return dict(self.nodes)

    @cached_property
    def follower_ids(self) -> tuple[int, ...]:
        return tuple(i for i, r in self.nodes if r is NodeRole.FOLLOWER)

    @cached_property
    def leader_ids(self) -> tuple[int, ...]:
        return tuple(i for i, r in self.nodes if r is NodeRole.LEADER)

    @cached_property
    def follower_rows(self) -> np.ndarray:
        """Row indices of follower nodes in the incidence matrix."""
        return np.array(
            [i for i, (_, r) in enumerate(self.nodes) if r is NodeRole.FOLLOWER],
            dtype=np.int64,
        )

    @cached_property
    def leader_rows(self) -> np.ndarray:
        """Row indices of leader nodes in the incidence matrix."""
        return np.array(
            [i for i, (_, r) in enumerate(self.nodes) if r is NodeRole.LEADER],
            dtype=np.int64,
        )

    @cached_property
    def edge_ends(self) -> dict[int, tuple[int, int]]:
        return {e: (h, t) for e, h, t in self.edges}

    @cached_property
    def incident_edges(self) -> dict[int, tuple[int, ...]]:
        """Edge ids incident to each node, ascending."""
        incident: dict[int, list[int]] = {i: [] for i in self.node_ids}
        for edge_id, head, tail in self.edges:
            incident[head].append(edge_id)
            incident[tail].append(edge_id)
        return {i: tuple(sorted(edges)) for i, edges in incident.items()}

    @cached_property
    def adjacency(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """(neighbor node, connecting edge id) per node, sorted by neighbor."""
        adj: dict[int, list[tuple[int, int]]] = {i: [] for i in self.node_ids}
        for edge_id, head, tail in self.edges:
            adj[head].append((tail, edge_id))
            adj[tail].append((head, edge_id))
        return {i: tuple(sorted(pairs)) for i, pairs in adj.items()}

    # -- lookups -----------------------------------------------------------

    def role(self, node_id: int) -> NodeRole:
        try:
            return self.roles[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node id {node_id}") from None

    def is_leader(self, node_id: int) -> bool:
        return self.role(node_id) is NodeRole.LEADER

    def is_follower(self, node_id: int) -> bool:
        return self.role(node_id) is NodeRole.FOLLOWER

    def ends(self, edge_id: int) -> tuple[int, int]:
        """(head, tail) of an edge."""
        try:
            return self.edge_ends[edge_id]
        except KeyError:
            raise UnknownEdgeError(f"unknown edge id {edge_id}") from None

    def degree(self, node_id: int) -> int:
        return len(self.incident_edges_of(node_id))

    def incident_edges_of(self, node_id: int) -> tuple[int, ...]:
        try:
            return self.incident_edges[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node id {node_id}") from None


@dataclass(frozen=True)
class EdgePartition:
    """Edge ids split by endpoint roles."""

    follower_follower: frozenset[int]
    leader_follower: frozenset[int]
    leader_leader: frozenset[int]


def validate_graph(graph: LeaderFollowerGraph) -> LeaderFollowerGraph:
    """Recheck every structural invariant, including connectivity.

    Construction already validates, so this mainly upgrades graphs built with
    relaxed connectivity (induced subgraphs) back to the strict contract.
    """
    graph._check_structure()
    graph._check_connected()
    return graph


def incidence_matrix(graph: LeaderFollowerGraph) -> np.ndarray:
    """Dense n x m incidence matrix, +1 at the head row, -1 at the tail row.

    Rows follow node input order, columns follow edge input order. Follower
    and leader row blocks are available as graph.follower_rows/leader_rows.
    """
    D = np.zeros((graph.n, graph.m), dtype=np.int64)
    for k, (_, head, tail) in enumerate(graph.edges):
        D[graph.node_index[head], k] = 1
        D[graph.node_index[tail], k] = -1
    return D


def edge_laplacian(graph: LeaderFollowerGraph) -> np.ndarray:
    """Edge Laplacian L_e = D^T D (m x m, integer)."""
    D = incidence_matrix(graph)
    return D.T @ D


def edge_laplacian_from_rules(graph: LeaderFollowerGraph) -> np.ndarray:
    """Edge Laplacian assembled entrywise from the sharing rules.

    Diagonal entries are 2. For distinct edges sharing node s the entry is
    the product of their incidence signs at s (+1 if both point into or both
    out of s, -1 otherwise); 0 for non-adjacent edges. Kept as an independent
    construction so tests can cross-check it against D^T D.
    """
    m = graph.m
    L = np.zeros((m, m), dtype=np.int64)
    for j in range(m):
        L[j, j] = 2
    for j in range(m):
        _, hj, tj = graph.edges[j]
        for k in range(j + 1, m):
            _, hk, tk = graph.edges[k]
            shared = {hj, tj} & {hk, tk}
            if not shared:
                continue
            s = next(iter(shared))
            sign_j = 1 if hj == s else -1
            sign_k = 1 if hk == s else -1
            L[j, k] = L[k, j] = sign_j * sign_k
    return L


def edge_neighbors(graph: LeaderFollowerGraph, edge_id: int) -> frozenset[int]:
    """Edges sharing at least one endpoint with the given edge."""
    head, tail = graph.ends(edge_id)
    nearby = set(graph.incident_edges_of(head)) | set(graph.incident_edges_of(tail))
    nearby.discard(edge_id)
    return frozenset(nearby)


def classify_edges(graph: LeaderFollowerGraph) -> EdgePartition:
    """Partition edges by the roles of their endpoints."""
    ff: set[int] = set()
    lf: set[int] = set()
    ll: set[int] = set()
    for edge_id, head, tail in graph.edges:
        leaders = (graph.roles[head] is NodeRole.LEADER) + (
            graph.roles[tail] is NodeRole.LEADER
        )
        (ff, lf, ll)[leaders].add(edge_id)
    return EdgePartition(
        follower_follower=frozenset(ff),
        leader_follower=frozenset(lf),
        leader_leader=frozenset(ll),
    )


def induced_subgraph(
    graph: LeaderFollowerGraph, node_subset: Iterable[int]
) -> LeaderFollowerGraph:
    """Induced subgraph on a node subset, keeping ids, roles and orientations.

    The result may be disconnected; other invariants still hold.
    """
    subset = set(node_subset)
    if not subset:
        raise EmptySubsetError("induced subgraph of an empty node subset")
    unknown = subset - set(graph.node_ids)
    if unknown:
        raise UnknownNodeError(f"unknown node ids {sorted(unknown)}")
    return _induce(graph, subset)


def _induce(graph: LeaderFollowerGraph, subset: set[int]) -> LeaderFollowerGraph:
    """Internal induced-subgraph builder; allows the empty result."""
    nodes = tuple((i, r) for i, r in graph.nodes if i in subset)
    edges = tuple(
        (e, h, t) for e, h, t in graph.edges if h in subset and t in subset
    )
    return LeaderFollowerGraph(nodes, edges, allow_disconnected=True)


def is_tree(graph: LeaderFollowerGraph) -> bool:
    """True iff the graph is connected with exactly n-1 edges."""
    if graph.m != graph.n - 1:
        return False
    try:
        graph._check_connected()
    except GraphError:
        return False
    return True


# -- formation geometry ----------------------------------------------------


@dataclass(frozen=True)
class FormationSpec:
    """Desired geometry: per-edge displacement targets, optional anchors.

    The displacement of edge k is the desired value of p_head - p_tail.
    When absolute anchors are given they must cover every node and reproduce
    each displacement exactly; displacements must always close around cycles.
    """

    dimension: int
    displacements: tuple[tuple[int, tuple[float, ...]], ...]
    anchors: tuple[tuple[int, tuple[float, ...]], ...] | None = None

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise FormationSpecError("dimension must be >= 1")
        # stored sorted by id so equality ignores the order entries arrived in
        object.__setattr__(
            self,
            "displacements",
            tuple(
                sorted(
                    (int(e), tuple(float(x) for x in vec))
                    for e, vec in self.displacements
                )
            ),
        )
        if self.anchors is not None:
            object.__setattr__(
                self,
                "anchors",
                tuple(
                    sorted(
                        (int(i), tuple(float(x) for x in vec))
                        for i, vec in self.anchors
                    )
                ),
            )

    @cached_property
    def displacement_map(self) -> dict[int, tuple[float, ...]]:
        return dict(self.displacements)

    @cached_property
    def anchor_map(self) -> dict[int, tuple[float, ...]] | None:
        return None if self.anchors is None else dict(self.anchors)

    @classmethod
    def from_displacements(
        cls,
        dimension: int,
        displacements: Mapping[int, Iterable[float]],
        anchors: Mapping[int, Iterable[float]] | None = None,
    ) -> "FormationSpec":
        return cls(
            dimension=dimension,
            displacements=tuple(
                (e, tuple(vec)) for e, vec in displacements.items()
            ),
            anchors=None
            if anchors is None
            else tuple((i, tuple(vec)) for i, vec in anchors.items()),
        )

    @classmethod
    def from_anchors(
        cls,
        dimension: int,
        graph: LeaderFollowerGraph,
        anchors: Mapping[int, Iterable[float]],
    ) -> "FormationSpec":
        """Derive edge displacements from absolute anchor positions."""
        anchor_map = {i: tuple(float(x) for x in vec) for i, vec in anchors.items()}
        missing = set(graph.node_ids) - set(anchor_map)
        if missing:
            raise FormationSpecError(f"anchors missing for nodes {sorted(missing)}")
        displacements = {}
        for edge_id, head, tail in graph.edges:
            displacements[edge_id] = tuple(
                anchor_map[head][c] - anchor_map[tail][c] for c in range(dimension)
            )
        return cls.from_displacements(dimension, displacements, anchor_map)


def validate_formation(
    graph: LeaderFollowerGraph, formation: FormationSpec
) -> FormationSpec:
    """Check coverage, shapes, anchor consistency and cycle closure."""
    disp = formation.displacement_map
    if set(disp) != set(graph.edge_ids):
        extra = sorted(set(disp) - set(graph.edge_ids))
        missing = sorted(set(graph.edge_ids) - set(disp))
        raise FormationSpecError(
            f"displacement coverage mismatch: missing {missing}, extra {extra}"
        )
    for edge_id, vec in disp.items():
        if len(vec) != formation.dimension:
            raise FormationSpecError(
                f"edge {edge_id} displacement has {len(vec)} components, "
                f"expected {formation.dimension}"
            )
    anchors = formation.anchor_map
    if anchors is not None:
        missing_nodes = set(graph.node_ids) - set(anchors)
        if missing_nodes:
            raise FormationSpecError(
                f"anchors missing for nodes {sorted(missing_nodes)}"
            )
        for node_id, vec in anchors.items():
            if node_id in graph.node_index and len(vec) != formation.dimension:
                raise FormationSpecError(
                    f"anchor for node {node_id} has {len(vec)} components, "
                    f"expected {formation.dimension}"
                )
        for edge_id, head, tail in graph.edges:
            want = disp[edge_id]
            got = tuple(
                anchors[head][c] - anchors[tail][c]
                for c in range(formation.dimension)
            )
            if any(abs(a - b) > 1e-9 for a, b in zip(want, got)):
                raise FormationSpecError(
                    f"edge {edge_id} displacement {want} disagrees with anchors {got}"
                )
    else:
        _check_cycle_closure(graph, formation)
    return formation


def _check_cycle_closure(
    graph: LeaderFollowerGraph, formation: FormationSpec
) -> None:
    # Displacements are realizable iff they lie in the row space of D^T,
    # which is exactly the "sums to zero around every cycle" condition.
    if graph.m == 0:
        return
    D = incidence_matrix(graph).astype(np.float64)
    target = displacement_matrix(graph, formation)
    solution, *_ = np.linalg.lstsq(D.T, target, rcond=None)
    residual = D.T @ solution - target
    scale = max(1.0, float(np.abs(target).max()))
    if float(np.abs(residual).max()) > 1e-8 * scale:
        raise FormationSpecError(
            "displacements do not close around cycles (no consistent geometry)"
        )


def displacement_matrix(
    graph: LeaderFollowerGraph, formation: FormationSpec
) -> np.ndarray:
    """(m, d) array of displacement targets in graph edge order."""
    disp = formation.displacement_map
    out = np.empty((graph.m, formation.dimension), dtype=np.float64)
    for k, edge_id in enumerate(graph.edge_ids):
        try:
            out[k] = disp[edge_id]
        except KeyError:
            raise FormationSpecError(
                f"no displacement for edge {edge_id}"
            ) from None
    return out


# -- JSON ------------------------------------------------------------------


def graph_to_dict(graph: LeaderFollowerGraph) -> dict:
    return {
        "nodes": [{"id": i, "role": r.value} for i, r in graph.nodes],
        "edges": [
            {"id": e, "head": h, "tail": t} for e, h, t in graph.edges
        ],
    }


def graph_from_dict(data: object) -> LeaderFollowerGraph:
    if not isinstance(data, dict):
        raise GraphError("graph JSON must be an object")
    try:
        raw_nodes = data["nodes"]
        raw_edges = data["edges"]
    except KeyError as exc:
        raise GraphError(f"graph JSON missing key {exc.args[0]!r}") from None
    if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
        raise GraphError("graph JSON 'nodes'/'edges' must be arrays")
    nodes = []
    for item in raw_nodes:
        if not isinstance(item, dict) or "id" not in item or "role" not in item:
            raise GraphError(f"malformed node entry {item!r}")
        nodes.append((item["id"], item["role"]))
    edges = []
    for item in raw_edges:
        if not isinstance(item, dict) or not {"id", "head", "tail"} <= set(item):
            raise GraphError(f"malformed edge entry {item!r}")
        edges.append((item["id"], item["head"], item["tail"]))
    return LeaderFollowerGraph(tuple(nodes), tuple(edges))


def formation_to_dict(formation: FormationSpec) -> dict:
    out: dict = {
        "dimension": formation.dimension,
        "displacements": {
            str(e): list(vec) for e, vec in formation.displacements
        },
    }
    if formation.anchors is not None:
        out["anchors"] = {str(i): list(vec) for i, vec in formation.anchors}
    return out


def formation_from_dict(data: object) -> FormationSpec:
    if not isinstance(data, dict):
        raise FormationSpecError("formation JSON must be an object")
    try:
        dimension = int(data["dimension"])
        raw_disp = data["displacements"]
    except KeyError as exc:
        raise FormationSpecError(
            f"formation JSON missing key {exc.args[0]!r}"
        ) from None
    if not isinstance(raw_disp, dict):
        raise FormationSpecError("formation 'displacements' must be an object")
    displacements = {int(e): tuple(vec) for e, vec in raw_disp.items()}
    anchors = None
    if "anchors" in data and data["anchors"] is not None:
        if not isinstance(data["anchors"], dict):
            raise FormationSpecError("formation 'anchors' must be an object")
        anchors = {int(i): tuple(vec) for i, vec in data["anchors"].items()}
    return FormationSpec.from_displacements(dimension, displacements, anchors)
