"""Hypothesis strategies for random leader-follower graphs."""

from __future__ import annotations

from hypothesis import strategies as st

from formation_ppc.graphs import LeaderFollowerGraph


@st.composite
def connected_graphs(
    draw,
    min_nodes: int = 2,
    max_nodes: int = 8,
    max_extra_edges: int = 4,
    roles: bool = True,
):
    """Random tree plus chords; random orientations and (optionally) roles."""
    n = draw(st.integers(min_nodes, max_nodes))
    parents = [
        draw(st.integers(1, i - 1)) for i in range(2, n + 1)
    ]
    pairs = [(p, i) for p, i in zip(parents, range(2, n + 1))]
    existing = {frozenset(p) for p in pairs}
    candidates = sorted(
        (a, b)
        for a in range(1, n + 1)
        for b in range(a + 1, n + 1)
        if frozenset((a, b)) not in existing
    )
    if candidates and max_extra_edges:
        extra = draw(
            st.lists(
                st.sampled_from(candidates),
                max_size=max_extra_edges,
                unique=True,
            )
        )
        pairs += extra
    edges = []
    for k, (a, b) in enumerate(pairs, start=1):
        if draw(st.booleans()):
            a, b = b, a
        edges.append((k, a, b))
    if roles:
        node_roles = draw(
            st.lists(
                st.sampled_from(("leader", "follower")),
                min_size=n,
                max_size=n,
            )
        )
    else:
        node_roles = ["follower"] * n
    nodes = tuple((i, node_roles[i - 1]) for i in range(1, n + 1))
    return LeaderFollowerGraph(nodes=nodes, edges=tuple(edges))
