from __future__ import annotations

import numpy as np
import pytest

from formation_ppc.graphs import LeaderFollowerGraph


def star(m: int, leaders: set[int] | None = None) -> LeaderFollowerGraph:
    """Star with center 0 and arms 1..m; edge k runs center -> arm k."""
    leaders = leaders or set()
    nodes = tuple(
        (i, "leader" if i in leaders else "follower") for i in range(m + 1)
    )
    return LeaderFollowerGraph(
        nodes=nodes, edges=tuple((k, 0, k) for k in range(1, m + 1))
    )


def ring(m: int, leaders: set[int] | None = None) -> LeaderFollowerGraph:
    leaders = leaders or set()
    nodes = tuple(
        (i, "leader" if i in leaders else "follower") for i in range(m)
    )
    return LeaderFollowerGraph(
        nodes=nodes, edges=tuple((k, k, (k + 1) % m) for k in range(m))
    )


def line(n: int, leaders: set[int] | None = None) -> LeaderFollowerGraph:
    leaders = leaders or set()
    nodes = tuple(
        (i, "leader" if i in leaders else "follower") for i in range(1, n + 1)
    )
    return LeaderFollowerGraph(
        nodes=nodes, edges=tuple((k, k, k + 1) for k in range(1, n))
    )


def random_tree(rng: np.random.Generator, n: int, leader_prob: float = 0.4
                ) -> LeaderFollowerGraph:
    """Uniform random attachment tree with random roles."""
    edges = []
    for i in range(2, n + 1):
        parent = int(rng.integers(1, i))
        edges.append((i - 1, parent, i))
    nodes = tuple(
        (i, "leader" if rng.random() < leader_prob else "follower")
        for i in range(1, n + 1)
    )
    return LeaderFollowerGraph(nodes=nodes, edges=tuple(edges))


def random_connected_graph(
    rng: np.random.Generator,
    n: int,
    extra_edges: int = 0,
    leader_prob: float = 0.3,
) -> LeaderFollowerGraph:
    """Random tree plus extra chords; connected by construction."""
    tree_pairs = []
    for i in range(2, n + 1):
        parent = int(rng.integers(1, i))
        tree_pairs.append((parent, i))
    present = {frozenset(p) for p in tree_pairs}
    candidates = [
        (a, b)
        for a in range(1, n + 1)
        for b in range(a + 1, n + 1)
        if frozenset((a, b)) not in present
    ]
    rng.shuffle(candidates)
    pairs = tree_pairs + candidates[:extra_edges]
    edges = []
    for k, (a, b) in enumerate(pairs, start=1):
        if rng.random() < 0.5:
            a, b = b, a
        edges.append((k, a, b))
    nodes = tuple(
        (i, "leader" if rng.random() < leader_prob else "follower")
        for i in range(1, n + 1)
    )
    return LeaderFollowerGraph(nodes=nodes, edges=tuple(edges))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, printed after the run."""
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None) if mod else None
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in results:
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{name}] {verdict} - {detail}")
