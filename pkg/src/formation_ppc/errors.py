"""Exception taxonomy shared across the package.

Every error raised by the public API derives from FormationError so callers
(CLI, HTTP service) can map failures to exit codes / status codes in one place.
"""

from __future__ import annotations

__all__ = [
    "FormationError",
    "GraphError",
    "SelfLoopError",
    "DuplicateEdgeError",
    "DuplicateIdError",
    "UnknownEndpointError",
    "UnknownNodeError",
    "UnknownEdgeError",
    "DisconnectedGraphError",
    "EmptySubsetError",
    "FormationSpecError",
    "TreeRequiredError",
    "EnumerationCapError",
    "FunnelViolationError",
    "DivergenceError",
    "SimulationTimeout",
    "ScenarioError",
]


class FormationError(Exception):
    """Base class for all package errors."""


class GraphError(FormationError, ValueError):
    """Invalid graph structure or reference."""


class SelfLoopError(GraphError):
    """An edge joins a node to itself."""


class DuplicateEdgeError(GraphError):
    """Two edges join the same node pair (multigraphs are rejected)."""


class DuplicateIdError(GraphError):
    """A node id or edge id appears more than once."""


class UnknownEndpointError(GraphError):
    """An edge references a node id that was never declared."""


class UnknownNodeError(GraphError):
    """A node id lookup failed."""


class UnknownEdgeError(GraphError):
    """An edge id lookup failed."""


class DisconnectedGraphError(GraphError):
    """The graph is not a single connected component."""


class EmptySubsetError(GraphError):
    """An induced subgraph was requested for an empty node subset."""


class FormationSpecError(FormationError, ValueError):
    """Formation geometry is inconsistent (shape, coverage, or cycle closure)."""


class TreeRequiredError(FormationError):
    """A tree-only check was invoked on a graph with cycles."""


class EnumerationCapError(FormationError):
    """An exhaustive search would exceed its configured size cap."""


class FunnelViolationError(FormationError):
    """An edge error sits on or outside its performance funnel."""


class DivergenceError(FormationError):
    """The integrated state became non-finite."""


class SimulationTimeout(FormationError):
    """A simulation exceeded its wall-clock budget."""


class ScenarioError(FormationError, ValueError):
    """A scenario file is malformed or internally inconsistent."""
