"""Leader-follower formation workbench.

Static feasibility checks for prescribed-performance funnels on formation
graphs, plus a closed-loop simulator, scenario library, CLI and HTTP service.
"""

from .errors import (
    DisconnectedGraphError,
    DivergenceError,
    DuplicateEdgeError,
    DuplicateIdError,
    EmptySubsetError,
    EnumerationCapError,
    FormationError,
    FormationSpecError,
    FunnelViolationError,
    GraphError,
    ScenarioError,
    SelfLoopError,
    SimulationTimeout,
    TreeRequiredError,
    UnknownEdgeError,
    UnknownEndpointError,
    UnknownNodeError,
)
from .funnels import (
    FunnelSettings,
    PerformanceFunnel,
    PpcConfig,
    leader_control,
    normalize_error,
    transform,
    transform_jacobian,
    transformed_error_rate,
)
from .graphs import (
    EdgePartition,
    FormationSpec,
    LeaderFollowerGraph,
    NodeRole,
    classify_edges,
    edge_laplacian,
    edge_laplacian_from_rules,
    edge_neighbors,
    graph_from_dict,
    graph_to_dict,
    incidence_matrix,
    induced_subgraph,
    is_tree,
    validate_graph,
)
from .scenarios import (
    BUILTIN_NAMES,
    Scenario,
    builtin_scenario,
    load_scenario,
    scenario_from_dict,
)
from .simulate import (
    SimConfig,
    Trajectory,
    ViolationEvent,
    adversarial_init,
    leaderless_edge_rhs,
    measure_decay,
    positions_for_edge_errors,
    simulate,
)
from .topology import (
    CheckWitness,
    ConditionReport,
    Cycle,
    Decomposition,
    EdgeCheck,
    FlfPath,
    FollowerEndCore,
    PathCheck,
    bare_edge_path,
    check_feasibility,
    check_necessary,
    check_tree_necessary,
    complete_decomposition,
    cycles_through,
    edge_condition_terms,
    enumerate_flf_paths,
    flf_path,
    max_follower_end_subgraph,
    path_condition_terms,
    path_neighborhood,
    suggest_leaders,
    worst_case_margin,
)

__version__ = "0.1.0"
