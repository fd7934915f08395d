"""Closed-loop simulation of leader-follower formations under funnels.

Node positions are integrated with fixed-step RK4 (or explicit Euler); edge
errors, funnel radii and leader inputs are derived from the position samples
afterwards, which keeps cycle sums of edge errors conserved to machine
precision by construction.

Violations (|xbar| >= rho, per edge and dimension) are scanned inside the
integration loop at every step, independent of how sparsely samples are
recorded. Policy "record-and-continue" logs the first crossing per
(edge, dim) and keeps integrating with the transform input clamped; "halt"
stops at the first violating step and returns the truncated trajectory.

Stiff scenarios need small steps but not dense output: record_stride keeps
every stride-th sample (plus the initial and final ones), while crossing
detection stays exact per step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import _kernels
from .errors import (
    DivergenceError,
    FormationSpecError,
    FunnelViolationError,
    ScenarioError,
    SimulationTimeout,
)
from .funnels import CLAMP_LIMIT, PpcConfig
from .graphs import (
    FormationSpec,
    LeaderFollowerGraph,
    NodeRole,
    displacement_matrix,
    edge_laplacian,
    incidence_matrix,
    validate_formation,
)

__all__ = [
    "SimConfig",
    "ViolationEvent",
    "Trajectory",
    "simulate",
    "leaderless_edge_rhs",
    "positions_for_edge_errors",
    "adversarial_init",
    "measure_decay",
]

CHUNK_STEPS = 1000


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings."""

    dt: float = 1e-3
    horizon: float = 10.0
    integrator: str = "rk4"  # "rk4" | "euler"
    violation_policy: str = "record-and-continue"  # or "halt"
    record_stride: int = 1

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ScenarioError("dt must be positive")
        if self.horizon <= 0.0:
            raise ScenarioError("horizon must be positive")
        if self.integrator not in ("rk4", "euler"):
            raise ScenarioError(f"unknown integrator {self.integrator!r}")
        if self.violation_policy not in ("record-and-continue", "halt"):
            raise ScenarioError(
                f"unknown violation policy {self.violation_policy!r}"
            )
        if (
            not isinstance(self.record_stride, int)
            or isinstance(self.record_stride, bool)
            or self.record_stride < 1
        ):
            raise ScenarioError("record_stride must be an integer >= 1")

    def to_json_dict(self) -> dict:
        return {
            "dt": self.dt,
            "horizon": self.horizon,
            "integrator": self.integrator,
            "violation_policy": self.violation_policy,
            "record_stride": self.record_stride,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "SimConfig":
        known = {"dt", "horizon", "integrator", "violation_policy", "record_stride"}
        unknown = set(data) - known
        if unknown:
            raise ScenarioError(f"unknown sim config keys {sorted(unknown)}")
        return cls(**{k: data[k] for k in known if k in data})


@dataclass(frozen=True)
class ViolationEvent:
    """First funnel crossing of one edge-error component."""

    time: float
    edge: int
    dim: int
    value: float

    def to_json_dict(self) -> dict:
        return {
            "time": self.time,
            "edge": self.edge,
            "dim": self.dim,
            "value": self.value,
        }


@dataclass(frozen=True)
class Trajectory:
    """Sampled closed-loop run plus everything needed to export or replay it.

    positions: (S, n, d); edge_errors: (S, m, d); funnel_radii: (S, m);
    controls: (S, n_leaders, d). The S rows are every record_stride-th
    integration step plus the final one; violations come from the in-loop
    per-step scan, so they are exact even when recording is sparse.
    completed is False when the run halted at a violation under the "halt"
    policy.
    """

    graph: LeaderFollowerGraph
    formation: FormationSpec
    ppc: PpcConfig
    config: SimConfig
    times: np.ndarray
    positions: np.ndarray
    edge_errors: np.ndarray
    funnel_radii: np.ndarray
    controls: np.ndarray
    violations: tuple[ViolationEvent, ...]
    completed: bool

    @property
    def max_normalized_error(self) -> float:
        """Peak |xbar| / rho over the recorded samples."""
        radii = self.funnel_radii[:, :, None]
        return float(np.max(np.abs(self.edge_errors) / radii))

    def final_errors(self) -> dict[int, tuple[float, ...]]:
        last = self.edge_errors[-1]
        return {
            edge_id: tuple(float(x) for x in last[k])
            for k, edge_id in enumerate(self.graph.edge_ids)
        }

    def summary_dict(self) -> dict:
        return {
            "max_normalized_error": self.max_normalized_error,
            "violations": [v.to_json_dict() for v in self.violations],
            "final_errors": {
                str(edge_id): list(vec) for edge_id, vec in self.final_errors().items()
            },
        }

    def csv_header(self) -> list[str]:
        d = self.formation.dimension
        cols = ["time"]
        cols += [f"p_{i}_{c}" for i in self.graph.node_ids for c in range(d)]
        cols += [f"xbar_{e}_{c}" for e in self.graph.edge_ids for c in range(d)]
        cols += [f"rho_{e}" for e in self.graph.edge_ids]
        cols += [f"u_{i}_{c}" for i in self.graph.leader_ids for c in range(d)]
        return cols

    def to_csv(self, path) -> None:
        samples = self.times.shape[0]
        blocks = [
            self.times[:, None],
            self.positions.reshape(samples, -1),
            self.edge_errors.reshape(samples, -1),
            self.funnel_radii,
            self.controls.reshape(samples, -1),
        ]
        table = np.hstack(blocks)
        np.savetxt(
            path,
            table,
            delimiter=",",
            header=",".join(self.csv_header()),
            comments="",
            fmt="%.17g",
        )


def _sim_arrays(
    graph: LeaderFollowerGraph, formation: FormationSpec, ppc: PpcConfig
) -> dict[str, np.ndarray]:
    head = np.array(
        [graph.node_index[h] for _, h, _ in graph.edges], dtype=np.int64
    )
    tail = np.array(
        [graph.node_index[t] for _, _, t in graph.edges], dtype=np.int64
    )
    roles = [r for _, r in graph.nodes]
    head_leader = np.array(
        [roles[i] is NodeRole.LEADER for i in head], dtype=np.bool_
    )
    tail_leader = np.array(
        [roles[i] is NodeRole.LEADER for i in tail], dtype=np.bool_
    )
    params = ppc.arrays(graph)
    return {
        "head": head,
        "tail": tail,
        "head_leader": head_leader,
        "tail_leader": tail_leader,
        "pdes": displacement_matrix(graph, formation),
        "rho0": params["rho0"],
        "rho_inf": params["rho_inf"],
        "rate": params["rate"],
        "gain": params["gain"],
    }


def positions_array(
    graph: LeaderFollowerGraph, positions: object, dimension: int
) -> np.ndarray:
    """Accepts an (n, d) array or a node-id -> vector mapping."""
    if isinstance(positions, Mapping):
        rows = []
        for node_id in graph.node_ids:
            if node_id not in positions:
                raise ScenarioError(f"initial position missing for node {node_id}")
            rows.append(positions[node_id])
        arr = np.asarray(rows, dtype=np.float64)
    else:
        arr = np.asarray(positions, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape != (graph.n, dimension):
        raise ScenarioError(
            f"initial positions have shape {arr.shape}, expected "
            f"({graph.n}, {dimension})"
        )
    return arr


def simulate(
    graph: LeaderFollowerGraph,
    formation: FormationSpec,
    ppc: PpcConfig,
    config: SimConfig,
    initial_positions: object,
    backend: str | None = None,
    deadline: float | None = None,
) -> Trajectory:
    """Run the closed loop and return the sampled trajectory.

    deadline, if given, is an absolute time.monotonic() bound checked between
    integration chunks; crossing it raises SimulationTimeout.
    """
    validate_formation(graph, formation)
    ppc.validate_edges(graph)
    p0 = positions_array(graph, initial_positions, formation.dimension)
    arrays = _sim_arrays(graph, formation, ppc)

    xbar0 = p0[arrays["head"]] - p0[arrays["tail"]] - arrays["pdes"]
    rho_at_0 = arrays["rho0"]
    outside = np.abs(xbar0) >= rho_at_0[:, None]
    if np.any(outside):
        bad = sorted(
            graph.edge_ids[k] for k in np.unique(np.nonzero(outside)[0])
        )
        raise FunnelViolationError(
            f"initial errors of edges {bad} are not strictly inside their funnels"
        )

    n_steps = int(round(config.horizon / config.dt))
    if n_steps < 1:
        raise ScenarioError("horizon shorter than one step")
    use_rk4 = config.integrator == "rk4"
    halt = config.violation_policy == "halt"
    stride = config.record_stride

    rows: list[np.ndarray] = [p0[None, :, :]]
    steps: list[int] = [0]
    cross_step = np.full((graph.m, formation.dimension), -1, dtype=np.int64)
    cross_value = np.zeros((graph.m, formation.dimension))
    p = p0
    done_total = 0
    status = _kernels.STATUS_DONE
    while done_total < n_steps:
        if deadline is not None and time.monotonic() > deadline:
            raise SimulationTimeout(
                f"simulation exceeded its wall-clock budget after "
                f"{done_total} of {n_steps} steps"
            )
        todo = min(CHUNK_STEPS, n_steps - done_total)
        samples, done, status, cstep, cval = _kernels.integrate(
            p,
            done_total * config.dt,
            config.dt,
            todo,
            arrays["head"],
            arrays["tail"],
            arrays["head_leader"],
            arrays["tail_leader"],
            arrays["pdes"],
            arrays["rho0"],
            arrays["rho_inf"],
            arrays["rate"],
            arrays["gain"],
            CLAMP_LIMIT,
            use_rk4,
            halt,
            backend=backend,
        )
        fresh = (cstep >= 0) & (cross_step < 0)
        cross_step[fresh] = done_total + cstep[fresh]
        cross_value[fresh] = cval[fresh]
        # record every global step divisible by the stride within this chunk
        first_recorded = -(-(done_total + 1) // stride) * stride
        for g in range(first_recorded, done_total + done + 1, stride):
            rows.append(samples[g - done_total][None, :, :])
            steps.append(g)
        done_total += done
        p = samples[done].copy()
        if status != _kernels.STATUS_DONE:
            break
    if steps[-1] != done_total:
        rows.append(p[None, :, :])
        steps.append(done_total)

    positions = np.concatenate(rows, axis=0)
    times = np.asarray(steps, dtype=np.float64) * config.dt
    if status == _kernels.STATUS_NONFINITE:
        raise DivergenceError(
            f"state became non-finite near t={times[-1]:.6g}; "
            "decrease dt or the gains"
        )
    return _assemble(
        graph, formation, ppc, config, arrays, times, positions, status,
        cross_step, cross_value,
    )


def _assemble(
    graph: LeaderFollowerGraph,
    formation: FormationSpec,
    ppc: PpcConfig,
    config: SimConfig,
    arrays: dict[str, np.ndarray],
    times: np.ndarray,
    positions: np.ndarray,
    status: int,
    cross_step: np.ndarray,
    cross_value: np.ndarray,
) -> Trajectory:
    edge_errors = (
        positions[:, arrays["head"], :]
        - positions[:, arrays["tail"], :]
        - arrays["pdes"][None, :, :]
    )
    radii = (arrays["rho0"] - arrays["rho_inf"])[None, :] * np.exp(
        -arrays["rate"][None, :] * times[:, None]
    ) + arrays["rho_inf"][None, :]

    xhat = np.clip(edge_errors / radii[:, :, None], -CLAMP_LIMIT, CLAMP_LIMIT)
    eps = np.log1p(xhat) - np.log1p(-xhat)
    jac = 2.0 / ((1.0 - xhat * xhat) * radii[:, :, None])
    weighted = arrays["gain"][None, :, None] * jac * eps
    D = incidence_matrix(graph).astype(np.float64)
    D_L = D[graph.leader_rows]
    controls = -np.einsum("lm,smd->sld", D_L, weighted)

    events: list[ViolationEvent] = []
    for k, edge_id in enumerate(graph.edge_ids):
        for c in range(formation.dimension):
            step = int(cross_step[k, c])
            if step >= 0:
                events.append(
                    ViolationEvent(
                        time=step * config.dt,
                        edge=edge_id,
                        dim=c,
                        value=float(cross_value[k, c]),
                    )
                )
    events.sort(key=lambda e: (e.time, e.edge, e.dim))

    for arr in (times, positions, edge_errors, radii, controls):
        arr.setflags(write=False)
    return Trajectory(
        graph=graph,
        formation=formation,
        ppc=ppc,
        config=config,
        times=times,
        positions=positions,
        edge_errors=edge_errors,
        funnel_radii=radii,
        controls=controls,
        violations=tuple(events),
        completed=status == _kernels.STATUS_DONE,
    )


def leaderless_edge_rhs(graph: LeaderFollowerGraph, xbar: np.ndarray) -> np.ndarray:
    """Zero-input edge-error dynamics xbar_dot = -L_e xbar.

    xbar may be (m,) or (m, d); the result matches its shape.
    """
    arr = np.asarray(xbar, dtype=np.float64)
    L = edge_laplacian(graph).astype(np.float64)
    if arr.shape[0] != graph.m:
        raise FormationSpecError(
            f"xbar has leading dimension {arr.shape[0]}, expected {graph.m}"
        )
    return -(L @ arr)


def positions_for_edge_errors(
    graph: LeaderFollowerGraph, xbar: np.ndarray
) -> np.ndarray:
    """Positions p with D^T p = xbar (zero displacement targets).

    Raises FormationSpecError when the requested errors do not close around
    cycles, i.e. no position assignment realizes them.
    """
    arr = np.asarray(xbar, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    D = incidence_matrix(graph).astype(np.float64)
    solution, *_ = np.linalg.lstsq(D.T, arr, rcond=None)
    residual = D.T @ solution - arr
    scale = max(1.0, float(np.abs(arr).max()))
    if float(np.abs(residual).max()) > 1e-9 * scale:
        raise FormationSpecError("requested edge errors are not cycle-consistent")
    return solution


def _star_center(graph: LeaderFollowerGraph) -> int | None:
    if graph.m < 3 or graph.n != graph.m + 1:
        return None
    degrees = {i: graph.degree(i) for i in graph.node_ids}
    centers = [i for i, deg in degrees.items() if deg == graph.m]
    if len(centers) != 1:
        return None
    if all(deg == 1 for i, deg in degrees.items() if i != centers[0]):
        return centers[0]
    return None


def _is_cycle_graph(graph: LeaderFollowerGraph) -> bool:
    return (
        graph.m == graph.n >= 3
        and all(graph.degree(i) == 2 for i in graph.node_ids)
    )


def adversarial_init(
    graph: LeaderFollowerGraph,
    funnel,
    delta: float | None = None,
    anchor_edge: int | None = None,
) -> np.ndarray:
    """Worst-case initial positions for the proof families (1-D).

    Supported graphs: leaderless stars (>= 3 edges) and leaderless cycles.
    Every edge error starts at magnitude rho0 - delta arranged so the anchor
    edge initially decays (or grows) at the family's worst rate. delta
    defaults to rho0 / 1000.
    """
    if graph.leader_ids:
        raise FormationSpecError(
            "adversarial initial conditions are defined for leaderless graphs"
        )
    if delta is None:
        delta = 1e-3 * funnel.rho0
    c = funnel.rho0 - delta
    if not 0.0 < c < funnel.rho0:
        raise FormationSpecError("delta must stay inside (0, rho0)")
    if anchor_edge is None:
        anchor_edge = min(graph.edge_ids)

    center = _star_center(graph)
    if center is not None:
        return _star_init(graph, center, anchor_edge, c)
    if _is_cycle_graph(graph):
        return _cycle_init(graph, anchor_edge, c)
    raise FormationSpecError(
        "adversarial initial conditions are defined for leaderless stars "
        "and cycles only"
    )


def _star_init(
    graph: LeaderFollowerGraph, center: int, anchor_edge: int, c: float
) -> np.ndarray:
    def sign_at_center(edge_id: int) -> int:
        head, _ = graph.ends(edge_id)
        return 1 if head == center else -1

    anchor_sign = sign_at_center(anchor_edge)
    errors = {}
    for edge_id in graph.edge_ids:
        if edge_id == anchor_edge:
            errors[edge_id] = c
        else:
            # Flip against the shared-node sign so every neighbor pushes the
            # anchor error outward.
            errors[edge_id] = -anchor_sign * sign_at_center(edge_id) * c
    p = np.zeros((graph.n, 1))
    for edge_id, head, tail in graph.edges:
        value = errors[edge_id]
        if head == center:
            p[graph.node_index[tail], 0] = -value
        else:
            p[graph.node_index[head], 0] = value
    return p


def _cycle_init(
    graph: LeaderFollowerGraph, anchor_edge: int, c: float
) -> np.ndarray:
    m = graph.m
    head, tail = graph.ends(anchor_edge)
    walk_nodes = [tail, head]
    walk_edges = [anchor_edge]
    # degree 2 everywhere: the next edge is the one incident edge that is not
    # the edge just walked
    for _ in range(m - 2):
        current = walk_nodes[-1]
        neighbor, edge_id = next(
            pair for pair in graph.adjacency[current] if pair[1] != walk_edges[-1]
        )
        walk_nodes.append(neighbor)
        walk_edges.append(edge_id)

    # Directed error along the walk: the anchor starts at the boundary, its
    # two neighbors share the worst admissible slack, interior edges absorb
    # the closure constraint. The closing edge's error is implied.
    s = min(2.0 * c, (m - 4) * c)
    directed = np.empty(m)
    directed[0] = c
    directed[1] = s / 2.0
    directed[m - 1] = s / 2.0
    if m > 3:
        directed[2 : m - 1] = (-c - s) / (m - 3)
    p = np.zeros((graph.n, 1))
    for k in range(m - 1):
        a = walk_nodes[k]
        b = walk_nodes[k + 1]
        p[graph.node_index[b], 0] = p[graph.node_index[a], 0] + directed[k]
    return p


def measure_decay(traj: Trajectory, edge_id: int, dim: int = 0) -> float:
    """Initial decay rate xbar_dot(0) / xbar(0) of one edge-error component,
    from a single right-hand-side evaluation at t=0."""
    k = traj.graph.edge_index[edge_id]
    x0 = float(traj.edge_errors[0, k, dim])
    if x0 == 0.0:
        raise FormationSpecError(
            f"edge {edge_id} has zero initial error; decay rate undefined"
        )
    arrays = _sim_arrays(traj.graph, traj.formation, traj.ppc)
    pdot = _kernels.rhs_numpy(
        0.0,
        np.asarray(traj.positions[0], dtype=np.float64),
        arrays["head"],
        arrays["tail"],
        arrays["head_leader"],
        arrays["tail_leader"],
        arrays["pdes"],
        arrays["rho0"],
        arrays["rho_inf"],
        arrays["rate"],
        arrays["gain"],
        CLAMP_LIMIT,
    )
    xdot = float(
        pdot[arrays["head"][k], dim] - pdot[arrays["tail"][k], dim]
    )
    return xdot / x0
