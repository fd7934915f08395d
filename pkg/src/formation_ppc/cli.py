"""Command-line interface.

Subcommands: check, decompose, simulate, suggest, serve. Exit codes follow
one convention everywhere: 0 = pass / success, 1 = a check or run failed
(condition violated, funnel violation recorded), 2 = error (bad input,
enumeration cap, divergence).

All JSON goes through the canonical serializer, so CLI output and HTTP
responses for identical inputs are byte-identical (up to the trailing
newline on stdout).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import FormationError, GraphError, ScenarioError
from .graphs import LeaderFollowerGraph, graph_from_dict
from .jsonio import canonical_dumps
from .scenarios import BUILTIN_NAMES, load_scenario
from .simulate import simulate
from .topology import (
    ConditionReport,
    Decomposition,
    FlfPath,
    check_feasibility,
    check_necessary,
    check_tree_necessary,
    complete_decomposition,
    edge_condition_terms,
    flf_path,
    path_condition_terms,
    suggest_leaders,
)

CHECKS = {
    "lemma1": check_tree_necessary,
    "theorem1": check_necessary,
    "theorem2": check_feasibility,
}


def _emit(payload: object) -> None:
    sys.stdout.write(canonical_dumps(payload) + "\n")


def run_checks(graph: LeaderFollowerGraph, names: list[str]) -> tuple[object, bool]:
    """Run the named checks; returns (JSON payload, all passed)."""
    reports: dict[str, ConditionReport] = {
        name: CHECKS[name](graph) for name in names
    }
    passed = all(r.passed for r in reports.values())
    if len(names) == 1:
        return reports[names[0]].to_json_dict(), passed
    return {name: r.to_json_dict() for name, r in reports.items()}, passed


def _cmd_check(args: argparse.Namespace) -> int:
    graph = load_scenario(args.scenario).graph
    names = [n for n in ("lemma1", "theorem1", "theorem2") if getattr(args, n)]
    if not names:
        names = ["theorem1", "theorem2"]
    payload, passed = run_checks(graph, names)
    _emit(payload)
    return 0 if passed else 1


def decomposition_to_dict(dec: Decomposition) -> dict:
    anchor = dec.anchor
    out: dict = {
        "cycles": [
            {"edges": list(c.edges), "nodes": list(c.nodes)} for c in dec.cycles
        ],
        "leftover": sorted(dec.leftover),
        "neighborhood": sorted(dec.neighborhood),
        "boundary": sorted(dec.boundary),
    }
    if isinstance(anchor, FlfPath):
        bypass, cycle_term, boundary, margin = path_condition_terms(dec)
        out["anchor"] = {"path": list(anchor.nodes)}
        out["bypass"] = bypass
        out["cycle_term"] = cycle_term
        out["F_i"] = boundary
        out["margin"] = margin
    else:
        cycle_term, boundary, margin = edge_condition_terms(dec)
        out["anchor"] = {"edge": anchor}
        out["cycle_term"] = cycle_term
        out["E_i"] = boundary
        out["margin"] = margin
    return out


def _cmd_decompose(args: argparse.Namespace) -> int:
    graph = load_scenario(args.scenario).graph
    if args.edge is not None:
        anchor: object = args.edge
    else:
        try:
            nodes = tuple(int(x) for x in args.path.split(","))
        except ValueError:
            raise GraphError(f"--path expects comma-separated node ids, got {args.path!r}")
        anchor = flf_path(graph, nodes, allow_bare_edge=len(nodes) == 2)
    dec = complete_decomposition(graph, anchor)
    _emit(decomposition_to_dict(dec))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    traj = simulate(
        scenario.graph,
        scenario.formation,
        scenario.ppc,
        scenario.sim,
        scenario.initial_array,
        backend=args.backend,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out_dir / "trajectory.csv")
    summary = traj.summary_dict()
    (out_dir / "summary.json").write_text(canonical_dumps(summary) + "\n")
    _emit(summary)
    return 0 if not traj.violations else 1


def _load_graph_for_suggest(source: str) -> LeaderFollowerGraph:
    if source in BUILTIN_NAMES:
        return load_scenario(source).graph
    path = Path(source)
    if not path.exists():
        raise ScenarioError(f"{source!r} is neither a built-in scenario nor a file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON in {path}: {exc}") from None
    if isinstance(data, dict) and "format_version" in data:
        return load_scenario(path).graph
    return graph_from_dict(data)


def _cmd_suggest(args: argparse.Namespace) -> int:
    graph = _load_graph_for_suggest(args.graph)
    assignments = suggest_leaders(graph, args.max_leaders)
    _emit({"assignments": [{"leaders": list(a)} for a in assignments]})
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    port = args.port
    if port is None:
        port = int(os.environ.get("FORMATION_PPC_PORT", "8080"))
    uvicorn.run(create_app(), host=args.host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formation-ppc",
        description=(
            "Feasibility checks and funnel simulation for leader-follower "
            "formation graphs"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scenario_help = (
        "scenario file path or built-in name (%s)" % ", ".join(BUILTIN_NAMES)
    )

    p_check = sub.add_parser("check", help="run feasibility checks")
    p_check.add_argument("scenario", help=scenario_help)
    p_check.add_argument(
        "--lemma1", action="store_true", help="tree necessary condition only"
    )
    p_check.add_argument(
        "--theorem1", action="store_true", help="general necessary condition"
    )
    p_check.add_argument(
        "--theorem2",
        action="store_true",
        help="necessary and sufficient feasibility check",
    )
    p_check.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    p_check.set_defaults(handler=_cmd_check)

    p_dec = sub.add_parser("decompose", help="cycle decomposition of an anchor")
    p_dec.add_argument("scenario", help=scenario_help)
    group = p_dec.add_mutually_exclusive_group(required=True)
    group.add_argument("--edge", type=int, help="anchor edge id")
    group.add_argument(
        "--path", help="anchor path as comma-separated node ids, e.g. 5,2,6"
    )
    p_dec.set_defaults(handler=_cmd_decompose)

    p_sim = sub.add_parser("simulate", help="integrate the closed loop")
    p_sim.add_argument("scenario", help=scenario_help)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument(
        "--backend",
        choices=("numpy", "numba"),
        default=None,
        help="integration backend (default: numba when available)",
    )
    p_sim.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    p_sim.set_defaults(handler=_cmd_simulate)

    p_sug = sub.add_parser(
        "suggest", help="enumerate passing leader assignments"
    )
    p_sug.add_argument(
        "graph", help="graph JSON file, scenario file, or built-in name"
    )
    p_sug.add_argument("--max-leaders", type=int, required=True)
    p_sug.add_argument(
        "--seed",
        type=int,
        default=None,
        help="reserved; all searches are currently deterministic",
    )
    p_sug.set_defaults(handler=_cmd_suggest)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument(
        "--port",
        type=int,
        default=None,
        help="default: $FORMATION_PPC_PORT or 8080",
    )
    p_srv.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except FormationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
