"""HTTP service exposing the checks and the simulator.

Thin JSON-over-HTTP wrapper: every endpoint parses its own request body so
malformed JSON maps to 400, domain errors to 422, enumeration caps to 413,
and simulation time budget overruns to 408. Responses are serialized with
the canonical encoder, so a response body matches the corresponding CLI
stdout byte for byte (the CLI appends a trailing newline).
"""

from __future__ import annotations

import json
import time
from typing import Callable

import numpy as np
from fastapi import FastAPI, Request, Response

from .errors import (
    EnumerationCapError,
    FormationError,
    ScenarioError,
    SimulationTimeout,
)
from .graphs import graph_from_dict
from .jsonio import canonical_bytes
from .scenarios import BUILTIN_NAMES, builtin_scenario, scenario_from_dict
from .simulate import Trajectory, simulate
from .topology import suggest_leaders
from .cli import CHECKS

DEFAULT_TIME_LIMIT = 30.0
DEFAULT_STRIDE = 10


def _json_response(payload: object, status_code: int = 200) -> Response:
    return Response(
        content=canonical_bytes(payload),
        status_code=status_code,
        media_type="application/json",
    )


def _error_response(message: str, status_code: int) -> Response:
    return _json_response({"error": message}, status_code)


async def _dispatch(request: Request, handler: Callable[[dict], Response]) -> Response:
    raw = await request.body()
    try:
        body = json.loads(raw)
    except json.JSONDecodeError as exc:
        return _error_response(f"malformed JSON: {exc}", 400)
    try:
        if not isinstance(body, dict):
            raise ScenarioError("request body must be a JSON object")
        return handler(body)
    except EnumerationCapError as exc:
        return _error_response(str(exc), 413)
    except SimulationTimeout as exc:
        return _error_response(str(exc), 408)
    except FormationError as exc:
        return _error_response(str(exc), 422)


def _check_names(options: object) -> list[str]:
    if options is None:
        options = {}
    if not isinstance(options, dict):
        raise ScenarioError("options must be a JSON object")
    names = options.get("checks", ["theorem1", "theorem2"])
    if not isinstance(names, list) or not names:
        raise ScenarioError("options.checks must be a non-empty list")
    for name in names:
        if name not in CHECKS:
            raise ScenarioError(
                f"unknown check {name!r}; expected one of {sorted(CHECKS)}"
            )
    return list(dict.fromkeys(names))


def _series_payload(traj: Trajectory, stride: int) -> dict:
    n_samples = traj.times.shape[0]
    idx = list(range(0, n_samples, stride))
    if idx[-1] != n_samples - 1:
        idx.append(n_samples - 1)
    take = np.asarray(idx)
    edges = {}
    for k, edge_id in enumerate(traj.graph.edge_ids):
        edges[str(edge_id)] = {
            "radius": traj.funnel_radii[take, k],
            "errors": [
                traj.edge_errors[take, k, c] for c in range(traj.formation.dimension)
            ],
        }
    return {
        "stride": stride,
        "times": traj.times[take],
        "edges": edges,
    }


def create_app(time_limit: float = DEFAULT_TIME_LIMIT) -> FastAPI:
    app = FastAPI(title="formation-ppc", docs_url=None, redoc_url=None)

    @app.post("/api/check")
    async def api_check(request: Request) -> Response:
        def handler(body: dict) -> Response:
            if "graph" not in body:
                raise ScenarioError("request body must contain a 'graph' object")
            graph = graph_from_dict(body["graph"])
            names = _check_names(body.get("options"))
            reports = {name: CHECKS[name](graph) for name in names}
            if len(names) == 1:
                return _json_response(reports[names[0]].to_json_dict())
            return _json_response(
                {name: r.to_json_dict() for name, r in reports.items()}
            )

        return await _dispatch(request, handler)

    @app.post("/api/simulate")
    async def api_simulate(request: Request) -> Response:
        def handler(body: dict) -> Response:
            if "scenario" not in body:
                raise ScenarioError("request body must contain 'scenario'")
            spec = body["scenario"]
            if isinstance(spec, str):
                scenario = builtin_scenario(spec)
            elif isinstance(spec, dict):
                scenario = scenario_from_dict(spec)
            else:
                raise ScenarioError(
                    "'scenario' must be a built-in name or a scenario object"
                )
            stride = body.get("stride", DEFAULT_STRIDE)
            if not isinstance(stride, int) or isinstance(stride, bool) or stride < 1:
                raise ScenarioError("'stride' must be a positive integer")
            traj = simulate(
                scenario.graph,
                scenario.formation,
                scenario.ppc,
                scenario.sim,
                scenario.initial_array,
                deadline=time.monotonic() + time_limit,
            )
            return _json_response(
                {
                    "summary": traj.summary_dict(),
                    "series": _series_payload(traj, stride),
                }
            )

        return await _dispatch(request, handler)

    @app.post("/api/suggest")
    async def api_suggest(request: Request) -> Response:
        def handler(body: dict) -> Response:
            if "graph" not in body:
                raise ScenarioError("request body must contain a 'graph' object")
            graph = graph_from_dict(body["graph"])
            # "k" is the contracted key; "max_leaders" is accepted as an alias
            if "k" in body and "max_leaders" in body:
                raise ScenarioError("give either 'k' or 'max_leaders', not both")
            max_leaders = body.get("k", body.get("max_leaders"))
            if (
                not isinstance(max_leaders, int)
                or isinstance(max_leaders, bool)
                or max_leaders < 0
            ):
                raise ScenarioError("'k' must be a non-negative integer")
            assignments = suggest_leaders(graph, max_leaders)
            return _json_response(
                {"assignments": [{"leaders": list(a)} for a in assignments]}
            )

        return await _dispatch(request, handler)

    @app.get("/api/scenarios")
    async def api_scenarios() -> Response:
        payload = {
            "scenarios": {
                name: builtin_scenario(name).to_json_dict() for name in BUILTIN_NAMES
            }
        }
        return _json_response(payload)

    return app
