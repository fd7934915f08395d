"""Time the integration kernels on both backends.

Runs a few closed-loop scenarios end to end through simulate() with
backend="numpy" and backend="numba" and reports the best wall time of
each, plus the speedup. The numba rows disappear when numba is
unavailable or FORMATION_PPC_FORCE_NUMPY is set.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--case NAME ...]
"""

from __future__ import annotations

import argparse
import time
from dataclasses import replace

import numpy as np

from formation_ppc._kernels import HAS_NUMBA
from formation_ppc.funnels import FunnelSettings, PpcConfig
from formation_ppc.graphs import FormationSpec, LeaderFollowerGraph
from formation_ppc.scenarios import builtin_scenario
from formation_ppc.simulate import SimConfig, simulate


def ring_case() -> tuple:
    """Synthetic 12-agent ring, 2-D, 20k steps; exercises the control path."""
    m = 12
    leaders = {0, 3}
    graph = LeaderFollowerGraph(
        nodes=tuple(
            (i, "leader" if i in leaders else "follower") for i in range(m)
        ),
        edges=tuple((k, k, (k + 1) % m) for k in range(m)),
    )
    formation = FormationSpec(
        dimension=2, displacements=tuple((k, (0.0, 0.0)) for k in range(m))
    )
    ppc = PpcConfig(default=FunnelSettings(2.0, 0.5, 0.5, 1.0))
    config = SimConfig(dt=1e-4, horizon=2.0, record_stride=100)
    rng = np.random.default_rng(7)
    p0 = rng.uniform(-0.3, 0.3, size=(m, 2))
    return graph, formation, ppc, config, p0


def scenario_case(name: str, horizon: float | None = None) -> tuple:
    sc = builtin_scenario(name)
    config = sc.sim if horizon is None else replace(sc.sim, horizon=horizon)
    return sc.graph, sc.formation, sc.ppc, config, sc.initial_array


CASES = {
    "platoon": lambda: scenario_case("graphC"),
    "ring": ring_case,
    "robots": lambda: scenario_case("graphB", horizon=0.2),
}


def bench(args_tuple: tuple, backend: str, repeats: int) -> float:
    graph, formation, ppc, config, p0 = args_tuple
    simulate(graph, formation, ppc, config, p0, backend=backend)  # warmup / JIT
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        simulate(graph, formation, ppc, config, p0, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument(
        "--case", action="append", choices=sorted(CASES), default=None,
        help="benchmark only these cases (repeatable; default: all)",
    )
    args = parser.parse_args()

    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    if not HAS_NUMBA:
        print("numba unavailable or disabled; timing the numpy backend only")

    names = args.case or sorted(CASES)
    print(f"{'case':<10} {'steps':>8} {'backend':<8} {'best ms':>10} {'steps/ms':>10}")
    for name in names:
        case = CASES[name]()
        steps = round(case[3].horizon / case[3].dt)
        timings = {}
        for backend in backends:
            timings[backend] = bench(case, backend, args.repeats)
            print(
                f"{name:<10} {steps:>8} {backend:<8} "
                f"{timings[backend] * 1e3:>10.1f} "
                f"{steps / (timings[backend] * 1e3):>10.1f}"
            )
        if len(timings) == 2:
            print(f"{'':<10} {'':>8} speedup  {timings['numpy'] / timings['numba']:>10.1f}x")


if __name__ == "__main__":
    main()
