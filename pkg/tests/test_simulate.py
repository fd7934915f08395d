"""Closed-loop simulation: exactness, invariants, policies, recording."""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from formation_ppc import _kernels
from formation_ppc.errors import (
    DivergenceError,
    FormationSpecError,
    FunnelViolationError,
    ScenarioError,
    SimulationTimeout,
)
from formation_ppc.funnels import FunnelSettings, PerformanceFunnel, PpcConfig
from formation_ppc.graphs import (
    FormationSpec,
    LeaderFollowerGraph,
    displacement_matrix,
    incidence_matrix,
)
from formation_ppc.simulate import (
    SimConfig,
    adversarial_init,
    leaderless_edge_rhs,
    measure_decay,
    positions_for_edge_errors,
    simulate,
)

from conftest import line, ring, star

PAIR = LeaderFollowerGraph(
    nodes=((1, "follower"), (2, "follower")), edges=((1, 1, 2),)
)


def pair_setup(rho0=1.1, rho_inf=0.1, rate=1.0, gain=1.0):
    formation = FormationSpec(dimension=1, displacements=((1, (0.0,)),))
    ppc = PpcConfig(default=FunnelSettings(rho0, rho_inf, rate, gain))
    return formation, ppc


def zero_formation(g: LeaderFollowerGraph, d: int = 1) -> FormationSpec:
    return FormationSpec(
        dimension=d, displacements=tuple((e, (0.0,) * d) for e in g.edge_ids)
    )


def default_ppc(rho0=10.0, rho_inf=10.0, rate=1.0, gain=1.0) -> PpcConfig:
    return PpcConfig(default=FunnelSettings(rho0, rho_inf, rate, gain))


# -- exact solutions -----------------------------------------------------------


def test_pair_matches_closed_form():
    # one leaderless edge: xbar_dot = -2 xbar, so xbar(t) = xbar0 e^{-2t}
    formation, ppc = pair_setup()
    traj = simulate(
        PAIR, formation, ppc, SimConfig(dt=1e-3, horizon=2.0), [[0.0], [-0.5]]
    )
    assert traj.completed and traj.violations == ()
    expected = 0.5 * np.exp(-2.0 * traj.times)
    np.testing.assert_allclose(traj.edge_errors[:, 0, 0], expected, rtol=1e-10)


def test_rk4_is_fourth_order():
    formation, ppc = pair_setup()
    exact = 0.5 * math.exp(-2.0)

    def error_at(dt: float) -> float:
        traj = simulate(
            PAIR, formation, ppc, SimConfig(dt=dt, horizon=1.0), [[0.0], [-0.5]]
        )
        return abs(float(traj.edge_errors[-1, 0, 0]) - exact)

    e1, e2, e3 = error_at(0.05), error_at(0.025), error_at(0.0125)
    assert e1 / e2 >= 15.0
    assert e2 / e3 >= 15.0


def test_euler_is_first_order():
    formation, ppc = pair_setup()
    exact = 0.5 * math.exp(-2.0)

    def error_at(dt: float) -> float:
        traj = simulate(
            PAIR,
            formation,
            ppc,
            SimConfig(dt=dt, horizon=1.0, integrator="euler"),
            [[0.0], [-0.5]],
        )
        return abs(float(traj.edge_errors[-1, 0, 0]) - exact)

    ratio = error_at(0.01) / error_at(0.005)
    assert 1.8 <= ratio <= 2.2


def test_adversarial_star_initial_growth():
    g = star(4)
    funnel = PerformanceFunnel(rho0=1.0, rho_inf=0.1, rate=1.0)
    p0 = adversarial_init(g, funnel)
    ppc = default_ppc(rho0=1.0, rho_inf=0.1)
    traj = simulate(g, zero_formation(g), ppc, SimConfig(dt=1e-3, horizon=1e-3), p0)
    # every error starts at rho0 - delta, the anchor exactly grows at +1
    assert np.all(np.abs(np.abs(traj.edge_errors[0, :, 0]) - 0.999) < 1e-12)
    assert measure_decay(traj, 1) == pytest.approx(1.0, abs=1e-12)


def test_adversarial_cycle_rates():
    # worst-case initial decay of the anchor edge error, exact small integers
    for m, expected in ((3, -3.0), (4, -2.0), (5, -1.0), (6, 0.0), (7, 0.0)):
        g = ring(m)
        funnel = PerformanceFunnel(rho0=1.0, rho_inf=0.1, rate=1.0)
        p0 = adversarial_init(g, funnel)
        traj = simulate(
            g, zero_formation(g), default_ppc(1.0, 0.1), SimConfig(dt=1e-3, horizon=1e-3), p0
        )
        assert measure_decay(traj, 0) == pytest.approx(expected, abs=1e-12)


def test_adversarial_init_validation():
    funnel = PerformanceFunnel(rho0=1.0, rho_inf=0.1, rate=1.0)
    with pytest.raises(FormationSpecError):
        adversarial_init(star(4, leaders={0}), funnel)
    with pytest.raises(FormationSpecError):
        adversarial_init(line(4), funnel)  # neither star nor cycle
    with pytest.raises(FormationSpecError):
        adversarial_init(star(4), funnel, delta=1.0)
    with pytest.raises(FormationSpecError):
        adversarial_init(star(4), funnel, delta=-0.1)


def test_measure_decay_rejects_zero_error():
    formation, ppc = pair_setup()
    traj = simulate(
        PAIR, formation, ppc, SimConfig(dt=1e-3, horizon=1e-3), [[0.0], [0.0]]
    )
    with pytest.raises(FormationSpecError):
        measure_decay(traj, 1)


# -- structural invariants -----------------------------------------------------


def test_cycle_sums_conserved(rng):
    # signed edge errors around the ring telescope to a constant at all times
    for stride in (1, 7):
        g = ring(5, leaders={2})
        anchors = {i: tuple(rng.uniform(-0.2, 0.2, size=2)) for i in g.node_ids}
        formation = FormationSpec.from_anchors(2, g, anchors)
        p0 = rng.uniform(-0.1, 0.1, size=(5, 2))
        ppc = default_ppc(rho0=5.0, rho_inf=0.5)
        traj = simulate(
            g, formation, ppc, SimConfig(dt=1e-3, horizon=1.0, record_stride=stride), p0
        )
        pdes = displacement_matrix(g, formation)
        walk = traj.edge_errors + pdes[None, :, :]  # = D^T p per sample
        drift = np.abs(walk.sum(axis=1))
        assert float(drift.max()) < 1e-12


def test_leaderless_error_norm_non_increasing(rng):
    g = LeaderFollowerGraph(
        nodes=tuple((i, "follower") for i in range(1, 6)),
        edges=((1, 1, 2), (2, 2, 3), (3, 3, 1), (4, 1, 4), (5, 4, 5), (6, 5, 3)),
    )
    p0 = rng.uniform(-1.0, 1.0, size=(5, 1))
    traj = simulate(
        g, zero_formation(g), default_ppc(), SimConfig(dt=1e-2, horizon=3.0), p0
    )
    norms = np.linalg.norm(traj.edge_errors[:, :, 0], axis=1)
    assert np.all(np.diff(norms) <= 1e-12)


def test_leaderless_edge_rhs_is_minus_laplacian(rng):
    g = ring(4)
    xbar = rng.normal(size=(4, 2))
    out = leaderless_edge_rhs(g, xbar)
    D = incidence_matrix(g).astype(float)
    np.testing.assert_allclose(out, -(D.T @ D) @ xbar, atol=1e-13)
    with pytest.raises(FormationSpecError):
        leaderless_edge_rhs(g, xbar[:3])


def test_positions_for_edge_errors_round_trip():
    g = ring(3)
    p = positions_for_edge_errors(g, np.array([1.0, -1.0, 0.0]))
    D = incidence_matrix(g).astype(float)
    np.testing.assert_allclose(D.T @ p, [[1.0], [-1.0], [0.0]], atol=1e-12)
    with pytest.raises(FormationSpecError):
        positions_for_edge_errors(g, np.array([1.0, 1.0, 1.0]))


# -- backends ------------------------------------------------------------------


@pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba unavailable")
def test_backends_agree(rng):
    g = star(3, leaders={0})
    formation = FormationSpec(
        dimension=2,
        displacements=tuple((e, tuple(rng.uniform(-0.2, 0.2, 2))) for e in g.edge_ids),
    )
    p0 = rng.uniform(-0.1, 0.1, size=(4, 2))
    ppc = default_ppc(rho0=2.0, rho_inf=0.2, gain=3.0)
    cfg = SimConfig(dt=1e-3, horizon=0.5)
    a = simulate(g, formation, ppc, cfg, p0, backend="numpy")
    b = simulate(g, formation, ppc, cfg, p0, backend="numba")
    assert np.array_equal(a.times, b.times)
    np.testing.assert_allclose(a.positions, b.positions, atol=1e-12, rtol=0)
    assert a.violations == b.violations


def test_unknown_backend_rejected():
    formation, ppc = pair_setup()
    with pytest.raises(ValueError):
        simulate(
            PAIR, formation, ppc, SimConfig(horizon=1e-3), [[0.0], [-0.5]],
            backend="cuda",
        )


# -- violations and policies ---------------------------------------------------


def shrinking_pair():
    # xbar decays at rate 2, the funnel at rate 5: crossing near t = 0.26
    return pair_setup(rho0=1.1, rho_inf=0.01, rate=5.0)


def test_record_and_continue_logs_first_crossing():
    formation, ppc = shrinking_pair()
    traj = simulate(
        PAIR, formation, ppc, SimConfig(dt=1e-3, horizon=1.0), [[0.0], [-0.5]]
    )
    assert traj.completed
    assert len(traj.violations) == 1
    event = traj.violations[0]
    assert (event.edge, event.dim) == (1, 0)
    assert 0.2 < event.time < 0.35
    # the logged value sits on or outside the funnel at the logged time
    radius = float(ppc.funnel_for(1).radius(event.time))
    assert abs(event.value) >= radius
    assert traj.max_normalized_error >= 1.0
    assert traj.times[-1] == pytest.approx(1.0)


def test_halt_truncates_at_first_crossing():
    formation, ppc = shrinking_pair()
    traj = simulate(
        PAIR,
        formation,
        ppc,
        SimConfig(dt=1e-3, horizon=1.0, violation_policy="halt"),
        [[0.0], [-0.5]],
    )
    assert not traj.completed
    assert len(traj.violations) == 1
    assert traj.times[-1] == pytest.approx(traj.violations[0].time)
    assert traj.times[-1] < 0.5


def test_violations_independent_of_stride():
    formation, ppc = shrinking_pair()
    runs = [
        simulate(
            PAIR,
            formation,
            ppc,
            SimConfig(dt=1e-3, horizon=1.0, record_stride=s),
            [[0.0], [-0.5]],
        )
        for s in (1, 97)
    ]
    assert runs[0].violations == runs[1].violations


def test_outside_initial_condition_rejected():
    formation, ppc = pair_setup(rho0=1.0)
    with pytest.raises(FunnelViolationError, match=r"\[1\]"):
        simulate(PAIR, formation, ppc, SimConfig(horizon=1.0), [[0.0], [-1.0]])


def test_divergence_raises():
    # explicit Euler on the star consensus with dt far past the stability limit
    g = star(3)
    traj_cfg = SimConfig(dt=1.0, horizon=700.0, integrator="euler")
    p0 = np.array([[0.0], [1.0], [-1.0], [0.5]])
    with pytest.raises(DivergenceError):
        simulate(g, zero_formation(g), default_ppc(rho0=1e6, rho_inf=1e6), traj_cfg, p0)


def test_deadline_raises_timeout():
    formation, ppc = pair_setup()
    with pytest.raises(SimulationTimeout):
        simulate(
            PAIR,
            formation,
            ppc,
            SimConfig(dt=1e-3, horizon=1.0),
            [[0.0], [-0.5]],
            deadline=time.monotonic() - 1.0,
        )


# -- recording -----------------------------------------------------------------


def test_record_stride_row_selection():
    formation, ppc = pair_setup()

    def steps_of(stride: int, horizon: float) -> list[float]:
        traj = simulate(
            PAIR,
            formation,
            ppc,
            SimConfig(dt=0.01, horizon=horizon, record_stride=stride),
            [[0.0], [-0.5]],
        )
        return [round(t / 0.01) for t in traj.times]

    assert steps_of(97, 2.5) == [0, 97, 194, 250]  # final partial row appended
    assert steps_of(1000, 2.5) == [0, 250]
    assert steps_of(100, 2.0) == [0, 100, 200]  # exact multiple, no extra row


def test_record_stride_across_chunks():
    formation, ppc = pair_setup()
    traj = simulate(
        PAIR,
        formation,
        ppc,
        SimConfig(dt=1e-3, horizon=2.5, record_stride=13),
        [[0.0], [-0.5]],
    )
    steps = np.round(traj.times / 1e-3).astype(int)
    assert steps[0] == 0 and steps[-1] == 2500
    assert np.all(np.diff(steps[:-1]) == 13)
    assert len(steps) == 2 + 2500 // 13


def test_trajectory_arrays_read_only():
    formation, ppc = pair_setup()
    traj = simulate(PAIR, formation, ppc, SimConfig(horizon=0.01), [[0.0], [-0.5]])
    with pytest.raises(ValueError):
        traj.positions[0, 0, 0] = 9.9


def test_summary_and_csv(tmp_path, rng):
    g = star(3, leaders={0})
    formation = FormationSpec(
        dimension=2, displacements=tuple((e, (0.0, 0.0)) for e in g.edge_ids)
    )
    traj = simulate(
        g,
        formation,
        default_ppc(rho0=2.0, rho_inf=0.2),
        SimConfig(dt=1e-2, horizon=0.2),
        rng.uniform(-0.1, 0.1, size=(4, 2)),
    )
    summary = traj.summary_dict()
    assert set(summary) == {"max_normalized_error", "violations", "final_errors"}
    assert set(summary["final_errors"]) == {"1", "2", "3"}

    out = tmp_path / "run.csv"
    traj.to_csv(out)
    header = out.read_text().splitlines()[0].split(",")
    d, m, n = 2, g.m, g.n
    assert header == traj.csv_header()
    assert len(header) == 1 + n * d + m * d + m + 1 * d
    assert header[1] == "p_0_0" and header[-1] == "u_0_1"
    table = np.loadtxt(out, delimiter=",", skiprows=1)
    assert table.shape == (len(traj.times), len(header))
    np.testing.assert_allclose(table[:, 0], traj.times)
    np.testing.assert_allclose(
        table[:, 1 : 1 + n * d], traj.positions.reshape(len(traj.times), -1)
    )


# -- configuration validation --------------------------------------------------


def test_sim_config_validation():
    for bad in (
        dict(dt=0.0),
        dict(horizon=-1.0),
        dict(integrator="rk5"),
        dict(violation_policy="explode"),
        dict(record_stride=0),
        dict(record_stride=True),
        dict(record_stride=1.5),
    ):
        with pytest.raises(ScenarioError):
            SimConfig(**bad)


def test_sim_config_json_round_trip():
    cfg = SimConfig(dt=2e-3, horizon=4.0, integrator="euler", record_stride=5)
    assert SimConfig.from_json_dict(cfg.to_json_dict()) == cfg
    with pytest.raises(ScenarioError):
        SimConfig.from_json_dict({"dt": 1e-3, "steps": 100})


def test_horizon_shorter_than_one_step():
    formation, ppc = pair_setup()
    with pytest.raises(ScenarioError):
        simulate(PAIR, formation, ppc, SimConfig(dt=1.0, horizon=0.4), [[0.0], [-0.5]])


def test_initial_position_shape_checks():
    formation, ppc = pair_setup()
    with pytest.raises(ScenarioError):
        simulate(PAIR, formation, ppc, SimConfig(), {1: (0.0,)})
    with pytest.raises(ScenarioError):
        simulate(PAIR, formation, ppc, SimConfig(), np.zeros((3, 1)))
