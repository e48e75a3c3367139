import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from elsim.engine import (ScenarioConfig, Simulation, SimulationDiverged, WorldState,
                          fit_exponential_rate, metrics, time_to_threshold,
                          uniform_stream)
from elsim.leader import build_leader_table, make_leader
from elsim.network import GainSet, Topology
from elsim.transform import x_initial
from elsim.verify import (reference_config, reference_gains, suite_convergence,
                          suite_equivalence)


def test_leader_transformed_kind_values(params):
    model = make_leader("ramp_sine_transformed", params)
    assert_allclose(model.x0(np.array([0.0]))[0], [0.0, 0.0])
    assert_allclose(model.z0(np.array([0.0]))[0], [2.0, 1.0])
    assert_allclose(model.z0dot(np.array([0.0]))[0], [0.0, 0.0])
    t = np.array([math.pi / 2])
    assert_allclose(model.x0(t)[0], [math.pi, 1.0], atol=1e-12)
    assert_allclose(model.z0dot(t)[0], [0.0, -1.0], atol=1e-12)
    ts = np.linspace(0, 100, 100001)
    sup = np.linalg.norm(model.z0dot(ts), axis=1).max()
    assert sup == pytest.approx(1.0, abs=1e-6)


def test_leader_joint_kind_consistency(params):
    model = make_leader("ramp_sine_joint", params)
    table = build_leader_table(model, params, dt=1e-3, n_steps=2000)
    # table x0 must differentiate back to z0 (midpoint finite differences)
    dx = (table.x0[2:] - table.x0[:-2]) / (2 * (table.t[1] - table.t[0]))
    assert np.abs(dx - table.z0[1:-1]).max() < 1e-5
    assert_allclose(table.q0[0], [0.0, 0.0])
    assert table.zbar0_sampled < 1.0


def test_leader_integrated_joint_trajectory(params):
    model = make_leader("ramp_sine_transformed", params)
    table = build_leader_table(model, params, dt=1e-3, n_steps=1000)
    from elsim.transform import a_matrix
    dq = (table.q0[2:] - table.q0[:-2]) / (2 * (table.t[1] - table.t[0]))
    for k in range(1, 2000, 200):
        expected = a_matrix(params, table.q0[k]) @ table.z0[k]
        assert_allclose(dq[k - 1], expected, atol=1e-4)


def test_unknown_leader_kind(params):
    with pytest.raises(ValueError):
        make_leader("warp_drive", params)


def test_initial_state_consistency(params):
    cfg = reference_config(t_end=0.01, decimation=1)
    sim = Simulation(cfg)
    st = sim.initial_state()
    n = cfg.topology.n
    blocks = st.y.reshape(n, 5, 2)
    lo, hi = cfg.x_range
    for i in range(n):
        q, z, x, xh, zh = blocks[i]
        assert np.all(x >= lo) and np.all(x <= hi)
        assert np.all(z >= lo) and np.all(z <= hi)
        assert_allclose(xh, x, atol=0.0)
        assert_allclose(zh, [0.0, 0.0], atol=0.0)
        assert_allclose(x_initial(params, q), x, atol=1e-9)
        assert_allclose(st.x_meas[i], x, atol=0.0)
    st2 = Simulation(cfg).initial_state()
    assert_allclose(st2.y, st.y, atol=0.0)


def test_uniform_stream_deterministic():
    a = [next(iter([u])) for u, _ in zip(uniform_stream(42), range(10))]
    b = [next(iter([u])) for u, _ in zip(uniform_stream(42), range(10))]
    assert a == b
    assert all(0.0 <= v < 1.0 for v in a)
    assert len(set(a)) == 10


def test_zero_dynamics_equilibrium(params):
    # all agents on the constant-velocity leader with exact observers: all
    # errors stay at rounding level while the states advance
    vz = np.array([0.3, 0.0])
    leader = make_leader("constant_velocity", params, vz=vz)
    for mode in ("exact", "boundary_layer"):
        cfg = reference_config(t_end=0.5, dt=1e-3, decimation=1, sign_mode=mode,
                               leader_kind="constant_velocity")
        sim = Simulation(cfg, leader=leader)
        n = cfg.topology.n
        y = np.zeros(10 * n)
        for i in range(n):
            y[10 * i:10 * i + 10] = np.concatenate(
                [np.zeros(2), vz, np.zeros(2), np.zeros(2), vz])
        state = WorldState(y=y, x_meas=np.zeros((n, 2)), k=0)
        for _ in range(200):
            state = sim.step(state)
        blocks = state.y.reshape(n, 5, 2)
        t = 200 * cfg.dt
        for i in range(n):
            q, z, x, xh, zh = blocks[i]
            assert_allclose(z, vz, atol=1e-12)
            assert_allclose(zh, vz, atol=1e-12)
            assert_allclose(x, vz * t, atol=1e-12)
            assert_allclose(xh, x, atol=1e-12)
        assert abs(blocks[0][0][0] - blocks[1][0][0]) < 1e-12  # agents agree


def test_step_matches_run(params):
    cfg = reference_config(t_end=0.05, dt=1e-3, decimation=50)
    sim = Simulation(cfg)
    state = sim.initial_state()
    for _ in range(sim.n_steps):
        state = sim.step(state)
    log = Simulation(cfg).run()
    final = np.concatenate([log.q[-1].ravel(), log.z[-1].ravel(), log.x[-1].ravel(),
                            log.xhat[-1].ravel(), log.zhat[-1].ravel()])
    blocks = state.y.reshape(cfg.topology.n, 5, 2)
    mine = np.concatenate([blocks[:, j, :].ravel() for j in range(5)])
    assert_allclose(mine, final, atol=0.0)


def test_step_beyond_horizon_raises():
    cfg = reference_config(t_end=0.002, dt=1e-3, decimation=1)
    sim = Simulation(cfg)
    state = sim.initial_state()
    state = sim.step(sim.step(state))
    with pytest.raises(ValueError):
        sim.step(state)


def test_divergence_detected():
    cfg = reference_config(t_end=100.0, dt=0.5, decimation=100, sign_mode="exact")
    with pytest.raises(SimulationDiverged) as err:
        Simulation(cfg).run()
    assert err.value.t > 0.0


def test_acceleration_bound_audited():
    gains = GainSet(ko1=3, ko2=5, kc1=5, kc2=6, kc3=3, kappa=2.0, zbar0=0.01)
    with pytest.raises(ValueError, match="zbar0"):
        Simulation(reference_config(gains=gains, t_end=1.0))


def test_config_validation():
    with pytest.raises(ValueError):
        reference_config(dt=-1.0)
    with pytest.raises(ValueError):
        reference_config(t_end=0.0015, dt=1e-3)  # not a whole number of steps
    with pytest.raises(ValueError):
        reference_config(sign_mode="sometimes")
    with pytest.raises(ValueError):
        reference_config(observer_feed="psychic")
    with pytest.raises(ValueError):
        reference_config(x_range=(2.0, -2.0))
    with pytest.raises(ValueError):
        reference_config(decimation=0)


def test_fit_exponential_rate_fixtures():
    t = np.linspace(0, 10, 2001)
    assert fit_exponential_rate(t, np.full_like(t, 3.7)) == pytest.approx(0.0, abs=1e-12)
    assert fit_exponential_rate(t, np.exp(-2.0 * t)) == pytest.approx(-2.0, abs=1e-6)
    assert fit_exponential_rate(t, 5.0 * np.exp(-0.5 * t)) == pytest.approx(-0.5, abs=1e-6)


def test_time_to_threshold():
    t = np.linspace(0, 10, 101)
    series = np.exp(-t)
    t_star = time_to_threshold(t, series, 0.05)
    assert t_star == pytest.approx(3.1, abs=0.11)
    assert time_to_threshold(t, np.full_like(t, 2.0), 1.0) is None
    assert time_to_threshold(t, np.zeros_like(t), 1.0) == 0.0


def test_metrics_structure(benchmark_log):
    m = metrics(benchmark_log)
    assert len(m["agents"]) == 4
    for a in m["agents"]:
        assert a["peak_torque"] > 0.0
        assert a["final_vel_err"] < 0.05
    assert m["consensus_rate"] < 0.0
    assert m["observer_rate"] < 0.0


def test_model_equivalence_suite():
    assert suite_equivalence(seed=0).ok


def test_integrator_order_suite():
    assert suite_convergence(seed=0).ok
