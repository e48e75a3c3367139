"""Runnable verification suites: every module invariant as a pass/fail check.

Each suite is a function (seed) -> SuiteResult; the registry drives both
``elsim verify`` and the test suite. Randomized suites draw from a seeded
generator so failures replay exactly.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from . import controller, observer
from .dynamics import (PhysicalParams, derive_o_params, coriolis, gravity,
                       inertia, inertia_eigenvalues)
from .engine import (ScenarioConfig, Simulation, energy_drift, equivalence_oracle,
                     reference_derivative, stage_derivative)
from .network import (GainSet, SpanningTreeError, Topology, laplacian, pq_certificate)
from .transform import (a_matrix, d_matrix, delta, drift, pde_residual,
                        transform_matrix)


@dataclass
class SuiteResult:
    name: str
    ok: bool
    lines: list[str]


def reference_physical() -> PhysicalParams:
    """The four-robot benchmark arm used throughout the examples."""
    return PhysicalParams(m1=0.5, m2=0.4, l1=0.4, l2=0.3, lc1=0.2, lc2=0.15,
                          j1=0.0067, j2=0.003, g=9.8)


def reference_topology() -> Topology:
    """Four followers: leader -> 1 -> 2 -> 4 -> 3 -> 1."""
    adj = np.zeros((4, 4))
    adj[1, 0] = 1  # 2 hears 1
    adj[0, 2] = 1  # 1 hears 3
    adj[3, 1] = 1  # 4 hears 2
    adj[2, 3] = 1  # 3 hears 4
    return Topology(adjacency=adj, leader_links=np.array([1.0, 0.0, 0.0, 0.0]))


def reference_gains() -> GainSet:
    return GainSet(ko1=3.0, ko2=5.0, kc1=5.0, kc2=6.0, kc3=3.0, kappa=2.0, zbar0=1.0)


def reference_config(**overrides) -> ScenarioConfig:
    base = dict(physical=reference_physical(), topology=reference_topology(),
                gains=reference_gains(), sign_mode="boundary_layer", epsilon=0.01,
                dt=1e-3, t_end=30.0, decimation=10, leader_kind="ramp_sine_joint",
                x_range=(-3.0, 3.0), seed=12, observer_feed="reconstructed")
    base.update(overrides)
    return ScenarioConfig(**base)


# initial conditions keeping the equivalence-oracle trajectory in a gentle
# regime (near-folded elbow, small initial velocity); the deviation floor is
# far below the tolerance there, while unit torque near the stretched
# configuration whirls the elbow at >100 rad/s and is truncation-dominated.
EQUIV_Q_INIT = (0.0, 2.7)
EQUIV_Z_INIT = (0.1, 0.05)


def equiv_qd_init(params):
    """Joint velocities matching EQUIV_Z_INIT at EQUIV_Q_INIT."""
    q2 = EQUIV_Q_INIT[1]
    z1, z2 = EQUIV_Z_INIT
    m = inertia(params, [0.0, q2])
    det = m[0, 0] * m[1, 1] - m[0, 1] ** 2
    qd2 = z2 / math.sqrt(det / m[0, 0])
    qd1 = (z1 - m[0, 1] * qd2) / m[0, 0]
    return qd1, qd2


def random_spanning_topology(rng: np.random.Generator, n: int) -> Topology:
    """Random digraph guaranteed to contain a leader-rooted spanning tree."""
    order = rng.permutation(n)
    adj = np.zeros((n, n))
    b = np.zeros(n)
    for rank, i in enumerate(order):
        if rank == 0 or rng.random() < 0.3:
            b[i] = 1.0
        else:
            parent = order[rng.integers(rank)]
            adj[i, parent] = 1.0
    extra = rng.random((n, n)) < 0.25
    np.fill_diagonal(extra, False)
    adj = np.maximum(adj, extra.astype(float))
    return Topology(adjacency=adj, leader_links=b)


def random_disconnected_topology(rng: np.random.Generator, n: int) -> Topology:
    """Random digraph with a nonempty follower set unreachable from the leader."""
    top = random_spanning_topology(rng, n)
    adj = top.adjacency.copy()
    b = top.leader_links.copy()
    k = int(rng.integers(1, n + 1))
    cut = rng.permutation(n)[:k]
    inside = np.zeros(n, dtype=bool)
    inside[cut] = True
    b[cut] = 0.0
    for i in np.flatnonzero(inside):
        adj[i, ~inside] = 0.0
    return Topology(adjacency=adj, leader_links=b)


def suite_dynamics(seed: int = 0) -> SuiteResult:
    params = derive_o_params(reference_physical())
    rng = np.random.default_rng(seed)
    lines = []
    ok = True

    worst_sym = worst_det = 0.0
    lo_margin = hi_margin = 0.0
    for q2 in rng.uniform(-10 * np.pi, 10 * np.pi, size=1000):
        m = inertia(params, [0.0, q2])
        worst_sym = max(worst_sym, abs(m[0, 1] - m[1, 0]))
        det = np.linalg.det(m)
        worst_det = min(det, worst_det) if worst_det else det
        lo, hi = inertia_eigenvalues(params, q2)
        lo_margin = min(lo_margin, lo - (params.km - 1e-12))
        hi_margin = min(hi_margin, (params.kM + 1e-12) - hi)
    cond = worst_sym == 0.0 and worst_det > 0.0 and lo_margin >= 0.0 and hi_margin >= 0.0
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] inertia symmetric, det>0, eigs in "
                 f"[km, kM] over 1000 random elbow angles")

    worst = 0.0
    for _ in range(200):
        q = rng.uniform(-np.pi, np.pi, 2)
        qd = rng.uniform(-2, 2, 2)
        a = rng.uniform(-3, 3)
        lhs = coriolis(params, q, a * qd) @ (a * qd)
        rhs = a**2 * (coriolis(params, q, qd) @ qd)
        worst = max(worst, np.abs(lhs - rhs).max())
    cond = worst < 1e-12
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] Coriolis term quadratic in velocity "
                 f"(worst {worst:.2e})")

    drift_val = energy_drift(params, t_end=5.0, dt=1e-4)
    cond = drift_val < 1e-6
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] kinetic energy conserved under gravity "
                 f"compensation: drift {drift_val:.2e} < 1e-6 over 5 s")
    return SuiteResult("dynamics", ok, lines)


def suite_pde(seed: int = 0) -> SuiteResult:
    params = derive_o_params(reference_physical())
    rng = np.random.default_rng(seed)
    lines = []
    ok = True

    grid = np.linspace(-np.pi, np.pi, 200)
    res_a = max(abs(pde_residual(params, q2)) for q2 in grid)
    res_f = max(abs(pde_residual(params, q2, derivative="fd", h=1e-6)) for q2 in grid)
    cond = res_a < 1e-9
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] cross-term cancellation residual "
                 f"(analytic) {res_a:.2e} < 1e-9")
    cond = res_f < 1e-5
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] residual (finite differences) "
                 f"{res_f:.2e} < 1e-5")

    worst_at = worst_d = 0.0
    for q2 in rng.uniform(-10 * np.pi, 10 * np.pi, size=1000):
        q = np.array([0.0, q2])
        t = transform_matrix(params, q)
        worst_at = max(worst_at, np.abs(a_matrix(params, q) @ t - np.eye(2)).max())
        m = inertia(params, q)
        worst_d = max(worst_d, np.abs(d_matrix(params, q) - t @ np.linalg.inv(m)).max())
    cond = worst_at < 1e-12 and worst_d < 1e-12
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] A T = I ({worst_at:.2e}) and "
                 f"D = T M^-1 ({worst_d:.2e}) to 1e-12")

    z = rng.normal(size=2)
    f = drift(params, [0.0, 1.1], z)
    cond = f[0] == 0.0 and f[1] == delta(params, 1.1) * z[0] ** 2
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] drift vector is exactly "
                 f"[0, delta*z1^2]")
    return SuiteResult("pde", ok, lines)


def suite_equivalence(seed: int = 0) -> SuiteResult:
    params = derive_o_params(reference_physical())
    qd0 = equiv_qd_init(params)
    lines = []
    dev = max(equivalence_oracle(params, t_end=10.0, dt=1e-4,
                                 q_init=EQUIV_Q_INIT, qd_init=qd0))
    ok = dev < 1e-6
    lines.append(f"[{'PASS' if ok else 'FAIL'}] joint-space vs transformed model: "
                 f"max (q, z) deviation {dev:.2e} < 1e-6 (10 s, dt 1e-4)")
    dev2 = max(equivalence_oracle(params, t_end=10.0, dt=2e-4,
                                  q_init=EQUIV_Q_INIT, qd_init=qd0))
    cond = dev2 / dev > 8.0
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] deviation shrinks at integrator order: "
                 f"dev(2e-4)/dev(1e-4) = {dev2 / dev:.1f} > 8")
    return SuiteResult("equivalence", ok, lines)


def suite_lemma2(seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    lines = []
    ok = True
    worst_h = np.inf
    worst_q = np.inf
    for _ in range(100):
        top = random_spanning_topology(rng, int(rng.integers(1, 9)))
        cert = pq_certificate(top)
        worst_h = min(worst_h, cert.h.min())
        worst_q = min(worst_q, cert.lambda_min_q)
    cond = worst_h > 0.0 and worst_q > 0.0
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] 100 spanning-tree digraphs: all h > 0 "
                 f"(min {worst_h:.3g}), lambda_min(Q) > 0 (min {worst_q:.3g})")

    rejected = 0
    for _ in range(100):
        top = random_disconnected_topology(rng, int(rng.integers(2, 9)))
        try:
            pq_certificate(top)
        except SpanningTreeError:
            rejected += 1
    cond = rejected == 100
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] 100 leader-disconnected digraphs "
                 f"rejected ({rejected}/100)")
    return SuiteResult("lemma2", ok, lines)


def suite_prooffacts(seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    lines = []
    ok = True

    hurwitz_ok = all(
        observer.is_hurwitz(rng.uniform(1e-3, 20), rng.uniform(1e-3, 20))
        for _ in range(100)
    )
    boundary_flagged = not observer.is_hurwitz(2.0, 0.0)
    cond = hurwitz_ok and boundary_flagged
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] error matrix Hurwitz for 100 random "
                 f"positive gain pairs; zero gain flagged")

    cert = pq_certificate(reference_topology())
    pl = np.kron(np.diag(cert.p_diag) @ cert.laplacian, np.eye(2))
    worst = np.inf
    for _ in range(1000):
        s = rng.normal(size=8) * 10 ** rng.uniform(-3, 2)
        worst = min(worst, float(s @ pl @ np.sign(s)))
    cond = worst >= -1e-12
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] s' (P L kron I) sign(s) >= 0 "
                 f"(min {worst:.2e} over 1000 draws)")

    norm_ok = all(
        np.linalg.norm(v, 1) >= np.linalg.norm(v) - 1e-15
        for v in (rng.normal(size=2) for _ in range(1000))
    )
    ok &= norm_ok
    lines.append(f"[{'PASS' if norm_ok else 'FAIL'}] one-norm dominates two-norm on "
                 f"1000 random vectors")

    worst_k = 0.0
    for _ in range(50):
        a = rng.normal(size=(rng.integers(1, 4), rng.integers(1, 4)))
        c = rng.normal(size=(a.shape[1], rng.integers(1, 4)))
        b = rng.normal(size=(rng.integers(1, 4), rng.integers(1, 4)))
        d = rng.normal(size=(b.shape[1], rng.integers(1, 4)))
        lhs = np.kron(a, b) @ np.kron(c, d)
        rhs = np.kron(a @ c, b @ d)
        worst_k = max(worst_k, np.abs(lhs - rhs).max())
        worst_k = max(worst_k, np.abs(np.kron(a, b).T - np.kron(a.T, b.T)).max())
    cond = worst_k < 1e-12
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] Kronecker product identities "
                 f"(worst {worst_k:.2e})")
    return SuiteResult("prooffacts", ok, lines)


def _random_world(rng, n):
    return (rng.normal(scale=1.5, size=(n, 2)), rng.normal(scale=1.5, size=(n, 2)),
            rng.normal(scale=1.5, size=(n, 2)), rng.normal(scale=1.5, size=(n, 2)),
            rng.normal(scale=1.5, size=2), rng.normal(scale=1.5, size=2))


def stacked_control(params, top, gains, q, xs, xh, zh, x0, z0, mode, eps):
    """Dense Kronecker-form control assembly; oracle for the per-agent path."""
    n = top.n
    lb = laplacian(top) + np.diag(top.leader_links)
    lb2 = np.kron(lb, np.eye(2))
    x_r = lb2 @ (xs.ravel() - np.tile(x0, n))
    z_r = lb2 @ (zh.ravel() - np.tile(z0, n))
    s = z_r + gains.kappa * x_r
    sgn = controller.signum(s, mode, eps)
    f = np.concatenate([drift(params, q[i], zh[i]) for i in range(n)])
    xt = (xh - xs).ravel()
    rhs = gains.kc1 * xt - gains.kc2 * s - gains.kc3 * sgn - f
    dinv = np.zeros((2 * n, 2 * n))
    for i in range(n):
        d = d_matrix(params, q[i])
        dinv[2 * i:2 * i + 2, 2 * i:2 * i + 2] = np.linalg.inv(d)
    return (dinv @ rhs).reshape(n, 2), s.reshape(n, 2), x_r.reshape(n, 2), z_r.reshape(n, 2)


def suite_stacked(seed: int = 0) -> SuiteResult:
    params = derive_o_params(reference_physical())
    gains = reference_gains()
    rng = np.random.default_rng(seed)
    lines = []
    worst = 0.0
    for trial in range(100):
        n = int(rng.integers(1, 7))
        top = random_spanning_topology(rng, n)
        q, xs, xh, zh = (rng.normal(scale=1.5, size=(n, 2)) for _ in range(4))
        x0, z0 = rng.normal(scale=1.5, size=2), rng.normal(scale=1.5, size=2)
        mode = "exact" if trial % 2 == 0 else "boundary_layer"
        u_dense, s_dense, x_r_dense, z_r_dense = stacked_control(
            params, top, gains, q, xs, xh, zh, x0, z0, mode, 0.01)
        for i in range(n):
            view = controller.neighbor_view(i, top, xs, xh, zh, x0, z0)
            x_ir, z_ir = controller.local_differences(view)
            s_i = controller.sliding_variable(x_ir, z_ir, gains.kappa)
            u_i = controller.control_input(params, q[i], xh[i] - xs[i], s_i, zh[i],
                                           gains, mode, 0.01)
            worst = max(worst,
                        np.abs(x_ir - x_r_dense[i]).max(),
                        np.abs(z_ir - z_r_dense[i]).max(),
                        np.abs(s_i - s_dense[i]).max(),
                        np.abs(u_i - u_dense[i]).max())
    ok = worst < 1e-12
    lines = [f"[{'PASS' if ok else 'FAIL'}] per-agent differences/sliding/control match "
             f"the dense Kronecker forms on 100 random worlds (worst {worst:.2e})"]

    # synchronous-snapshot check: compiled stage derivative vs module assembly
    top = reference_topology()
    worst_k = 0.0
    for _ in range(20):
        y = rng.normal(scale=0.5, size=40)
        xu = rng.normal(scale=0.5, size=(4, 2))
        x0, z0 = rng.normal(size=2), rng.normal(size=2)
        d1, u1, s1 = stage_derivative(params, top, gains, y, xu, x0, z0,
                                      "boundary_layer", 0.01)
        d2, u2, s2 = reference_derivative(params, top, gains, y, xu, x0, z0,
                                          "boundary_layer", 0.01)
        scale = max(1.0, np.abs(d2).max())
        worst_k = max(worst_k, np.abs(d1 - d2).max() / scale,
                      np.abs(u1 - u2).max() / scale, np.abs(s1 - s2).max() / scale)
    cond = worst_k < 1e-14
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] compiled stage derivative matches the "
                 f"agent-by-agent reference to 1e-14 relative (worst {worst_k:.2e})")
    return SuiteResult("stacked", ok, lines)


def suite_observer(seed: int = 0) -> SuiteResult:
    params = derive_o_params(reference_physical())
    gains = reference_gains()
    lines = []
    ok = True

    # single agent, closed loop; channel-1 observation error must follow the
    # constant linear error system exactly (matrix exponential oracle)
    top = Topology(adjacency=np.zeros((1, 1)), leader_links=np.ones(1))
    cfg = reference_config(topology=top, t_end=5.0, dt=1e-4, decimation=10,
                           observer_feed="exact", seed=seed + 3)
    log = Simulation(cfg).run()
    e0 = np.array([log.xhat[0, 0, 0] - log.x[0, 0, 0],
                   log.zhat[0, 0, 0] - log.z[0, 0, 0]])
    atilde = observer.error_matrix(gains)
    worst = 0.0
    for k in range(0, log.t.size, 50):
        expected = expm(atilde * log.t[k]) @ e0
        got = np.array([log.xhat[k, 0, 0] - log.x[k, 0, 0],
                        log.zhat[k, 0, 0] - log.z[k, 0, 0]])
        worst = max(worst, np.abs(got - expected).max())
    cond = worst < 1e-8
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] channel-1 observation error follows the "
                 f"linear error system (vs matrix exponential, worst {worst:.2e} < 1e-8)")

    eigs = observer.error_eigenvalues(gains)
    expected = np.array([-1.5 + 1j * math.sqrt(11) / 2, -1.5 - 1j * math.sqrt(11) / 2])
    cond = (np.abs(np.sort_complex(eigs) - np.sort_complex(expected)).max() < 1e-12)
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] error-matrix eigenvalues at gains (3, 5) "
                 f"are -1.5 +/- i sqrt(11)/2")

    import inspect
    sig = inspect.signature(observer.observer_derivative)
    cond = "z" not in sig.parameters
    ok &= cond
    lines.append(f"[{'PASS' if cond else 'FAIL'}] observer signature has no true-velocity "
                 f"input (output feedback by construction)")
    return SuiteResult("observer", ok, lines)


def suite_convergence(seed: int = 0) -> SuiteResult:
    # smooth loop: wide boundary layer, mild initial set, exact-x feed so the
    # deliberately second-order measurement reconstruction does not mask the
    # integrator order
    lines = []
    finals = {}
    for dt in (2e-3, 1e-3, 5e-4):
        cfg = reference_config(dt=dt, t_end=2.0, decimation=int(round(2.0 / dt)),
                               epsilon=0.1, x_range=(-1.0, 1.0), seed=12,
                               observer_feed="exact")
        log = Simulation(cfg).run()
        finals[dt] = np.concatenate([log.q[-1].ravel(), log.z[-1].ravel(),
                                     log.x[-1].ravel(), log.xhat[-1].ravel(),
                                     log.zhat[-1].ravel()])
    d1 = np.linalg.norm(finals[2e-3] - finals[1e-3])
    d2 = np.linalg.norm(finals[1e-3] - finals[5e-4])
    ratio = d1 / d2
    ok = 12.0 <= ratio <= 20.0
    lines.append(f"[{'PASS' if ok else 'FAIL'}] halving dt reduces the final-state "
                 f"difference by {ratio:.1f} (4th order: expect within [12, 20])")
    return SuiteResult("convergence", ok, lines)


def suite_determinism(seed: int = 0) -> SuiteResult:
    from .results import write_trajectories_csv
    lines = []
    cfg = reference_config(t_end=0.5, dt=1e-3, decimation=10, seed=seed + 17)
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for j in range(2):
            log = Simulation(cfg).run()
            paths.append(write_trajectories_csv(log, Path(tmp) / f"run{j}.csv"))
        ok = paths[0].read_bytes() == paths[1].read_bytes()
    lines.append(f"[{'PASS' if ok else 'FAIL'}] identical config and seed give "
                 f"byte-identical trajectory CSVs")
    return SuiteResult("determinism", ok, lines)


SUITES = {
    "dynamics": suite_dynamics,
    "pde": suite_pde,
    "equivalence": suite_equivalence,
    "lemma2": suite_lemma2,
    "prooffacts": suite_prooffacts,
    "stacked": suite_stacked,
    "observer": suite_observer,
    "convergence": suite_convergence,
    "determinism": suite_determinism,
}


def run_suites(names=None, seed: int = 0, jobs: int = 1) -> list[SuiteResult]:
    """Run the selected suites (all by default), optionally concurrently."""
    selected = list(SUITES) if not names else list(names)
    unknown = [n for n in selected if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {unknown}; available: {sorted(SUITES)}")
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {n: pool.submit(SUITES[n], seed) for n in selected}
            return [futures[n].result() for n in selected]
    return [SUITES[n](seed) for n in selected]
