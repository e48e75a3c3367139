"""Closed-loop simulation of networked arms under output-feedback tracking.

Wires the plant (in transformed coordinates, with the joint trajectory
recovered alongside), the per-agent velocity observers, and the
distributed sliding-mode controller into one stacked ODE advanced by
fixed-step classical Runge-Kutta. The control is recomputed at every
integrator stage from that stage's states; all agents see the same stage
snapshot, so there is no sequential-update bias.

Observers and controllers consume, by default, the measurement-side x
reconstructed from position samples alone (end-to-end output feedback); a
config switch feeds them the integrator's exact x state instead, which is
useful for debugging and for isolating pure integrator behavior.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .controller import control_input, local_differences, neighbor_view, sliding_variable
from .dynamics import ManipulatorParams, PhysicalParams, derive_o_params
from .leader import LeaderModel, LeaderTable, build_leader_table, make_leader
from .network import (GainFeasibility, GainSet, PQCertificate, SpanningTreeError,
                      Topology, gain_bounds, pq_certificate)
from .observer import observer_derivative
from .transform import _GL_NODES, _GL_WEIGHTS, a_matrix, q2_from_x2, transformed_derivative

_SIGN_MODES = ("exact", "boundary_layer")
_OBSERVER_FEEDS = ("reconstructed", "exact")


class SimulationDiverged(RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, t: float):
        super().__init__(f"simulation diverged at t = {t:.6g} s (non-finite state)")
        self.t = t


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete, validated description of one closed-loop run."""

    physical: PhysicalParams
    topology: Topology
    gains: GainSet
    sign_mode: str = "boundary_layer"
    epsilon: float = 0.01
    dt: float = 1e-3
    t_end: float = 30.0
    decimation: int = 10
    leader_kind: str = "ramp_sine_joint"
    x_range: tuple[float, float] = (-3.0, 3.0)
    seed: int = 1
    observer_feed: str = "reconstructed"

    def __post_init__(self):
        if self.sign_mode not in _SIGN_MODES:
            raise ValueError(f"sign_mode must be one of {_SIGN_MODES}, got {self.sign_mode!r}")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.t_end > self.dt * (1.0 - 1e-12):
            raise ValueError("t_end must be at least one step")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ValueError(f"t_end must be an integer multiple of dt, got {steps:g} steps")
        if not (isinstance(self.decimation, int) and self.decimation >= 1):
            raise ValueError("decimation must be a positive integer")
        if self.observer_feed not in _OBSERVER_FEEDS:
            raise ValueError(
                f"observer_feed must be one of {_OBSERVER_FEEDS}, got {self.observer_feed!r}"
            )
        lo, hi = self.x_range
        if not lo < hi:
            raise ValueError("x_range must be an increasing pair")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValueError("seed must be a nonnegative integer")


@dataclass
class WorldState:
    """Integrator state: flat agent vector, measurement-side x, step count."""

    y: np.ndarray
    x_meas: np.ndarray
    k: int = 0


@dataclass
class TrajectoryLog:
    """Decimated time series of one run, plus the certificates that framed it."""

    t: np.ndarray
    q: np.ndarray
    z: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    zhat: np.ndarray
    u: np.ndarray
    tau: np.ndarray
    s: np.ndarray
    leader_q: np.ndarray
    leader_z: np.ndarray
    leader_x: np.ndarray
    config: ScenarioConfig
    certificate: PQCertificate | None = None
    feasibility: GainFeasibility | None = None
    cert_status: str = ""
    runtime_s: float = 0.0

    @property
    def n_agents(self) -> int:
        return self.q.shape[1]


_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def uniform_stream(seed: int):
    """Deterministic splitmix64-based uniforms on [0, 1); platform independent."""
    state = seed & _MASK64
    while True:
        state, z = _splitmix64(state)
        yield (z >> 11) * 2.0**-53


class Simulation:
    """A prepared scenario: derived parameters, leader table, certificates."""

    def __init__(self, config: ScenarioConfig, leader: LeaderModel | None = None):
        self.config = config
        self.params: ManipulatorParams = derive_o_params(config.physical)
        self.topology = config.topology
        self.n = config.topology.n
        self.n_steps = int(round(config.t_end / config.dt))
        self.leader_model = leader if leader is not None else make_leader(
            config.leader_kind, self.params
        )
        self.table: LeaderTable = build_leader_table(
            self.leader_model, self.params, config.dt, self.n_steps
        )
        if self.table.zbar0_sampled > config.gains.zbar0 * (1.0 + 1e-9) + 1e-12:
            raise ValueError(
                f"leader acceleration bound violated: sampled sup |z0dot| = "
                f"{self.table.zbar0_sampled:.6g} exceeds configured zbar0 = "
                f"{config.gains.zbar0:g}"
            )
        self.certificate: PQCertificate | None = None
        self.feasibility: GainFeasibility | None = None
        try:
            self.certificate = pq_certificate(config.topology)
            self.feasibility = gain_bounds(self.certificate, config.gains)
            self.cert_status = "ok" if self.feasibility.ok else "gain_bounds_not_met"
        except SpanningTreeError as exc:
            self.cert_status = f"spanning_tree_violated: {exc}"

    def _kernel_args(self):
        g = self.config.gains
        return (
            self.params.o,
            self.topology.adjacency,
            self.topology.leader_links,
            g.ko1, g.ko2, g.kc1, g.kc2, g.kc3, g.kappa,
            self.config.epsilon,
            0 if self.config.sign_mode == "exact" else 1,
        )

    def initial_state(self) -> WorldState:
        """Seeded initial conditions.

        Per agent, four uniforms on x_range: x1, x2, z1, z2. The joint
        state starts consistent with x (q2 from the x2 bijection, q1 from
        the x1 closed form); observers start at xhat = x, zhat = 0.
        """
        draw = uniform_stream(self.config.seed)
        lo, hi = self.config.x_range
        o = self.params.o
        y = np.zeros(10 * self.n)
        xm = np.zeros((self.n, 2))
        for i in range(self.n):
            x1, x2, z1, z2 = (lo + (hi - lo) * next(draw) for _ in range(4))
            q2 = q2_from_x2(self.params, x2)
            m11 = o[0] + 2.0 * o[1] * math.cos(q2)
            q1 = (x1 - o[2] * q2 - o[1] * math.sin(q2)) / m11
            base = 10 * i
            y[base:base + 10] = (q1, q2, z1, z2, x1, x2, x1, x2, 0.0, 0.0)
            xm[i] = (x1, x2)
        return WorldState(y=y, x_meas=xm, k=0)

    def step(self, state: WorldState) -> WorldState:
        """Advance one fixed step; deterministic in (config, state)."""
        k = state.k
        if k >= self.n_steps:
            raise ValueError(f"step index {k} beyond configured horizon {self.n_steps}")
        u_out = np.empty((self.n, 2))
        s_out = np.empty((self.n, 2))
        o, adj, b, ko1, ko2, kc1, kc2, kc3, kappa, eps, smode = self._kernel_args()
        y, xm = _kernels.cl_step(
            state.y, state.x_meas,
            self.table.x0[2 * k:2 * k + 3], self.table.z0[2 * k:2 * k + 3],
            o, adj, b, ko1, ko2, kc1, kc2, kc3, kappa, eps, smode,
            1 if self.config.observer_feed == "exact" else 0,
            self.config.dt, _GL_NODES, _GL_WEIGHTS, u_out, s_out,
        )
        if not np.isfinite(y).all():
            raise SimulationDiverged((k + 1) * self.config.dt)
        return WorldState(y=y, x_meas=xm, k=k + 1)

    def run(self) -> TrajectoryLog:
        """Integrate the full horizon with decimated logging."""
        t_start = time.perf_counter()
        cfg = self.config
        state0 = self.initial_state()
        log_idx = np.array(
            list(range(0, self.n_steps, cfg.decimation)) + [self.n_steps], dtype=np.int64
        )
        m = log_idx.size
        log_y = np.empty((m, 10 * self.n))
        log_u = np.empty((m, self.n, 2))
        log_s = np.empty((m, self.n, 2))
        o, adj, b, ko1, ko2, kc1, kc2, kc3, kappa, eps, smode = self._kernel_args()
        status, steps_done, _ = _kernels.cl_run(
            state0.y, state0.x_meas, self.table.x0, self.table.z0,
            o, adj, b, ko1, ko2, kc1, kc2, kc3, kappa, eps, smode,
            1 if cfg.observer_feed == "exact" else 0,
            cfg.dt, self.n_steps, _GL_NODES, _GL_WEIGHTS,
            log_idx, log_y, log_u, log_s,
        )
        if status != 0:
            raise SimulationDiverged(steps_done * cfg.dt)

        t = log_idx * cfg.dt
        blocks = log_y.reshape(m, self.n, 5, 2)
        q = blocks[:, :, 0, :].copy()
        z = blocks[:, :, 1, :].copy()
        x = blocks[:, :, 2, :].copy()
        xhat = blocks[:, :, 3, :].copy()
        zhat = blocks[:, :, 4, :].copy()
        gsum = self.params.o[4] * self.params.g * np.cos(q[..., 0] + q[..., 1])
        tau = log_u.copy()
        tau[..., 0] += self.params.o[3] * self.params.g * np.cos(q[..., 0]) + gsum
        tau[..., 1] += gsum
        return TrajectoryLog(
            t=t,
            q=q, z=z, x=x, xhat=xhat, zhat=zhat,
            u=log_u, tau=tau, s=log_s,
            leader_q=self.table.q0[2 * log_idx],
            leader_z=self.table.z0[2 * log_idx],
            leader_x=self.table.x0[2 * log_idx],
            config=cfg,
            certificate=self.certificate,
            feasibility=self.feasibility,
            cert_status=self.cert_status,
            runtime_s=time.perf_counter() - t_start,
        )


def run(config: ScenarioConfig, leader: LeaderModel | None = None) -> TrajectoryLog:
    return Simulation(config, leader=leader).run()


def stage_derivative(params, topology, gains: GainSet, y, x_used, x0, z0,
                     sign_mode: str = "boundary_layer", eps: float = 0.01):
    """Stacked derivative as the compiled kernel computes it (for cross-checks)."""
    n = topology.n
    dy = np.empty(y.size)
    u = np.empty((n, 2))
    s = np.empty((n, 2))
    _kernels.cl_rhs(
        np.asarray(y, dtype=float), np.asarray(x_used, dtype=float),
        np.asarray(x0, dtype=float), np.asarray(z0, dtype=float),
        params.o, topology.adjacency, topology.leader_links,
        gains.ko1, gains.ko2, gains.kc1, gains.kc2, gains.kc3, gains.kappa,
        eps, 0 if sign_mode == "exact" else 1, dy, u, s,
    )
    return dy, u, s


def reference_derivative(params, topology, gains: GainSet, y, x_used, x0, z0,
                         sign_mode: str = "boundary_layer", eps: float = 0.01):
    """Same stacked derivative, assembled agent-by-agent from the module APIs.

    Slow, readable reference used to pin the kernel: per-agent neighbor
    views, local differences, sliding variables, control inputs, observer
    and plant derivatives, all from the pure-function building blocks.
    """
    n = topology.n
    y = np.asarray(y, dtype=float)
    xs = np.asarray(x_used, dtype=float)
    blocks = y.reshape(n, 5, 2)
    q, z, _, xh, zh = (blocks[:, j, :] for j in range(5))
    dy = np.empty_like(y)
    u_all = np.empty((n, 2))
    s_all = np.empty((n, 2))
    for i in range(n):
        view = neighbor_view(i, topology, xs, xh, zh, x0, z0)
        x_ir, z_ir = local_differences(view)
        s_i = sliding_variable(x_ir, z_ir, gains.kappa)
        xtilde = xh[i] - xs[i]
        u_i = control_input(params, q[i], xtilde, s_i, zh[i], gains, sign_mode, eps)
        xdot, zdot = transformed_derivative(params, q[i], z[i], u_i)
        qdot = a_matrix(params, q[i]) @ z[i]
        xh_dot, zh_dot = observer_derivative(params, xh[i], zh[i], xs[i], q[i], u_i, gains)
        dy[10 * i:10 * i + 10] = np.concatenate([qdot, zdot, xdot, xh_dot, zh_dot])
        u_all[i] = u_i
        s_all[i] = s_i
    return dy, u_all, s_all


def equivalence_oracle(params, u=None, t_end: float = 10.0, dt: float = 1e-4,
                       q_init=(0.3, -0.4), qd_init=(0.2, -0.1)) -> tuple[float, float]:
    """Largest (q, z) gap between the joint-space and transformed models.

    Integrates both representations from matched initial conditions under
    the same smooth input (default [sin t, cos 2t]) and torque tau = u + G,
    mapping the joint-space velocities through T at every step. Agreement
    at integrator order certifies the transform transcription both ways.
    """
    n_steps = int(round(t_end / dt))
    times = np.arange(2 * n_steps + 1) * (dt / 2.0)
    if u is None:
        u_tab = np.stack([np.sin(times), np.cos(2.0 * times)], axis=-1)
    else:
        u_tab = np.asarray([u(t) for t in times], dtype=float)
    dev_q, dev_z = _kernels.equiv_run(
        params.o, params.g, np.asarray(q_init, dtype=float),
        np.asarray(qd_init, dtype=float), u_tab, dt, n_steps,
    )
    return float(dev_q), float(dev_z)


def energy_drift(params, q_init=(0.4, 0.9), qd_init=(1.2, -0.8),
                 t_end: float = 5.0, dt: float = 1e-4) -> float:
    """Max kinetic-energy drift under exact gravity compensation (tau = G)."""
    n_steps = int(round(t_end / dt))
    return float(_kernels.el_energy_drift(
        params.o, params.g, np.asarray(q_init, dtype=float),
        np.asarray(qd_init, dtype=float), dt, n_steps,
    ))


def fit_exponential_rate(t, series, min_points: int = 4) -> float:
    """Least-squares slope of log(series) over the transient.

    The window runs from the start until the series first drops to its
    settled floor (ten times the median of the last tenth); if it never
    settles, the whole record is used. Returns 0 for flat or empty data.
    """
    t = np.asarray(t, dtype=float)
    s = np.maximum(np.asarray(series, dtype=float), 1e-300)
    tail = s[max(1, int(0.9 * s.size)):]
    floor = 10.0 * float(np.median(tail))
    below = np.flatnonzero(s <= floor)
    end = below[0] + 1 if below.size else s.size
    if end < min_points:
        end = s.size
    if end < 2:
        return 0.0
    slope, _ = np.polyfit(t[:end], np.log(s[:end]), 1)
    return float(slope)


def time_to_threshold(t, series, threshold: float) -> float | None:
    """Earliest logged time after which the series stays below the threshold."""
    s = np.asarray(series, dtype=float)
    above = np.flatnonzero(s >= threshold)
    if above.size == 0:
        return float(t[0])
    if above[-1] == s.size - 1:
        return None
    return float(t[above[-1] + 1])


def consensus_error_series(log: TrajectoryLog):
    """Stacked norms ||(s, x_r)|| per logged instant, from the logged states."""
    lb = (log.certificate.laplacian if log.certificate is not None
          else None)
    if lb is None:
        from .network import laplacian
        lb = laplacian(log.config.topology)
    lb = lb + np.diag(log.config.topology.leader_links)
    dx = log.x - log.leader_x[:, None, :]
    x_r = np.einsum("ij,mjd->mid", lb, dx)
    stacked = np.concatenate([log.s.reshape(log.t.size, -1),
                              x_r.reshape(log.t.size, -1)], axis=1)
    return np.linalg.norm(stacked, axis=1)


def observer_error_series(log: TrajectoryLog):
    """Stacked norms ||(xtilde, ztilde)|| per logged instant."""
    xt = log.xhat - log.x
    zt = log.zhat - log.z
    stacked = np.concatenate([xt.reshape(log.t.size, -1),
                              zt.reshape(log.t.size, -1)], axis=1)
    return np.linalg.norm(stacked, axis=1)


def metrics(log: TrajectoryLog, pos_threshold: float = 0.05) -> dict:
    """Per-agent tracking summaries plus transient decay-rate fits."""
    m = log.t.size
    q_err = np.linalg.norm(log.q - log.leader_q[:, None, :], axis=2)
    z_err = np.linalg.norm(log.z - log.leader_z[:, None, :], axis=2)
    x_err = np.linalg.norm(log.x - log.leader_x[:, None, :], axis=2)
    zt_err = np.linalg.norm(log.zhat - log.z, axis=2)
    peak_tau = np.abs(log.tau).max(axis=(0, 2))
    agents = []
    for i in range(log.n_agents):
        agents.append({
            "max_pos_err": float(q_err[:, i].max()),
            "final_pos_err": float(q_err[-1, i]),
            "max_vel_err": float(z_err[:, i].max()),
            "final_vel_err": float(z_err[-1, i]),
            "max_x_err": float(x_err[:, i].max()),
            "final_x_err": float(x_err[-1, i]),
            "final_obs_err": float(zt_err[-1, i]),
            "time_to_pos_threshold": time_to_threshold(log.t, q_err[:, i], pos_threshold),
            "peak_torque": float(peak_tau[i]),
        })
    return {
        "agents": agents,
        "consensus_rate": fit_exponential_rate(log.t, consensus_error_series(log)),
        "observer_rate": fit_exponential_rate(log.t, observer_error_series(log)),
        "rows": int(m),
        "runtime_s": log.runtime_s,
    }


def warmup_kernels(params=None):
    """Force one compilation of every compiled kernel on tiny inputs."""
    if params is None:
        params = derive_o_params(PhysicalParams(
            m1=0.5, m2=0.4, l1=0.4, l2=0.3, lc1=0.2, lc2=0.15,
            j1=0.0067, j2=0.003, g=9.8,
        ))
    top = Topology(adjacency=np.zeros((1, 1)), leader_links=np.ones(1))
    gains = GainSet(ko1=3.0, ko2=5.0, kc1=5.0, kc2=6.0, kc3=3.0, kappa=2.0, zbar0=1.0)
    cfg = ScenarioConfig(
        physical=PhysicalParams(m1=0.5, m2=0.4, l1=0.4, l2=0.3, lc1=0.2, lc2=0.15,
                                j1=0.0067, j2=0.003, g=9.8),
        topology=top, gains=gains, dt=1e-3, t_end=2e-3, decimation=1,
        leader_kind="constant_velocity",
    )
    Simulation(cfg).run()
    equivalence_oracle(params, t_end=2e-4, dt=1e-4)
    energy_drift(params, t_end=2e-4, dt=1e-4)


__all__ = [
    "ScenarioConfig", "WorldState", "TrajectoryLog", "Simulation", "SimulationDiverged",
    "run", "metrics", "equivalence_oracle", "energy_drift", "stage_derivative",
    "reference_derivative", "fit_exponential_rate", "time_to_threshold",
    "consensus_error_series", "observer_error_series", "uniform_stream",
    "warmup_kernels",
]
