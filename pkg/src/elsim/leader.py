"""Leader (reference) trajectory models and their dense time tables.

A leader is an exosystem emitting the signals followers may consume: the
reconstructed position x0 and transformed velocity z0 (plus, for
diagnostics, the joint trajectory q0 and the acceleration bound). Built-in
kinds:

``ramp_sine_joint``
    Joint-space reference q0(t) = [2t, sin t]; z0 and its derivative follow
    analytically through the velocity transform, x0 by quadrature of z0.

``ramp_sine_transformed``
    Reconstructed-coordinate reference x0(t) = [2t, sin t] with
    z0 = [2, cos t]; the joint trajectory follows by integrating
    qd = A(q) z0.

``constant_velocity``
    Fixed z0, zero acceleration; handy for equilibrium tests.

The simulation engine consumes a :class:`LeaderTable`: the signals sampled
on the half-step grid of the integrator so every Runge-Kutta stage hits a
precomputed value exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .transform import _GL_NODES, _GL_WEIGHTS, x_initial


@dataclass(frozen=True)
class LeaderModel:
    """Analytic leader signals; vectorized callables of time."""

    kind: str
    q0_init: np.ndarray
    z0: Callable[[np.ndarray], np.ndarray]
    z0dot: Callable[[np.ndarray], np.ndarray]
    q0: Callable[[np.ndarray], np.ndarray] | None = None
    x0: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class LeaderTable:
    """Leader signals on the half-step grid t_k = k * dt / 2."""

    t: np.ndarray
    q0: np.ndarray
    x0: np.ndarray
    z0: np.ndarray
    zbar0_sampled: float


def make_leader(kind: str, params, **kwargs) -> LeaderModel:
    """Construct a built-in leader model for the given arm parameters."""
    o = params.o

    def m_entries(q2):
        c2 = np.cos(q2)
        m11 = o[0] + 2.0 * o[1] * c2
        m12 = o[2] + o[1] * c2
        det = m11 * o[2] - m12 * m12
        return m11, m12, det

    if kind == "ramp_sine_joint":

        def q0(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.stack([2.0 * t, np.sin(t)], axis=-1)

        def z0(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            q2 = np.sin(t)
            qd2 = np.cos(t)
            m11, m12, det = m_entries(q2)
            return np.stack(
                [2.0 * m11 + m12 * qd2, np.sqrt(det / m11) * qd2], axis=-1
            )

        def z0dot(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            q2 = np.sin(t)
            qd2 = np.cos(t)
            qdd2 = -np.sin(t)
            m11, m12, det = m_entries(q2)
            s2 = np.sin(q2)
            c2 = np.cos(q2)
            dm11 = -2.0 * o[1] * s2  # per unit q2
            dm12 = -o[1] * s2
            ddet = 2.0 * o[1] ** 2 * s2 * c2
            t22 = np.sqrt(det / m11)
            dt22 = (ddet * m11 - det * dm11) / (2.0 * m11**2 * t22)
            zd1 = 2.0 * dm11 * qd2 + dm12 * qd2 * qd2 + m12 * qdd2
            zd2 = dt22 * qd2 * qd2 + t22 * qdd2
            return np.stack([zd1, zd2], axis=-1)

        return LeaderModel(kind=kind, q0_init=np.zeros(2), z0=z0, z0dot=z0dot, q0=q0)

    if kind == "ramp_sine_transformed":

        def x0(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.stack([2.0 * t, np.sin(t)], axis=-1)

        def z0(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.stack([np.full_like(t, 2.0), np.cos(t)], axis=-1)

        def z0dot(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.stack([np.zeros_like(t), -np.sin(t)], axis=-1)

        return LeaderModel(kind=kind, q0_init=np.zeros(2), z0=z0, z0dot=z0dot, x0=x0)

    if kind == "constant_velocity":
        vz = np.asarray(kwargs.get("vz", (0.3, 0.0)), dtype=float)
        q0_init = np.asarray(kwargs.get("q0_init", (0.0, 0.0)), dtype=float)
        x_init = x_initial(params, q0_init)

        def z0(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.broadcast_to(vz, (t.shape[0], 2)).copy()

        def z0dot(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.zeros((t.shape[0], 2))

        def x0(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return x_init[None, :] + t[:, None] * vz[None, :]

        return LeaderModel(kind=kind, q0_init=q0_init, z0=z0, z0dot=z0dot, x0=x0)

    raise ValueError(f"unknown leader kind {kind!r}")


def build_leader_table(model: LeaderModel, params, dt: float, n_steps: int) -> LeaderTable:
    """Sample (q0, x0, z0) on the half-step grid and audit the acceleration bound.

    Signals without a closed form are filled numerically: x0 by cumulative
    Gauss-Legendre quadrature of z0 (cell error far below the integrator's),
    q0 by cell-wise Runge-Kutta on qd = A(q) z0.
    """
    m = 2 * n_steps + 1
    times = np.arange(m) * (dt / 2.0)
    z0 = model.z0(times)

    if model.x0 is not None:
        x0 = model.x0(times)
    else:
        half = dt / 4.0
        mids = times[:-1] + half
        nodes = (mids[:, None] + half * _GL_NODES[None, :]).ravel()
        vals = model.z0(nodes).reshape(m - 1, _GL_NODES.size, 2)
        cells = half * np.einsum("k,mkd->md", _GL_WEIGHTS, vals)
        x0 = np.empty((m, 2))
        x0[0] = x_initial(params, model.q0_init)
        x0[1:] = x0[0] + np.cumsum(cells, axis=0)

    if model.q0 is not None:
        q0 = model.q0(times)
    else:
        q0 = _integrate_q0(model, params, times)

    zbar0_sampled = float(np.linalg.norm(model.z0dot(times), axis=-1).max())
    return LeaderTable(t=times, q0=q0, x0=x0, z0=z0, zbar0_sampled=zbar0_sampled)


def _integrate_q0(model: LeaderModel, params, times: np.ndarray) -> np.ndarray:
    o = params.o

    def qdot(q2, t):
        c2 = math.cos(q2)
        m11 = o[0] + 2.0 * o[1] * c2
        m12 = o[2] + o[1] * c2
        det = m11 * o[2] - m12 * m12
        r = math.sqrt(m11 * det)
        z1, z2 = model.z0(t)[0]
        return np.array([z1 / m11 - m12 * z2 / r, m11 * z2 / r])

    q0 = np.empty((times.size, 2))
    q0[0] = model.q0_init
    for k in range(times.size - 1):
        h = times[k + 1] - times[k]
        t = times[k]
        q = q0[k]
        k1 = qdot(q[1], t)
        k2 = qdot(q[1] + 0.5 * h * k1[1], t + 0.5 * h)
        k3 = qdot(q[1] + 0.5 * h * k2[1], t + 0.5 * h)
        k4 = qdot(q[1] + h * k3[1], t + h)
        q0[k + 1] = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return q0
