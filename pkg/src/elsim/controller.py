"""Distributed sliding-mode tracking controller.

Each agent combines its own reconstructed position, its observer outputs,
and the (x, zhat) values of its graph neighbors - plus the leader signals
when directly linked - into local consensus differences, a sliding
variable, and finally the control input. No global state ever enters: the
controller for agent i is a function of its neighbor view alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import GainSet
from .transform import d_matrix, drift


@dataclass(frozen=True)
class NeighborView:
    """Everything agent i is allowed to see.

    ``x``, ``xhat``, ``zhat`` are the agent's own reconstructed position
    and observer outputs; ``neighbors`` holds (x_j, zhat_j) pairs for the
    in-neighbors; ``leader`` is (x0, z0) and present exactly when the agent
    has a leader link.
    """

    x: np.ndarray
    xhat: np.ndarray
    zhat: np.ndarray
    neighbors: tuple[tuple[np.ndarray, np.ndarray], ...] = ()
    leader: tuple[np.ndarray, np.ndarray] | None = None


def neighbor_view(i, topology, xs, xhats, zhats, leader_x0, leader_z0) -> NeighborView:
    """Assemble agent i's view from global arrays per the topology row."""
    nbrs = tuple(
        (np.asarray(xs[j], dtype=float), np.asarray(zhats[j], dtype=float))
        for j in np.flatnonzero(topology.adjacency[i] > 0.0)
    )
    leader = None
    if topology.leader_links[i] > 0.0:
        leader = (np.asarray(leader_x0, dtype=float), np.asarray(leader_z0, dtype=float))
    return NeighborView(
        x=np.asarray(xs[i], dtype=float),
        xhat=np.asarray(xhats[i], dtype=float),
        zhat=np.asarray(zhats[i], dtype=float),
        neighbors=nbrs,
        leader=leader,
    )


def local_differences(view: NeighborView) -> tuple[np.ndarray, np.ndarray]:
    """Consensus differences (x_ir, z_ir) over the neighbor set.

    x_ir sums x_i - x_j over neighbors plus x_i - x0 if leader-linked;
    z_ir does the same with the velocity *estimates* (and the leader's
    true z0), never touching unmeasured velocities.
    """
    x_ir = np.zeros(2)
    z_ir = np.zeros(2)
    for x_j, zhat_j in view.neighbors:
        x_ir += view.x - x_j
        z_ir += view.zhat - zhat_j
    if view.leader is not None:
        x0, z0 = view.leader
        x_ir += view.x - x0
        z_ir += view.zhat - z0
    return x_ir, z_ir


def sliding_variable(x_ir, z_ir, kappa: float) -> np.ndarray:
    """s = z_ir + kappa * x_ir."""
    return np.asarray(z_ir, dtype=float) + kappa * np.asarray(x_ir, dtype=float)


def signum(s, mode: str = "exact", eps: float = 0.01) -> np.ndarray:
    """Componentwise switching term: exact sign (0 at 0) or tanh(s/eps)."""
    s = np.asarray(s, dtype=float)
    if mode == "exact":
        return np.sign(s)
    if mode == "boundary_layer":
        if not eps > 0.0:
            raise ValueError("boundary layer width must be positive")
        return np.tanh(s / eps)
    raise ValueError(f"unknown signum mode {mode!r}")


def control_input(params, q, xtilde, s, zhat, gains: GainSet,
                  mode: str = "exact", eps: float = 0.01) -> np.ndarray:
    """Agent input u = D(q)^-1 (kc1*xtilde - kc2*s - kc3*sgn(s) - f(q, zhat)).

    The drift compensation is evaluated at the velocity estimate. D is
    inverted in closed form from its triangular structure.
    """
    rhs = (
        gains.kc1 * np.asarray(xtilde, dtype=float)
        - gains.kc2 * np.asarray(s, dtype=float)
        - gains.kc3 * signum(s, mode, eps)
        - drift(params, q, zhat)
    )
    d = d_matrix(params, q)
    u1 = rhs[0]
    return np.array([u1, (rhs[1] - d[1, 0] * u1) / d[1, 1]])
