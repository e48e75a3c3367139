"""Directed-graph algebra for the leader-follower topology.

Builds the follower Laplacian and leader-link matrix, checks the
leader-rooted spanning-tree condition, constructs the diagonal scaling P
and the symmetric matrix Q that certify the grounded Laplacian L + B as a
nonsingular M-matrix, and evaluates the closed-form feasibility bounds on
the consensus control gains.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


class TopologyError(ValueError):
    """Raised when a topology violates its structural requirements."""


class SpanningTreeError(TopologyError):
    """Raised when no leader-rooted spanning tree exists."""


@dataclass(frozen=True)
class Topology:
    """Directed follower graph plus leader links.

    ``adjacency[i, j] = 1`` means follower i receives information from
    follower j; ``leader_links[i] = 1`` means follower i hears the leader.
    Entries are 0/1 with a zero diagonal.
    """

    adjacency: np.ndarray
    leader_links: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=float)
        b = np.asarray(self.leader_links, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise TopologyError(f"adjacency must be square, got shape {adj.shape}")
        if b.shape != (adj.shape[0],):
            raise TopologyError(
                f"leader_links must have length {adj.shape[0]}, got {b.shape}"
            )
        if np.any(np.diag(adj) != 0.0):
            raise TopologyError("adjacency diagonal must be zero")
        if not np.isin(adj, (0.0, 1.0)).all() or not np.isin(b, (0.0, 1.0)).all():
            raise TopologyError("adjacency and leader_links entries must be 0 or 1")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "leader_links", b)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class PQCertificate:
    """M-matrix certificate for L + B under the spanning-tree condition.

    ``h = (L+B)^-1 1`` (entrywise positive), ``p_diag = 1/h`` gives the
    diagonal scaling P, and ``q = P(L+B) + (L+B)' P`` is symmetric positive
    definite. ``sigma_max_lb`` is the largest singular value of L + B.
    """

    laplacian: np.ndarray
    h: np.ndarray
    p_diag: np.ndarray
    q: np.ndarray
    lambda_min_q: float
    lambda_max_p: float
    sigma_max_lb: float


@dataclass(frozen=True)
class GainSet:
    """Observer and controller gains plus the consensus constant kappa."""

    ko1: float
    ko2: float
    kc1: float
    kc2: float
    kc3: float
    kappa: float = 2.0
    zbar0: float = 1.0

    def __post_init__(self):
        for name in ("ko1", "ko2", "kc1", "kc2", "kc3"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"gain {name!r} must be positive")
        if not self.kappa > 1.0:
            raise ValueError(f"kappa must exceed 1, got {self.kappa}")
        if self.zbar0 < 0.0:
            raise ValueError("zbar0 must be nonnegative")


@dataclass(frozen=True)
class GainFeasibility:
    """Evaluation of the two gain inequalities plus the proof diagnostics.

    ``kc2_bound``/``kc3_bound`` are the right-hand sides the supplied kc2
    and kc3 must strictly exceed. ``alphas`` are the four decay
    coefficients computed with the damping weight ``varpi`` fixed just
    above its lower bound; all four are positive exactly when the
    inequalities hold.
    """

    kc2: float
    kc2_bound: float
    kc2_ok: bool
    kc3: float
    kc3_bound: float
    kc3_ok: bool
    varpi: float
    alphas: tuple[float, float, float, float]

    @property
    def ok(self) -> bool:
        return self.kc2_ok and self.kc3_ok


def laplacian(top: Topology) -> np.ndarray:
    """Graph Laplacian of the follower digraph: row sums are zero."""
    adj = top.adjacency
    return np.diag(adj.sum(axis=1)) - adj


def has_spanning_tree(top: Topology) -> bool:
    """True iff every follower is reachable from the leader along directed edges."""
    reached = top.leader_links > 0.0
    frontier = deque(np.flatnonzero(reached))
    while frontier:
        j = frontier.popleft()
        for i in np.flatnonzero(top.adjacency[:, j] > 0.0):
            if not reached[i]:
                reached[i] = True
                frontier.append(i)
    return bool(reached.all())


def pq_certificate(top: Topology) -> PQCertificate:
    """Build the P/Q positive-definiteness certificate for L + B.

    Requires the leader-rooted spanning tree; without it L + B is singular
    or h has nonpositive entries, and the certificate is refused.
    """
    if not has_spanning_tree(top):
        raise SpanningTreeError(
            "no leader-rooted spanning tree: some follower is unreachable"
        )
    lap = laplacian(top)
    lb = lap + np.diag(top.leader_links)
    h = np.linalg.solve(lb, np.ones(top.n))
    if np.any(h <= 0.0):
        raise SpanningTreeError(f"nonpositive entries in h = (L+B)^-1 1: {h}")
    p_diag = 1.0 / h
    q = np.diag(p_diag) @ lb + lb.T @ np.diag(p_diag)
    lambda_min_q = float(np.linalg.eigvalsh(q)[0])
    sigma_max = float(np.linalg.svd(lb, compute_uv=False)[0])
    return PQCertificate(
        laplacian=lap,
        h=h,
        p_diag=p_diag,
        q=q,
        lambda_min_q=lambda_min_q,
        lambda_max_p=float(p_diag.max()),
        sigma_max_lb=sigma_max,
    )


def gain_bounds(cert: PQCertificate, gains: GainSet) -> GainFeasibility:
    """Evaluate the strict lower bounds the control gains must satisfy.

    kc2 must exceed (3*kappa*lp + kappa^2*lp + kappa^2*lp/(2(kappa-1))
    + |kc1 - ko2| * lp * sigma_max) / lq with lp = max(P), lq = min eig(Q);
    kc3 must exceed the leader acceleration bound. The alpha diagnostics
    use varpi = kappa^2*lp/(2(kappa-1)) + 1e-6, just above its admissible
    infimum.
    """
    if not gains.kappa > 1.0:
        raise ValueError("kappa must exceed 1")
    lp = cert.lambda_max_p
    lq = cert.lambda_min_q
    k = gains.kappa
    mismatch = abs(gains.kc1 - gains.ko2) * lp * cert.sigma_max_lb
    kc2_bound = (3.0 * k * lp + k**2 * lp + k**2 * lp / (2.0 * (k - 1.0)) + mismatch) / lq
    kc3_bound = gains.zbar0
    varpi = k**2 * lp / (2.0 * (k - 1.0)) + 1e-6
    alphas = (
        0.5 * (gains.kc2 * lq - 3.0 * k * lp - k**2 * lp - varpi - mismatch),
        varpi * k - varpi - 0.5 * k**2 * lp,
        0.5 * k * lp + 0.5 * varpi,
        0.5 * mismatch,
    )
    return GainFeasibility(
        kc2=gains.kc2,
        kc2_bound=kc2_bound,
        kc2_ok=gains.kc2 > kc2_bound,
        kc3=gains.kc3,
        kc3_bound=kc3_bound,
        kc3_ok=gains.kc3 > kc3_bound,
        varpi=varpi,
        alphas=alphas,
    )
