"""Two-link revolute manipulator dynamics.

Exact rigid-body model of a planar elbow arm: the five lumped inertia
constants, the configuration-dependent inertia matrix, the Coriolis and
centrifugal matrix, the gravity vector, and closed-form forward dynamics.
Everything here is a pure function of its arguments; 2x2 inversions are
done in closed form so the hot loops carry no linear-algebra dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    """Raised for physically inadmissible manipulator parameterizations."""


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants of a two-link arm.

    Masses ``m1, m2`` (kg), link lengths ``l1, l2`` (m), center-of-mass
    offsets ``lc1, lc2`` (m), link moments of inertia ``j1, j2`` (kg m^2)
    and gravitational acceleration ``g`` (m/s^2). All must be positive.
    """

    m1: float
    m2: float
    l1: float
    l2: float
    lc1: float
    lc2: float
    j1: float
    j2: float
    g: float = 9.8

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "lc1", "lc2", "j1", "j2", "g"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"physical parameter {name!r} must be positive")


@dataclass(frozen=True)
class ManipulatorParams:
    """Lumped model constants: the 5-vector ``o`` plus derived data.

    ``o`` parameterizes the inertia, Coriolis and gravity terms; ``km`` and
    ``kM`` bound the inertia-matrix eigenvalues over all configurations.
    Build instances through :func:`derive_o_params`, which validates
    positive definiteness.
    """

    o: np.ndarray
    g: float
    km: float
    kM: float


def derive_o_params(p: PhysicalParams, grid_step: float = 1e-3) -> ManipulatorParams:
    """Lump the physical constants into the 5-vector model.

    o1 = m1*lc1^2 + m2*(l1^2 + lc2^2) + J1 + J2
    o2 = m2*l1*lc2
    o3 = m2*lc2^2 + J2
    o4 = m1*lc1 + m2*l1
    o5 = m2*lc2

    Rejects parameterizations whose inertia matrix is not positive definite
    for every configuration (o1 - 2*o2 must be positive, and the minimum of
    det M over the elbow angle must be positive).
    """
    o = np.array(
        [
            p.m1 * p.lc1**2 + p.m2 * (p.l1**2 + p.lc2**2) + p.j1 + p.j2,
            p.m2 * p.l1 * p.lc2,
            p.m2 * p.lc2**2 + p.j2,
            p.m1 * p.lc1 + p.m2 * p.l1,
            p.m2 * p.lc2,
        ]
    )
    if np.any(o <= 0.0):
        raise ParameterError(f"lumped constants must be positive, got {o}")
    if o[0] - 2.0 * o[1] <= 0.0:
        raise ParameterError(
            f"inertia matrix loses positive definiteness: o1 - 2*o2 = {o[0] - 2 * o[1]:g} <= 0"
        )
    # det M(q2) = o3*(o1 - o3) - o2^2 cos^2(q2); its minimum over q2 must be positive.
    det_min = o[2] * (o[0] - o[2]) - o[1] ** 2
    if det_min <= 0.0:
        raise ParameterError(
            f"inertia matrix loses positive definiteness: min det M = {det_min:g} <= 0"
        )
    km, kM = inertia_bounds(o, grid_step=grid_step)
    return ManipulatorParams(o=o, g=p.g, km=km, kM=kM)


def _o(params) -> np.ndarray:
    return params.o if isinstance(params, ManipulatorParams) else np.asarray(params, dtype=float)


def inertia(params, q) -> np.ndarray:
    """Symmetric positive-definite inertia matrix; depends on the elbow angle only."""
    o = _o(params)
    c2 = math.cos(q[1])
    m12 = o[2] + o[1] * c2
    return np.array([[o[0] + 2.0 * o[1] * c2, m12], [m12, o[2]]])


def coriolis(params, q, qdot) -> np.ndarray:
    """Coriolis/centrifugal matrix (velocity-linear, not the skew-symmetric factorization)."""
    o = _o(params)
    s2 = math.sin(q[1])
    return np.array(
        [
            [-o[1] * s2 * qdot[1], -o[1] * s2 * (qdot[0] + qdot[1])],
            [o[1] * s2 * qdot[0], 0.0],
        ]
    )


def gravity(params, q) -> np.ndarray:
    """Gravity torque vector."""
    o = _o(params)
    g = params.g if isinstance(params, ManipulatorParams) else 9.8
    c1 = math.cos(q[0])
    c12 = math.cos(q[0] + q[1])
    return np.array([o[3] * g * c1 + o[4] * g * c12, o[4] * g * c12])


def forward_dynamics(params: ManipulatorParams, q, qdot, tau) -> np.ndarray:
    """Joint accelerations from torques: solves M qdd = tau - C qd - G in closed form."""
    m = inertia(params, q)
    rhs = np.asarray(tau, dtype=float) - coriolis(params, q, qdot) @ np.asarray(qdot, dtype=float)
    rhs -= gravity(params, q)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return np.array(
        [
            (m[1, 1] * rhs[0] - m[0, 1] * rhs[1]) / det,
            (-m[1, 0] * rhs[0] + m[0, 0] * rhs[1]) / det,
        ]
    )


def inertia_eigenvalues(params, q2: float) -> tuple[float, float]:
    """(min, max) eigenvalue of the inertia matrix at elbow angle ``q2``."""
    o = _o(params)
    c2 = math.cos(q2)
    m11 = o[0] + 2.0 * o[1] * c2
    m12 = o[2] + o[1] * c2
    tr = m11 + o[2]
    det = m11 * o[2] - m12 * m12
    disc = math.sqrt(max(tr * tr - 4.0 * det, 0.0))
    return (tr - disc) / 2.0, (tr + disc) / 2.0


def inertia_bounds(params, grid_step: float = 1e-3) -> tuple[float, float]:
    """Eigenvalue bounds (km, kM) of the inertia matrix over all configurations.

    The matrix is 2*pi-periodic and even in the elbow angle, so a dense
    sweep of [0, pi] suffices.
    """
    o = _o(params)
    n = int(math.ceil(math.pi / grid_step)) + 1
    km = math.inf
    kM = -math.inf
    for q2 in np.linspace(0.0, math.pi, n):
        lo, hi = inertia_eigenvalues(o, q2)
        km = min(km, lo)
        kM = max(kM, hi)
    if km <= 0.0:
        raise ParameterError(f"inertia matrix not positive definite: km = {km:g}")
    return km, kM


def kinetic_energy(params, q, qdot) -> float:
    """Kinetic energy 0.5 * qd' M(q) qd."""
    qd = np.asarray(qdot, dtype=float)
    return 0.5 * float(qd @ inertia(params, q) @ qd)
