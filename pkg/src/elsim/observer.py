"""Decoupled velocity observers for the partially linearized arm.

One second-order observer per channel reconstructs the unmeasured z from
the position-derived x alone. The estimation error of the first channel
obeys a fixed linear system whose matrix is Hurwitz for any positive
gains; the second channel sees the same linear part plus a cascade term
proportional to the first channel's velocity error.
"""

from __future__ import annotations

import numpy as np

from .network import GainSet
from .transform import d_matrix, delta


def observer_derivative(params, xhat, zhat, x_measured, q, u, gains: GainSet):
    """Time derivatives (xhat_dot, zhat_dot) of both channel observers.

    Consumes only the measured positions q, the reconstructed x, and the
    input u; the true velocity state never enters (output feedback by
    construction). The z2 estimate is corrected with the drift evaluated
    at the z1 estimate.
    """
    ex = np.asarray(xhat, dtype=float) - np.asarray(x_measured, dtype=float)
    d = d_matrix(params, q)
    xhat_dot = -gains.ko1 * ex + np.asarray(zhat, dtype=float)
    zhat_dot = np.array(
        [
            -gains.ko2 * ex[0] + u[0],
            -gains.ko2 * ex[1]
            + delta(params, q[1]) * zhat[0] ** 2
            + d[1, 0] * u[0]
            + d[1, 1] * u[1],
        ]
    )
    return xhat_dot, zhat_dot


def error_matrix(gains: GainSet) -> np.ndarray:
    """System matrix [[-ko1, 1], [-ko2, 0]] of the per-channel error dynamics."""
    return np.array([[-gains.ko1, 1.0], [-gains.ko2, 0.0]])


def error_eigenvalues(gains: GainSet) -> np.ndarray:
    """Eigenvalues of the error matrix: roots of s^2 + ko1 s + ko2."""
    return np.roots([1.0, gains.ko1, gains.ko2])


def is_hurwitz(ko1: float, ko2: float) -> bool:
    """Both error-matrix eigenvalues strictly in the left half plane."""
    return bool(np.all(np.roots([1.0, ko1, ko2]).real < 0.0))


def cascade_gain(params, ztilde1: float, z1: float, q2: float) -> float:
    """Interconnection coefficient delta(q2) * (ztilde1 + 2 z1).

    Diagnostic only: multiplies the first channel's velocity error in the
    second channel's error dynamics, so logging it bounds the cascade.
    """
    return delta(params, q2) * (ztilde1 + 2.0 * z1)
