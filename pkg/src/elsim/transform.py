"""Velocity-coordinate transform and partial linearization of the arm model.

The upper-triangular matrix ``T(q)`` maps joint velocities to a new
velocity coordinate ``z = T(q) qd`` in which the first channel integrates
the input directly and the only remaining nonlinearity is a scalar drift
``delta(q2) * z1^2`` in the second channel. The lower-right entry of T is
pinned down by a first-order PDE that kills the qd1*qd2 cross term;
:func:`pde_residual` checks that condition numerically.

A reconstructed position-like state ``x`` with ``dx/dt = z`` pairs with z.
Its second component is a strictly increasing function of the elbow angle
alone; its first component is a path integral along the joint trajectory
(the underlying 1-form is not closed, so no static potential exists).
:func:`x_initial` fixes the integration constant and :func:`x_path_update`
advances the measurement-side reconstruction from position samples only.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .dynamics import ManipulatorParams, _o, gravity

# 16-point Gauss-Legendre rule, applied per subinterval of width <= 0.5 rad.
_GL_NODES, _GL_WEIGHTS = leggauss(16)
_MAX_PANEL = 0.5


def _entries(o: np.ndarray, q2: float) -> tuple[float, float, float]:
    """(M11, M12, det M) at elbow angle q2."""
    c2 = math.cos(q2)
    m11 = o[0] + 2.0 * o[1] * c2
    m12 = o[2] + o[1] * c2
    det = m11 * o[2] - m12 * m12
    return m11, m12, det


def t22(params, q2: float) -> float:
    """Lower-right transform entry sqrt(det M / M11); positive for all q2."""
    m11, _, det = _entries(_o(params), q2)
    return math.sqrt(det / m11)


def t22_derivative(params, q2: float) -> float:
    """Analytic d(t22)/dq2 via the quotient rule on det M / M11."""
    o = _o(params)
    m11, _, det = _entries(o, q2)
    s2 = math.sin(q2)
    c2 = math.cos(q2)
    ddet = 2.0 * o[1] ** 2 * s2 * c2
    dm11 = -2.0 * o[1] * s2
    return (ddet * m11 - det * dm11) / (2.0 * m11**2 * t22(o, q2))


def transform_matrix(params, q) -> np.ndarray:
    """Upper-triangular velocity transform T(q); depends on the elbow angle only."""
    o = _o(params)
    m11, m12, _ = _entries(o, q[1])
    return np.array([[m11, m12], [0.0, t22(o, q[1])]])


def a_matrix(params, q) -> np.ndarray:
    """Matrix A(q) with qd = A(q) z; equals T(q)^-1."""
    o = _o(params)
    m11, m12, det = _entries(o, q[1])
    r = math.sqrt(m11 * det)
    return np.array([[1.0 / m11, -m12 / r], [0.0, m11 / r]])


def d_matrix(params, q) -> np.ndarray:
    """Input matrix D(q) of the transformed velocity dynamics; equals T M^-1."""
    o = _o(params)
    m11, m12, det = _entries(o, q[1])
    r = math.sqrt(m11 * det)
    return np.array([[1.0, 0.0], [-m12 / r, m11 / r]])


def delta(params, q2: float) -> float:
    """Drift coefficient of the z2 channel; odd in q2 and zero at a straight elbow."""
    o = _o(params)
    m11, _, det = _entries(o, q2)
    return -o[1] * math.sin(q2) / (math.sqrt(m11 * det) * m11)


def drift(params, q, z) -> np.ndarray:
    """Drift vector [0, delta(q2) * z1^2] of the transformed velocity dynamics."""
    return np.array([0.0, delta(params, q[1]) * z[0] ** 2])


def pde_residual(params, q2: float, derivative: str = "analytic", h: float = 1e-6) -> float:
    """Residual of the cross-term cancellation condition on t22.

    The condition requires d(t22)/dq2 to equal
    (t22/det M) * o2 sin(q2) * M12 (M11 - M12) / M11, with no dependence on
    the shoulder angle (t22 is a function of q2 alone by construction).
    A zero residual certifies that the square-root solution satisfies it.

    ``derivative`` selects the analytic closed form or a central finite
    difference with step ``h`` as an independent cross-check.
    """
    o = _o(params)
    m11, m12, det = _entries(o, q2)
    if derivative == "analytic":
        lhs = t22_derivative(o, q2)
    elif derivative == "fd":
        lhs = (t22(o, q2 + h) - t22(o, q2 - h)) / (2.0 * h)
    else:
        raise ValueError(f"unknown derivative method {derivative!r}")
    rhs = (t22(o, q2) / det) * o[1] * math.sin(q2) * m12 * (m11 - m12) / m11
    return lhs - rhs


def delta_bar(params, grid_step: float = 1e-3) -> tuple[float, float]:
    """Upper bound on |delta| as (grid supremum, algebraic estimate).

    The grid value sweeps [0, pi] (|delta| is even and 2*pi-periodic) and is
    the authoritative bound. The second value is the closed-form estimate
    o2 / sqrt(km) * (o1 - 2 o2)^(2/3), reported for comparison only; for
    realistic arm constants it disagrees with the grid supremum by orders
    of magnitude, so nothing downstream consumes it.
    """
    o = _o(params)
    n = int(math.ceil(math.pi / grid_step)) + 1
    grid_sup = max(abs(delta(o, q2)) for q2 in np.linspace(0.0, math.pi, n))
    if isinstance(params, ManipulatorParams):
        km = params.km
    else:
        from .dynamics import inertia_bounds

        km, _ = inertia_bounds(o)
    algebraic = o[1] / math.sqrt(km) * (o[0] - 2.0 * o[1]) ** (2.0 / 3.0)
    return grid_sup, algebraic


def x2_from_q2(params, q2: float) -> float:
    """Integral of t22 from 0 to q2 (Gauss-Legendre panels); strictly increasing."""
    o = _o(params)
    return _quad_t22(o, 0.0, q2)


def _quad_t22(o: np.ndarray, a: float, b: float) -> float:
    if a == b:
        return 0.0
    n_panels = max(1, int(math.ceil(abs(b - a) / _MAX_PANEL)))
    edges = np.linspace(a, b, n_panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        total += half * sum(
            w * t22(o, mid + half * xi) for xi, w in zip(_GL_NODES, _GL_WEIGHTS)
        )
    return total


def q2_from_x2(params, x2: float) -> float:
    """Inverse of :func:`x2_from_q2` by bracketing and Brent's method."""
    o = _o(params)
    if x2 == 0.0:
        return 0.0
    # t22 is bounded below by a positive constant, so the bracket grows linearly.
    step = 1.0
    hi = step if x2 > 0 else -step
    while (x2_from_q2(o, hi) - x2) * math.copysign(1.0, x2) < 0.0:
        hi += math.copysign(step, x2)
        step *= 2.0
    lo = 0.0
    if lo > hi:
        lo, hi = hi, lo
    return brentq(lambda q2: x2_from_q2(o, q2) - x2, lo, hi, xtol=1e-13, rtol=1e-15)


def x_initial(params, q) -> np.ndarray:
    """Reconstructed state consistent with a trajectory that started at ``q``.

    x1 = M11(q2)*q1 + o3*q2 + o2*sin(q2)  (point value of the mixed integral)
    x2 = integral of t22 over [0, q2]

    This pins only the initial value; along a trajectory x evolves by its
    own path integral because the x1 1-form is not exact.
    """
    o = _o(params)
    m11, _, _ = _entries(o, q[1])
    x1 = m11 * q[0] + o[2] * q[1] + o[1] * math.sin(q[1])
    return np.array([x1, x2_from_q2(o, q[1])])


def x_path_update(params, x_prev, q_prev, q_next) -> np.ndarray:
    """Advance the measurement-side reconstruction across one position sample.

    x1 accrues the midpoint-rule path increment M11(qm2)*dq1 + M12(qm2)*dq2
    (second order, positions only); x2 accrues the exact quadrature of t22
    over [q2_prev, q2_next]. Must agree with the integrated x state to
    integrator order along any trajectory.
    """
    o = _o(params)
    mid2 = 0.5 * (q_prev[1] + q_next[1])
    m11, m12, _ = _entries(o, mid2)
    dx1 = m11 * (q_next[0] - q_prev[0]) + m12 * (q_next[1] - q_prev[1])
    dx2 = _quad_t22(o, q_prev[1], q_next[1])
    return np.array([x_prev[0] + dx1, x_prev[1] + dx2])


def transformed_derivative(params, q, z, u) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives (xdot, zdot) of the partially linearized system.

    xdot = z; zdot1 = u1; zdot2 = delta(q2)*z1^2 + D21*u1 + D22*u2.
    """
    o = _o(params)
    m11, m12, det = _entries(o, q[1])
    r = math.sqrt(m11 * det)
    zdot = np.array(
        [u[0], delta(o, q[1]) * z[0] ** 2 + (-m12 / r) * u[0] + (m11 / r) * u[1]]
    )
    return np.asarray(z, dtype=float).copy(), zdot


def input_to_torque(params, q, u) -> np.ndarray:
    """Map the transformed-system input to joint torque: tau = u + G(q)."""
    return np.asarray(u, dtype=float) + gravity(params, q)
