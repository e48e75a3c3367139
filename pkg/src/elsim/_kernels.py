"""Compiled inner loops for the closed-loop and model-equivalence integrators.

All kernels operate on flat float64 state vectors with one 10-slot block
per agent: [q1 q2 z1 z2 x1 x2 xhat1 xhat2 zhat1 zhat2]. Leader signals
arrive as dense half-step tables so every Runge-Kutta stage reads an
exact precomputed value. Falls back to plain Python when numba is absent
(slow but correct).
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


@njit(cache=True)
def path_inc(o, glx, glw, x1a, x2a, q1a, q2a, q1b, q2b):
    """Advance the position-only reconstruction of x across one q sample.

    x1: midpoint rule on the M-row 1-form; x2: Gauss-Legendre panels of
    t22 over [q2a, q2b], panel width capped at 0.5 rad.
    """
    mid2 = 0.5 * (q2a + q2b)
    c2 = math.cos(mid2)
    m11 = o[0] + 2.0 * o[1] * c2
    m12 = o[2] + o[1] * c2
    x1b = x1a + m11 * (q1b - q1a) + m12 * (q2b - q2a)
    d = q2b - q2a
    tot = 0.0
    if d != 0.0:
        npan = int(math.ceil(abs(d) / 0.5))
        if npan < 1:
            npan = 1
        w = d / npan
        half = 0.5 * w
        for p in range(npan):
            mid = q2a + (p + 0.5) * w
            acc = 0.0
            for k in range(glx.size):
                qq = mid + half * glx[k]
                c = math.cos(qq)
                a11 = o[0] + 2.0 * o[1] * c
                a12 = o[2] + o[1] * c
                det = a11 * o[2] - a12 * a12
                acc += glw[k] * math.sqrt(det / a11)
            tot += half * acc
    return x1b, x2a + tot


@njit(cache=True)
def fill_xu(y_stage, y_base, xm, feed_exact, o, glx, glw, xu):
    """Per-agent x as seen by observer/controller at one integrator stage."""
    n = xu.shape[0]
    for i in range(n):
        base = 10 * i
        if feed_exact == 1:
            xu[i, 0] = y_stage[base + 4]
            xu[i, 1] = y_stage[base + 5]
        else:
            x1b, x2b = path_inc(
                o, glx, glw,
                xm[i, 0], xm[i, 1],
                y_base[base + 0], y_base[base + 1],
                y_stage[base + 0], y_stage[base + 1],
            )
            xu[i, 0] = x1b
            xu[i, 1] = x2b


@njit(cache=True)
def cl_rhs(y, xu, x0, z0, o, adj, b,
           ko1, ko2, kc1, kc2, kc3, kappa, eps, sign_mode,
           dy, u_out, s_out):
    """Stacked derivative of all agents' plant + observer under the control law."""
    n = adj.shape[0]
    m11s = np.empty(n)
    m12s = np.empty(n)
    rs = np.empty(n)
    deltas = np.empty(n)
    for i in range(n):
        q2 = y[10 * i + 1]
        c2 = math.cos(q2)
        m11 = o[0] + 2.0 * o[1] * c2
        m12 = o[2] + o[1] * c2
        det = m11 * o[2] - m12 * m12
        r = math.sqrt(m11 * det)
        m11s[i] = m11
        m12s[i] = m12
        rs[i] = r
        deltas[i] = -o[1] * math.sin(q2) / (r * m11)

    for i in range(n):
        base = 10 * i
        xr1 = 0.0
        xr2 = 0.0
        zr1 = 0.0
        zr2 = 0.0
        for j in range(n):
            if adj[i, j] > 0.0:
                xr1 += xu[i, 0] - xu[j, 0]
                xr2 += xu[i, 1] - xu[j, 1]
                zr1 += y[base + 8] - y[10 * j + 8]
                zr2 += y[base + 9] - y[10 * j + 9]
        if b[i] > 0.0:
            xr1 += xu[i, 0] - x0[0]
            xr2 += xu[i, 1] - x0[1]
            zr1 += y[base + 8] - z0[0]
            zr2 += y[base + 9] - z0[1]
        s1 = zr1 + kappa * xr1
        s2 = zr2 + kappa * xr2
        if sign_mode == 0:
            g1 = 1.0 if s1 > 0.0 else (-1.0 if s1 < 0.0 else 0.0)
            g2 = 1.0 if s2 > 0.0 else (-1.0 if s2 < 0.0 else 0.0)
        else:
            g1 = math.tanh(s1 / eps)
            g2 = math.tanh(s2 / eps)

        xt1 = y[base + 6] - xu[i, 0]
        xt2 = y[base + 7] - xu[i, 1]
        zh1 = y[base + 8]
        zh2 = y[base + 9]
        f2hat = deltas[i] * zh1 * zh1
        rhs1 = kc1 * xt1 - kc2 * s1 - kc3 * g1
        rhs2 = kc1 * xt2 - kc2 * s2 - kc3 * g2 - f2hat
        d21 = -m12s[i] / rs[i]
        d22 = m11s[i] / rs[i]
        u1 = rhs1
        u2 = (rhs2 - d21 * u1) / d22

        z1 = y[base + 2]
        z2 = y[base + 3]
        du2 = d21 * u1 + d22 * u2
        dy[base + 0] = z1 / m11s[i] - m12s[i] * z2 / rs[i]
        dy[base + 1] = m11s[i] * z2 / rs[i]
        dy[base + 2] = u1
        dy[base + 3] = deltas[i] * z1 * z1 + du2
        dy[base + 4] = z1
        dy[base + 5] = z2
        dy[base + 6] = -ko1 * xt1 + zh1
        dy[base + 7] = -ko1 * xt2 + zh2
        dy[base + 8] = -ko2 * xt1 + u1
        dy[base + 9] = -ko2 * xt2 + f2hat + du2
        u_out[i, 0] = u1
        u_out[i, 1] = u2
        s_out[i, 0] = s1
        s_out[i, 1] = s2


@njit(cache=True)
def cl_step(y, xm, x0_3, z0_3, o, adj, b,
            ko1, ko2, kc1, kc2, kc3, kappa, eps, sign_mode, feed_exact,
            dt, glx, glw, u_out, s_out):
    """One classical Runge-Kutta step; control recomputed at every stage.

    Returns the advanced state and the advanced measurement-side x
    reconstruction; u_out/s_out are filled with the stage-one (current
    time) control values for logging.
    """
    n = adj.shape[0]
    nn = y.size
    xu = np.empty((n, 2))
    ut = np.empty((n, 2))
    st = np.empty((n, 2))
    dy1 = np.empty(nn)
    dy2 = np.empty(nn)
    dy3 = np.empty(nn)
    dy4 = np.empty(nn)

    fill_xu(y, y, xm, feed_exact, o, glx, glw, xu)
    cl_rhs(y, xu, x0_3[0], z0_3[0], o, adj, b,
           ko1, ko2, kc1, kc2, kc3, kappa, eps, sign_mode, dy1, u_out, s_out)
    y2 = y + (0.5 * dt) * dy1
    fill_xu(y2, y, xm, feed_exact, o, glx, glw, xu)
    cl_rhs(y2, xu, x0_3[1], z0_3[1], o, adj, b,
           ko1, ko2, kc1, kc2, kc3, kappa, eps, sign_mode, dy2, ut, st)
    y3 = y + (0.5 * dt) * dy2
    fill_xu(y3, y, xm, feed_exact, o, glx, glw, xu)
    cl_rhs(y3, xu, x0_3[1], z0_3[1], o, adj, b,
           ko1, ko2, kc1, kc2, kc3, kappa, eps, sign_mode, dy3, ut, st)
    y4 = y + dt * dy3
    fill_xu(y4, y, xm, feed_exact, o, glx, glw, xu)
    cl_rhs(y4, xu, x0_3[2], z0_3[2], o, adj, b,
           ko1, ko2, kc1, kc2, kc3, kappa, eps, sign_mode, dy4, ut, st)
    ynew = y + (dt / 6.0) * (dy1 + 2.0 * dy2 + 2.0 * dy3 + dy4)

    xm_new = np.empty((n, 2))
    for i in range(n):
        base = 10 * i
        x1b, x2b = path_inc(o, glx, glw, xm[i, 0], xm[i, 1],
                            y[base + 0], y[base + 1],
                            ynew[base + 0], ynew[base + 1])
        xm_new[i, 0] = x1b
        xm_new[i, 1] = x2b
    return ynew, xm_new


@njit(cache=True)
def cl_run(y0, xm0, lx0, lz0, o, adj, b,
           ko1, ko2, kc1, kc2, kc3, kappa, eps, sign_mode, feed_exact,
           dt, n_steps, glx, glw, log_idx, log_y, log_u, log_s):
    """Fixed-step closed-loop integration with decimated logging.

    Logs the state (and stage-one control) at the step indices in
    ``log_idx`` (ascending, ending with n_steps). Returns
    (status, steps_completed, rows_written); status 1 flags a non-finite
    state, in which case integration stops at that step.
    """
    n = adj.shape[0]
    y = y0.copy()
    xm = xm0.copy()
    u_out = np.empty((n, 2))
    s_out = np.empty((n, 2))
    row = 0
    for k in range(n_steps):
        ynew, xm_new = cl_step(y, xm, lx0[2 * k:2 * k + 3], lz0[2 * k:2 * k + 3],
                               o, adj, b, ko1, ko2, kc1, kc2, kc3, kappa, eps,
                               sign_mode, feed_exact, dt, glx, glw, u_out, s_out)
        if row < log_idx.size and log_idx[row] == k:
            log_y[row] = y
            for i in range(n):
                log_u[row, i, 0] = u_out[i, 0]
                log_u[row, i, 1] = u_out[i, 1]
                log_s[row, i, 0] = s_out[i, 0]
                log_s[row, i, 1] = s_out[i, 1]
            row += 1
        ok = True
        for idx in range(ynew.size):
            if not math.isfinite(ynew[idx]):
                ok = False
                break
        if not ok:
            return 1, k + 1, row
        y = ynew
        xm = xm_new
    # final row: control evaluated at the terminal state
    xu = np.empty((n, 2))
    dummy = np.empty(y.size)
    fill_xu(y, y, xm, feed_exact, o, glx, glw, xu)
    cl_rhs(y, xu, lx0[2 * n_steps], lz0[2 * n_steps], o, adj, b,
           ko1, ko2, kc1, kc2, kc3, kappa, eps, sign_mode, dummy, u_out, s_out)
    log_y[row] = y
    for i in range(n):
        log_u[row, i, 0] = u_out[i, 0]
        log_u[row, i, 1] = u_out[i, 1]
        log_s[row, i, 0] = s_out[i, 0]
        log_s[row, i, 1] = s_out[i, 1]
    row += 1
    return 0, n_steps, row


@njit(cache=True)
def _el_rhs(o, g, q1, q2, qd1, qd2, u1, u2):
    """Joint-space dynamics under tau = u + G(q): M qdd + C qd + G = tau."""
    c2 = math.cos(q2)
    s2 = math.sin(q2)
    m11 = o[0] + 2.0 * o[1] * c2
    m12 = o[2] + o[1] * c2
    det = m11 * o[2] - m12 * m12
    g1 = o[3] * g * math.cos(q1) + o[4] * g * math.cos(q1 + q2)
    g2 = o[4] * g * math.cos(q1 + q2)
    tau1 = u1 + g1
    tau2 = u2 + g2
    r1 = tau1 - (-o[1] * s2 * qd2) * qd1 - (-o[1] * s2 * (qd1 + qd2)) * qd2 - g1
    r2 = tau2 - (o[1] * s2 * qd1) * qd1 - g2
    qdd1 = (o[2] * r1 - m12 * r2) / det
    qdd2 = (-m12 * r1 + m11 * r2) / det
    return qd1, qd2, qdd1, qdd2


@njit(cache=True)
def _tr_rhs(o, q1, q2, z1, z2, u1, u2):
    """Partially linearized dynamics: qd = A z, zd = f + D u."""
    c2 = math.cos(q2)
    m11 = o[0] + 2.0 * o[1] * c2
    m12 = o[2] + o[1] * c2
    det = m11 * o[2] - m12 * m12
    r = math.sqrt(m11 * det)
    dq1 = z1 / m11 - m12 * z2 / r
    dq2 = m11 * z2 / r
    dz1 = u1
    dz2 = -o[1] * math.sin(q2) / (r * m11) * z1 * z1 - m12 / r * u1 + m11 / r * u2
    return dq1, dq2, dz1, dz2


@njit(cache=True)
def equiv_run(o, g, q_init, qd_init, u_tab, dt, n_steps):
    """Integrate the joint-space and transformed models side by side.

    Both start from matched initial conditions and consume the same input
    table (sampled on the half-step grid). Returns the largest deviations
    in q and in z = T(q) qd observed at any step boundary.
    """
    qe1 = q_init[0]
    qe2 = q_init[1]
    qd1 = qd_init[0]
    qd2 = qd_init[1]

    c2 = math.cos(qe2)
    m11 = o[0] + 2.0 * o[1] * c2
    m12 = o[2] + o[1] * c2
    det = m11 * o[2] - m12 * m12
    qt1 = qe1
    qt2 = qe2
    z1 = m11 * qd1 + m12 * qd2
    z2 = math.sqrt(det / m11) * qd2

    maxq = 0.0
    maxz = 0.0
    for k in range(n_steps):
        ua1 = u_tab[2 * k, 0]
        ua2 = u_tab[2 * k, 1]
        ub1 = u_tab[2 * k + 1, 0]
        ub2 = u_tab[2 * k + 1, 1]
        uc1 = u_tab[2 * k + 2, 0]
        uc2 = u_tab[2 * k + 2, 1]

        a1, a2, a3, a4 = _el_rhs(o, g, qe1, qe2, qd1, qd2, ua1, ua2)
        b1, b2, b3, b4 = _el_rhs(o, g, qe1 + 0.5 * dt * a1, qe2 + 0.5 * dt * a2,
                                 qd1 + 0.5 * dt * a3, qd2 + 0.5 * dt * a4, ub1, ub2)
        c1, c2_, c3, c4 = _el_rhs(o, g, qe1 + 0.5 * dt * b1, qe2 + 0.5 * dt * b2,
                                  qd1 + 0.5 * dt * b3, qd2 + 0.5 * dt * b4, ub1, ub2)
        d1, d2, d3, d4 = _el_rhs(o, g, qe1 + dt * c1, qe2 + dt * c2_,
                                 qd1 + dt * c3, qd2 + dt * c4, uc1, uc2)
        qe1 += (dt / 6.0) * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        qe2 += (dt / 6.0) * (a2 + 2.0 * b2 + 2.0 * c2_ + d2)
        qd1 += (dt / 6.0) * (a3 + 2.0 * b3 + 2.0 * c3 + d3)
        qd2 += (dt / 6.0) * (a4 + 2.0 * b4 + 2.0 * c4 + d4)

        a1, a2, a3, a4 = _tr_rhs(o, qt1, qt2, z1, z2, ua1, ua2)
        b1, b2, b3, b4 = _tr_rhs(o, qt1 + 0.5 * dt * a1, qt2 + 0.5 * dt * a2,
                                 z1 + 0.5 * dt * a3, z2 + 0.5 * dt * a4, ub1, ub2)
        c1, c2_, c3, c4 = _tr_rhs(o, qt1 + 0.5 * dt * b1, qt2 + 0.5 * dt * b2,
                                  z1 + 0.5 * dt * b3, z2 + 0.5 * dt * b4, ub1, ub2)
        d1, d2, d3, d4 = _tr_rhs(o, qt1 + dt * c1, qt2 + dt * c2_,
                                 z1 + dt * c3, z2 + dt * c4, uc1, uc2)
        qt1 += (dt / 6.0) * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        qt2 += (dt / 6.0) * (a2 + 2.0 * b2 + 2.0 * c2_ + d2)
        z1 += (dt / 6.0) * (a3 + 2.0 * b3 + 2.0 * c3 + d3)
        z2 += (dt / 6.0) * (a4 + 2.0 * b4 + 2.0 * c4 + d4)

        c2 = math.cos(qe2)
        m11 = o[0] + 2.0 * o[1] * c2
        m12 = o[2] + o[1] * c2
        det = m11 * o[2] - m12 * m12
        ze1 = m11 * qd1 + m12 * qd2
        ze2 = math.sqrt(det / m11) * qd2

        dq = abs(qe1 - qt1)
        if abs(qe2 - qt2) > dq:
            dq = abs(qe2 - qt2)
        dz = abs(ze1 - z1)
        if abs(ze2 - z2) > dz:
            dz = abs(ze2 - z2)
        if dq > maxq:
            maxq = dq
        if dz > maxz:
            maxz = dz
    return maxq, maxz


@njit(cache=True)
def el_energy_drift(o, g, q_init, qd_init, dt, n_steps):
    """Max kinetic-energy drift under pure gravity compensation (u = 0)."""
    q1 = q_init[0]
    q2 = q_init[1]
    qd1 = qd_init[0]
    qd2 = qd_init[1]

    c2 = math.cos(q2)
    m11 = o[0] + 2.0 * o[1] * c2
    m12 = o[2] + o[1] * c2
    ke0 = 0.5 * (m11 * qd1 * qd1 + 2.0 * m12 * qd1 * qd2 + o[2] * qd2 * qd2)
    drift = 0.0
    for k in range(n_steps):
        a1, a2, a3, a4 = _el_rhs(o, g, q1, q2, qd1, qd2, 0.0, 0.0)
        b1, b2, b3, b4 = _el_rhs(o, g, q1 + 0.5 * dt * a1, q2 + 0.5 * dt * a2,
                                 qd1 + 0.5 * dt * a3, qd2 + 0.5 * dt * a4, 0.0, 0.0)
        c1, c2_, c3, c4 = _el_rhs(o, g, q1 + 0.5 * dt * b1, q2 + 0.5 * dt * b2,
                                  qd1 + 0.5 * dt * b3, qd2 + 0.5 * dt * b4, 0.0, 0.0)
        d1, d2, d3, d4 = _el_rhs(o, g, q1 + dt * c1, q2 + dt * c2_,
                                 qd1 + dt * c3, qd2 + dt * c4, 0.0, 0.0)
        q1 += (dt / 6.0) * (a1 + 2.0 * b1 + 2.0 * c1 + d1)
        q2 += (dt / 6.0) * (a2 + 2.0 * b2 + 2.0 * c2_ + d2)
        qd1 += (dt / 6.0) * (a3 + 2.0 * b3 + 2.0 * c3 + d3)
        qd2 += (dt / 6.0) * (a4 + 2.0 * b4 + 2.0 * c4 + d4)
        c2 = math.cos(q2)
        m11 = o[0] + 2.0 * o[1] * c2
        m12 = o[2] + o[1] * c2
        ke = 0.5 * (m11 * qd1 * qd1 + 2.0 * m12 * qd1 * qd2 + o[2] * qd2 * qd2)
        if abs(ke - ke0) > drift:
            drift = abs(ke - ke0)
    return drift
