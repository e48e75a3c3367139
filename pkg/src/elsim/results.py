"""Run outputs: trajectories CSV, summary JSON, and self-rendered SVG charts.

The CSV carries, per agent block, the state, observer, control, sliding
and torque columns, then the leader columns; values are serialized with 17
significant digits so parsing an emitted file reproduces the in-memory log
bit for bit. Charts are plain SVG with exactly one polyline per series
(axes and ticks use line/text elements), so no plotting dependency is
needed.
"""

from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .config import config_to_dict
from .engine import TrajectoryLog, metrics

_AGENT_FIELDS = ("q1", "q2", "z1", "z2", "x1", "x2", "xhat1", "xhat2",
                 "zhat1", "zhat2", "u1", "u2", "s1", "s2", "tau1", "tau2")
_LEADER_FIELDS = ("leader_q1", "leader_q2", "leader_z1", "leader_z2",
                  "leader_x1", "leader_x2")


def csv_header(n_agents: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n_agents + 1):
        cols.extend(f"a{i}_{f}" for f in _AGENT_FIELDS)
    cols.extend(_LEADER_FIELDS)
    return cols


def log_to_matrix(log: TrajectoryLog) -> np.ndarray:
    """Flatten the log into the CSV column layout."""
    m = log.t.size
    per_agent = np.concatenate(
        [log.q, log.z, log.x, log.xhat, log.zhat, log.u, log.s, log.tau], axis=2
    )
    leader = np.concatenate([log.leader_q, log.leader_z, log.leader_x], axis=1)
    return np.concatenate([log.t[:, None], per_agent.reshape(m, -1), leader], axis=1)


def write_trajectories_csv(log: TrajectoryLog, path) -> Path:
    path = Path(path)
    mat = log_to_matrix(log)
    header = ",".join(csv_header(log.n_agents))
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in mat:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return path


def read_trajectories_csv(path) -> tuple[list[str], np.ndarray]:
    """Parse an emitted CSV back into (header, data matrix)."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        data = [[float(v) for v in line.rstrip("\n").split(",")] for line in fh if line.strip()]
    return header, np.asarray(data, dtype=float)


def _cert_dict(log: TrajectoryLog):
    if log.certificate is None:
        return None
    c = log.certificate
    return {
        "h": c.h.tolist(),
        "p_diag": c.p_diag.tolist(),
        "q": c.q.tolist(),
        "lambda_min_q": c.lambda_min_q,
        "lambda_max_p": c.lambda_max_p,
        "sigma_max_lb": c.sigma_max_lb,
    }


def _feas_dict(log: TrajectoryLog):
    if log.feasibility is None:
        return None
    f = log.feasibility
    return {
        "kc2": f.kc2, "kc2_bound": f.kc2_bound, "kc2_ok": f.kc2_ok,
        "kc3": f.kc3, "kc3_bound": f.kc3_bound, "kc3_ok": f.kc3_ok,
        "varpi": f.varpi, "alphas": list(f.alphas), "ok": f.ok,
    }


def write_summary_json(log: TrajectoryLog, path) -> Path:
    path = Path(path)
    doc = {
        "config": config_to_dict(log.config),
        "metrics": metrics(log),
        "gain_certificate": _cert_dict(log),
        "gain_feasibility": _feas_dict(log),
        "cert_status": log.cert_status,
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def line_chart(t, series, labels, title, ylabel, width=960, height=540) -> str:
    """Minimal SVG line chart: exactly one polyline per series."""
    t = np.asarray(t, dtype=float)
    series = [np.asarray(s, dtype=float) for s in series]
    # decimate for file size; keep endpoints
    stride = max(1, t.size // 2000)
    idx = np.unique(np.concatenate([np.arange(0, t.size, stride), [t.size - 1]]))
    t = t[idx]
    series = [s[idx] for s in series]

    ml, mr, mt, mb = 70, 180, 45, 50
    pw, ph = width - ml - mr, height - mt - mb
    x_lo, x_hi = float(t.min()), float(t.max())
    y_lo = min(float(s.min()) for s in series)
    y_hi = max(float(s.max()) for s in series)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    def sx(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return mt + (y_hi - v) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{escape(title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for k in range(6):
        xv = x_lo + k * (x_hi - x_lo) / 5
        yv = y_lo + k * (y_hi - y_lo) / 5
        parts.append(f'<line x1="{sx(xv):.1f}" y1="{mt + ph}" x2="{sx(xv):.1f}" '
                     f'y2="{mt + ph + 5}" stroke="#333"/>')
        parts.append(f'<text x="{sx(xv):.1f}" y="{mt + ph + 18}" text-anchor="middle" '
                     f'font-size="11" font-family="sans-serif">{xv:.3g}</text>')
        parts.append(f'<line x1="{ml - 5}" y1="{sy(yv):.1f}" x2="{ml}" y2="{sy(yv):.1f}" '
                     f'stroke="#333"/>')
        parts.append(f'<text x="{ml - 8}" y="{sy(yv) + 4:.1f}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif">{yv:.3g}</text>')
    parts.append(f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle" '
                 f'font-size="13" font-family="sans-serif">time (s)</text>')
    parts.append(f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="13" '
                 f'font-family="sans-serif" transform="rotate(-90 18 {mt + ph / 2:.1f})">'
                 f'{escape(ylabel)}</text>')
    for j, (s, lab) in enumerate(zip(series, labels)):
        color = _PALETTE[j % len(_PALETTE)]
        pts = " ".join(f"{sx(tv):.2f},{sy(vv):.2f}" for tv, vv in zip(t, s))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
                     f'points="{pts}"/>')
        ly = mt + 16 + 16 * j
        parts.append(f'<line x1="{ml + pw + 10}" y1="{ly - 4}" x2="{ml + pw + 30}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{ml + pw + 35}" y="{ly}" font-size="11" '
                     f'font-family="sans-serif">{escape(lab)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_figures(log: TrajectoryLog, out_dir) -> list[Path]:
    """Three charts: position tracking, velocity tracking, observation errors."""
    out_dir = Path(out_dir)
    n = log.n_agents
    joint = ("shoulder", "elbow")
    specs = [
        ("fig_position_errors.svg", log.q - log.leader_q[:, None, :],
         "Position tracking errors", "q - q0 (rad)"),
        ("fig_velocity_errors.svg", log.z - log.leader_z[:, None, :],
         "Velocity tracking errors", "z - z0"),
        ("fig_observation_errors.svg", log.zhat - log.z,
         "Velocity observation errors", "zhat - z"),
    ]
    paths = []
    for fname, err, title, ylabel in specs:
        series = [err[:, i, d] for i in range(n) for d in range(2)]
        labels = [f"agent {i + 1} {joint[d]}" for i in range(n) for d in range(2)]
        path = out_dir / fname
        path.write_text(line_chart(log.t, series, labels, title, ylabel))
        paths.append(path)
    return paths


def write_bundle(log: TrajectoryLog, out_dir, figures: bool = False) -> dict[str, Path]:
    """Write trajectories.csv + summary.json (+ figures) into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectories": write_trajectories_csv(log, out_dir / "trajectories.csv"),
        "summary": write_summary_json(log, out_dir / "summary.json"),
    }
    if figures:
        for p in write_figures(log, out_dir):
            paths[p.stem] = p
    return paths
