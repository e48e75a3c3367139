"""Command-line front end: scenario runs, gain certification, verification.

Exit codes: 0 success, 1 configuration or check failure, 2 divergence,
3 connectivity assumption violated. The ELSIM_LOG environment variable
(debug / info / warning / error) controls diagnostic verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .engine import Simulation, SimulationDiverged
from .network import GainSet, SpanningTreeError, gain_bounds, has_spanning_tree, pq_certificate
from .results import write_bundle
from .verify import SUITES, run_suites

log = logging.getLogger("elsim")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_ASSUMPTION = 3


def _setup_logging():
    level = os.environ.get("ELSIM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            from dataclasses import replace
            cfg = replace(cfg, seed=args.seed)
        sim = Simulation(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("certificate status: %s", sim.cert_status)
    try:
        traj = sim.run()
    except SimulationDiverged as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    paths = write_bundle(traj, args.out, figures=args.figures)
    for name, path in paths.items():
        print(f"{name}: {path}")
    print(f"rows: {traj.t.size}  runtime: {traj.runtime_s:.2f}s  "
          f"certificate: {traj.cert_status}")
    return EXIT_OK


def cmd_check_gains(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    top = cfg.topology
    print(f"followers: {top.n}")
    tree = has_spanning_tree(top)
    print(f"leader-rooted spanning tree: {'yes' if tree else 'NO'}")
    if not tree:
        print("connectivity assumption violated; certificate unavailable",
              file=sys.stderr)
        return EXIT_ASSUMPTION
    try:
        cert = pq_certificate(top)
    except SpanningTreeError as exc:  # pragma: no cover - guarded above
        print(f"certificate refused: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    feas = gain_bounds(cert, cfg.gains)
    print(f"h = (L+B)^-1 1      : {cert.h}")
    print(f"P diagonal          : {cert.p_diag}")
    print(f"lambda_min(Q)       : {cert.lambda_min_q:.6g}")
    print(f"lambda_max(P)       : {cert.lambda_max_p:.6g}")
    print(f"sigma_max(L+B)      : {cert.sigma_max_lb:.6g}")
    print(f"kc2 = {feas.kc2:g}  must exceed {feas.kc2_bound:.6g}  "
          f"[{'PASS' if feas.kc2_ok else 'FAIL'}]")
    print(f"kc3 = {feas.kc3:g}  must exceed {feas.kc3_bound:.6g}  "
          f"[{'PASS' if feas.kc3_ok else 'FAIL'}]")
    print(f"varpi = {feas.varpi:.6g}  alphas = "
          + ", ".join(f"{a:.6g}" for a in feas.alphas))
    print(f"overall: {'PASS' if feas.ok else 'FAIL'}")
    return EXIT_OK if feas.ok else EXIT_CONFIG


def cmd_verify(args) -> int:
    try:
        results = run_suites(args.suite or None, seed=args.seed, jobs=args.jobs)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    failed = []
    for res in results:
        print(f"== {res.name}: {'PASS' if res.ok else 'FAIL'}")
        for line in res.lines:
            print(f"   {line}")
        if not res.ok:
            failed.append(res.name)
    if failed:
        print(f"FAILED suites: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"all {len(results)} suites passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elsim",
        description="Distributed output-feedback tracking of networked two-link arms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write a results bundle")
    p_run.add_argument("--config", required=True, help="scenario JSON file")
    p_run.add_argument("--out", required=True, type=Path, help="output directory")
    p_run.add_argument("--figures", action="store_true", help="also emit SVG charts")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.set_defaults(func=cmd_run)

    p_gain = sub.add_parser("check-gains", help="evaluate the gain-feasibility certificate")
    p_gain.add_argument("--config", required=True, help="scenario JSON file")
    p_gain.set_defaults(func=cmd_check_gains)

    p_ver = sub.add_parser("verify", help="run the verification suites")
    p_ver.add_argument("--suite", action="append", choices=sorted(SUITES),
                       help="run only this suite (repeatable)")
    p_ver.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    p_ver.add_argument("--jobs", type=int, default=1, help="run suites concurrently")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry():  # console-script hook
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
