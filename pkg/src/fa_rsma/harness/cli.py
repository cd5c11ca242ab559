"""Command-line entry point: ``fa-rsma`` or ``python -m fa_rsma.harness``."""

from __future__ import annotations

import argparse
import logging
import sys

from ..conic import TOL_ENV
from .config import CSI_MODES, SCHEMES, ExperimentConfig
from .experiment import run_experiment
from .outputs import emit_outputs
from .trend import trend_check


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fa-rsma",
        description="Secure-rate optimization sweeps for fluid-antenna RSMA with sensing.",
        epilog=f"Set {TOL_ENV} to override the conic solver tolerance (default 1e-8).",
    )
    p.add_argument("--scheme", nargs="+", choices=SCHEMES + ("all",), default=["all"])
    p.add_argument("--csi", choices=CSI_MODES, default="perfect")
    p.add_argument("--users", type=int, default=4)
    p.add_argument("--antennas", type=int, default=4)
    p.add_argument("--paths", type=int, default=12)
    p.add_argument("--power-dbm", type=float, nargs="+", default=[30.0])
    p.add_argument("--region-lambda", type=float, nargs="+", default=[3.0], help="region side A_0 in wavelengths")
    p.add_argument("--rc", type=float, default=None, help="fixed common-rate target; default follows the power schedule")
    p.add_argument("--s0", type=float, nargs="+", default=None, help="sensing thresholds as shares of the best-case sensing energy")
    p.add_argument("--eps", type=float, default=0.01, help="relative CSI error (imperfect CSI)")
    p.add_argument("--drops", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results")
    p.add_argument("--audit", choices=("on", "off"), default="on")
    p.add_argument("--max-outer", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--trend", action="store_true", help="print the paired-drop ordering checks")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    schemes = SCHEMES if "all" in args.scheme else tuple(dict.fromkeys(args.scheme))
    return ExperimentConfig(
        schemes=schemes,
        csi=args.csi,
        n_users=args.users,
        n_antennas=args.antennas,
        n_paths=args.paths,
        power_dbm=tuple(args.power_dbm),
        region_lambda=tuple(args.region_lambda),
        rc=args.rc,
        s0=None if args.s0 is None else tuple(args.s0),
        rel_csi_error=args.eps,
        drops=args.drops,
        seed=args.seed,
        max_outer=args.max_outer,
        audit=args.audit == "on",
        workers=args.workers,
        out=args.out,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = run_experiment(cfg)
    manifest = emit_outputs(result, plots=not args.no_plots)
    ok = [r for r in result.rows if r.ok]
    print(f"{len(result.rows)} runs, {len(result.failures)} failed, {sum(not r.feasible for r in ok)} audit failures; outputs in {cfg.out} (config {manifest['config_hash'][:12]})")
    if args.trend:
        for t in trend_check(result.rows):
            print(t.line())
    return 0
