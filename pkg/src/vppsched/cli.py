"""Command-line entry point: `vpp-sched run --scenario <file> ...`."""

from __future__ import annotations

import argparse
import logging
import os
import sys


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vpp-sched",
        description="Day-ahead scheduling of a distribution-level virtual "
                    "power plant.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="optimize a scenario and export "
                                       "schedule reports")
    run_p.add_argument("--scenario", required=True,
                       help="path to the scenario TOML file")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario's optimizer seed")
    run_p.add_argument("--mc-samples", type=int, default=0,
                       help="validate report statistics with this many "
                            "Monte-Carlo samples instead of the "
                            "point-estimate weights")
    run_p.add_argument("--deterministic", action="store_true",
                       help="ignore the uncertainty table and run the "
                            "all-means fleet only")
    run_p.add_argument("--baseline-only", action="store_true",
                       help="skip optimization; report the uncontrolled "
                            "baseline")
    run_p.add_argument("--out", default="out",
                       help="output directory (default: ./out)")
    run_p.add_argument("--format", choices=("csv", "json", "both"),
                       default="both", help="report file formats")
    run_p.add_argument("--quiet", action="store_true",
                       help="suppress progress logging")
    return parser


def _apply_thread_cap():
    cap = os.environ.get("VPP_SCHED_THREADS")
    if not cap:
        return
    try:
        n = max(1, int(cap))
    except ValueError:
        return
    os.environ.setdefault("NUMBA_NUM_THREADS", str(n))
    os.environ.setdefault("OMP_NUM_THREADS", str(n))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    log = logging.getLogger("vpp-sched")
    _apply_thread_cap()

    from . import network, optimizer, scenario

    try:
        config = scenario.load_scenario(args.scenario)
    except (scenario.ParseError, scenario.ValidationError) as exc:
        log.error("invalid scenario: %s", exc)
        return 1

    def progress(it, best):
        if not args.quiet and it % 25 == 0:
            log.info("iteration %d: best fitness %.6f", it, best)

    try:
        result = optimizer.run(
            config, seed=args.seed, deterministic=args.deterministic,
            mc_samples=args.mc_samples, baseline_only=args.baseline_only,
            out_dir=args.out, fmt=args.format, progress=progress)
    except (network.NonConvergence, network.SingularJacobian) as exc:
        log.error("power flow failed: %s", exc)
        return 1
    except OSError as exc:
        log.error("i/o error: %s", exc)
        return 1

    if args.baseline_only:
        log.info("baseline report written to %s", args.out)
        return 0
    log.info("best fitness %.6f; reports written to %s",
             result.fitness, args.out)
    if not result.feasible:
        bad = {k: v for k, v in result.violations.items() if v > 1e-6}
        log.error("best schedule is infeasible: %s", bad)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
