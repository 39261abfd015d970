#!/usr/bin/env python3
# src/hodse/cli.py
import argparse
import logging
import os
import sys
import traceback
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__, estimate_file, simulate
from .errors import HodseError, InputError, NumericError
from .rules import ExitCode, SeparableBase
from .serializer import ReportSerializer, write_json, write_kernel_table
from .smoothing import PROFILES, SmoothedFunctional, default_profile, kernel_eval, profile_by_name
from .validate import SUITES, run_suites

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def _threads_default():
    raw = os.environ.get("HODSE_THREADS")
    if not raw:
        return None
    try:
        val = int(raw)
    except ValueError:
        raise InputError(f"HODSE_THREADS must be an integer, got {raw!r}") from None
    if val < 1:
        raise InputError(f"HODSE_THREADS must be >= 1, got {val}")
    return val


def _positive_float(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not val > 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return val


def _grid(text):
    """lo:hi:count"""
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:count, got {text!r}") from None
    if count < 2 or not lo < hi:
        raise argparse.ArgumentTypeError(f"grid needs lo < hi and count >= 2, got {text!r}")
    return np.linspace(lo, hi, count)


def _orders(text):
    try:
        orders = sorted({int(part) for part in text.split(",") if part.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"orders must be comma-separated integers, got {text!r}") from None
    if any(k < 1 for k in orders):
        raise argparse.ArgumentTypeError("derivative orders start at 1")
    return orders


def _subparser(sub, name, help_text, epilog=None):
    sp = sub.add_parser(name, help=help_text, description=help_text, add_help=False,
                        formatter_class=argparse.RawDescriptionHelpFormatter, epilog=epilog)
    sp.add_argument("--help", action="help", help="Show this message and exit")
    sp.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help="Enable verbose output")
    return sp


def build_parser():
    p = argparse.ArgumentParser(
        prog="hodse",
        description="Bias-corrected estimation of functionals of a noisy mean",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Estimate a functional from a CSV of observations
  hodse estimate data.csv "poly:x^2" --order 2

  # Non-smooth separable functional with explicit bandwidth
  hodse estimate data.csv "sep:abs" -h 0.45 --out estimate.json

  # Run a bundled simulation
  hodse simulate smoke.cfg --threads 4

  # Tabulate the smoothing kernel and derivatives of f_h
  hodse kernel -h 0.1 --grid=-2:2:401 --orders 1,2 --out kernel.csv

  # Self-check, sub-second suites only
  hodse validate --fast
""",
    )
    p.add_argument("-v", "--version", action="version", version=f"HODSE {__version__}")
    p.add_argument("--verbose", action="store_true", help="Enable verbose output")
    sub = p.add_subparsers(dest="command", required=True)

    est = _subparser(sub, "estimate", "Estimate f(theta) from a data file")
    est.add_argument("data", help="Headerless CSV, rows are observations")
    est.add_argument("functional", help="poly:<expr> | fn:<name> | sep:<base>[:h=<v>]")
    est.add_argument("-m", "--order", type=int, help="Expansion order m (default: automatic)")
    est.add_argument("-h", "--bandwidth", type=_positive_float, help="Smoothing bandwidth for sep:abs / sep:pow")
    est.add_argument("--path", choices=["auto", "separable", "bootstrap", "jackknife"], default="auto",
                     help="Estimator form (default: auto)")
    est.add_argument("--draws", type=int, default=2000, help="Bootstrap draws (default: 2000)")
    est.add_argument("--seed", type=int, default=0, help="Master seed (default: 0)")
    est.add_argument("--out", help="Also write the estimate record as JSON")

    sim = _subparser(sub, "simulate", "Run a Monte Carlo experiment from a config file")
    sim.add_argument("config", help="Config file, or the name of a bundled config")
    sim.add_argument("-m", "--order", type=int, help="Override the expansion order")
    sim.add_argument("-h", "--bandwidth", type=_positive_float, help="Override the bandwidth")
    sim.add_argument("--seed", type=int, help="Override the master seed")
    sim.add_argument("--replications", type=int, help="Override the replication count")
    sim.add_argument("--threads", type=int, help="Worker threads (default: $HODSE_THREADS or 1)")
    sim.add_argument("--out", help="JSON report path (CSV goes next to it)")

    ker = _subparser(sub, "kernel", "Tabulate K, f_h and derivatives of f_h on a grid")
    ker.add_argument("--profile", choices=sorted(PROFILES), default="default", help="Frequency profile (default: default)")
    ker.add_argument("-h", "--bandwidth", type=_positive_float, default=0.5, help="Bandwidth (default: 0.5)")
    ker.add_argument("--p", type=float, default=1.0, help="Exponent of |x|^p, 1 = abs (default: 1)")
    ker.add_argument("--grid", type=_grid, default="-3:3:121", help="lo:hi:count (default: -3:3:121)")
    ker.add_argument("--orders", type=_orders, default="1,2", help="Derivative orders (default: 1,2)")
    ker.add_argument("--out", help="CSV path (default: standard output)")

    val = _subparser(sub, "validate", "Run the self-validation suites")
    val.add_argument("--fast", action="store_true", help="Only the sub-second suites")
    val.add_argument("--scope", help=f"Comma-separated suites from: {', '.join(SUITES)}")
    val.add_argument("--out", help="Write results as JSON")
    return p


def cmd_estimate(args):
    result = estimate_file(args.data, args.functional, order=args.order, bandwidth=args.bandwidth,
                           path=args.path, draws=args.draws, seed=args.seed, output=args.out)
    print(f"value = {result.value:.17g}")
    print(f"m = {result.order}")
    print(f"h = {result.bandwidth if result.bandwidth is not None else '-'}")
    print(f"path = {result.path.value}")
    print(f"plug_in = {result.plug_in:.17g}")
    for k, term in enumerate(result.per_order_terms, start=2):
        print(f"term[{k}] = {term:.17g}")
    return ExitCode.OK


def cmd_simulate(args):
    threads = args.threads if args.threads is not None else _threads_default()
    csv_out = str(Path(args.out).with_suffix(".csv")) if args.out else None
    report = simulate(args.config, threads=threads, seed=args.seed, replications=args.replications,
                      order=args.order, bandwidth=args.bandwidth, output=args.out, csv_output=csv_out)
    print(f"📊 m={report.order}, h={report.bandwidth}, target={report.target:.6g}, failures={report.failures}")
    for line in ReportSerializer(report).summary_lines():
        print(line)
    if report.outside_theory:
        print("⚠️  noise family lies outside the moment condition (outside-theory run)")
    return ExitCode.OK


def _column(fn, xs):
    """Evaluate vectorized; on failure retry point by point, NaN where it still fails."""
    try:
        return np.asarray(fn(xs), dtype=float), 0
    except NumericError:
        out = np.full(xs.shape, np.nan)
        for i, x in enumerate(xs):
            try:
                out[i] = float(fn(np.array([x]))[0])
            except NumericError as e:
                logger.debug("cell x=%g failed: %s", x, e)
        return out, int(np.isnan(out).sum())


def kernel_table(h, p, xs, orders, profile=None):
    profile = profile or default_profile()
    base = SeparableBase.ABS if p == 1.0 else SeparableBase.POW
    sf = SmoothedFunctional(base, h, p=p, profile=profile)
    columns = {"x": xs}
    failed = 0
    columns["K"], bad = _column(lambda v: kernel_eval(profile, v), xs)
    failed += bad
    columns["f0"] = sf.f0(xs)
    columns["f_h"], bad = _column(sf.value, xs)
    failed += bad
    for k in orders:
        columns[f"f_h^({k})"], bad = _column(lambda v, k=k: sf.derivative(v, k), xs)
        failed += bad
    return pd.DataFrame(columns), failed


def cmd_kernel(args):
    frame, failed = kernel_table(args.bandwidth, args.p, args.grid, args.orders, profile_by_name(args.profile))
    if args.out:
        write_kernel_table(frame, args.out)
        print(f"✅  kernel table saved → {args.out}")
    else:
        frame.to_csv(sys.stdout, index=False, float_format="%.17g", na_rep="NaN", lineterminator="\n")
    if failed:
        logger.warning("%d kernel table cells did not converge", failed)
        print(f"⚠️  {failed} cells set to NaN (quadrature did not converge)", file=sys.stderr)
    return ExitCode.OK


def cmd_validate(args):
    scope = [s.strip() for s in args.scope.split(",") if s.strip()] if args.scope else None
    results = run_suites(fast=args.fast, scope=scope)
    for r in results:
        mark = "✅" if r.passed else "❌"
        print(f"{mark} {r.name:<16} {r.seconds:7.2f}s  {r.detail}")
    if args.out:
        write_json([r.as_dict() for r in results], args.out)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"❌ {len(failed)} suite(s) failed: {', '.join(failed)}")
        return ExitCode.VALIDATION_FAILED
    print(f"✅ all {len(results)} suites passed")
    return ExitCode.OK


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "kernel": cmd_kernel,
    "validate": cmd_validate,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format=LOG_FORMAT)
    try:
        return int(COMMANDS[args.command](args))
    except HodseError as e:
        if args.verbose:
            traceback.print_exc()
        print(f"❌ Error: {e}", file=sys.stderr)
        return int(e.exit_code)
    except OSError as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return int(ExitCode.INPUT)


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
