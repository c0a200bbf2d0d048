"""Command-line entry point: ``landaulab <scenario> [options]``.

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 usage error,
3 numerical failure.
"""

import argparse
import os
import sys

SCENARIOS = (
    "coercivity-sweep", "eigenvalue-anisotropy", "shell-estimate", "covering-audit",
    "counterexample-scaling", "optimality-ratio",
)

EXIT_PASS, EXIT_ASSERT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def build_parser():
    ap = argparse.ArgumentParser(prog="landaulab",
                                 description="Landau-Coulomb entropy dissipation experiments")
    sub = ap.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH", help="INI configuration file")
        sp.add_argument("--out", metavar="DIR", help="output directory")
        sp.add_argument("--threads", type=int, metavar="K", help="worker threads")
        sp.add_argument("--quad-level", type=int, metavar="L",
                        help="number of refinement levels (>= 2)")
        sp.add_argument("--json", action="store_true", help="write the JSON report")
        sp.add_argument("--csv", action="store_true", help="write the CSV table")
        sp.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    return ap


def _reserve_threads(k):
    # the pool size is fixed when numba is first imported
    if "numba" not in sys.modules:
        os.environ["NUMBA_NUM_THREADS"] = str(max(k, 8, os.cpu_count() or 1))


def _set_threads(k):
    import numba

    numba.set_num_threads(min(k, numba.config.NUMBA_NUM_THREADS))


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    _reserve_threads(args.threads or 1)

    from ..errors import LandauLabError, UsageError

    try:
        from .config import ExperimentConfig, load_config

        if args.config:
            cfg = load_config(args.config)
            if cfg.scenario != args.scenario:
                raise UsageError(f"config scenario {cfg.scenario!r} does not match "
                                 f"subcommand {args.scenario!r}")
        else:
            cfg = ExperimentConfig.default(args.scenario)
        changes = {}
        if args.out:
            changes["out_dir"] = args.out
        if args.threads is not None:
            changes["threads"] = args.threads
        if args.quad_level is not None:
            changes["quadrature"] = {**cfg.quadrature, "refinement_levels": args.quad_level}
        if changes:
            cfg = cfg.with_(**changes)
            cfg.__post_init__()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    _set_threads(cfg.threads)
    from . import plotting
    from .scenarios import emit_plotdata, run_scenario, write_outputs

    try:
        report = run_scenario(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LandauLabError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    want_csv, want_json = args.csv, args.json
    if not (want_csv or want_json):
        want_csv = want_json = True
    files = write_outputs(report, cfg.out_dir, want_csv, want_json)
    if report.series:
        files += emit_plotdata(report, cfg.out_dir)
        if not args.no_plots:
            files += plotting.render(report, cfg.out_dir)

    for a in report.assertions:
        print(f"{'PASS' if a.passed else 'FAIL'}  {a.name}  {a.detail}".rstrip())
    for f in files:
        print(f"wrote {f}")
    return EXIT_PASS if report.passed else EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
