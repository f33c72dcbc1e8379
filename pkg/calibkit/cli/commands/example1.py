"""
example1 subcommand for the Calibration Toolkit
Writes the three-candidate example tables and runs the reference checks
"""

import logging

import pandas as pd

from calibkit.cli.options import add_output_argument, add_quad_argument, phi_grid_from_args, sizes_from_args
from calibkit.errors import EXIT_NUMERICAL, EXIT_OK
from calibkit.experiments.example1 import SWEEP_SIZES, run_example1
from calibkit.io.outputs import OutputWriter

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("example1", help="reproduce the three-candidate example")
    add_output_argument(parser, "example1_out")
    add_quad_argument(parser)
    parser.add_argument("--phi-grid", default=None, help="profile likelihood grid a:b:steps (default 1:6:51)")
    parser.add_argument("--sizes", default=None,
                        help=f"design sizes of the selection sweep (default {','.join(map(str, SWEEP_SIZES))})")
    parser.set_defaults(handler=run)


def run(args):
    sizes = sizes_from_args(args.sizes) or SWEEP_SIZES
    report = run_example1(args.quad_order, phi_grid_from_args(args.phi_grid), sizes)

    writer = OutputWriter(args.out)
    writer.csv("eigen.csv", report.eigen_table)
    writer.csv("pss.csv", report.pss)
    writer.csv("profile.csv", report.profile)
    writer.csv("sweep.csv", report.sweep)
    writer.json("summary.json", report.summary)

    checks = pd.DataFrame([check.to_dict() for check in report.checks])
    checks["passed"] = checks["passed"].map({True: "ok", False: "FAILED"})
    print(report.pss.to_string(index=False))
    print()
    print(checks.to_string(index=False))
    if not report.passed:
        failed = [check.name for check in report.checks if not check.passed]
        logger.error("%d reference checks failed: %s", len(failed), ", ".join(failed))
        return EXIT_NUMERICAL
    return EXIT_OK
