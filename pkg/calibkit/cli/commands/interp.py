"""
interp subcommand for the Calibration Toolkit
Fits a kernel interpolant to a design file and reports its norms
"""

import logging

import numpy as np
import pandas as pd

from calibkit import settings
from calibkit.cli.options import (
    add_kernel_arguments,
    add_output_argument,
    domain_from_args,
    kernel_from_args,
)
from calibkit.core.design import Design, tensor_grid
from calibkit.core.interpolate import fit, log_det, native_norm_sq, predict_many, profile_loglik_from_factor
from calibkit.errors import EXIT_OK, DataError, InputError, UndefinedLikelihoodError
from calibkit.io.jsonio import read_design_json
from calibkit.io.outputs import OutputWriter
from calibkit.io.tables import coordinate_columns, read_table, split_table

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("interp", help="fit a kernel interpolant to a design file")
    parser.add_argument("--design", required=True, help="design CSV (x..., y) or JSON")
    add_kernel_arguments(parser)
    parser.add_argument("--lower", default=None, help="domain lower bounds (default: bounding box)")
    parser.add_argument("--upper", default=None, help="domain upper bounds")
    parser.add_argument("--nugget", choices=["none", "adaptive"], default="adaptive")
    parser.add_argument("--predict-grid", type=int, default=None,
                        help="also predict on a tensor grid with this many points per dimension")
    add_output_argument(parser, "interp_out")
    parser.set_defaults(handler=run)


def _load(path, domain):
    if str(path).lower().endswith(".json"):
        design, values = read_design_json(path)
        return (design if domain is None else design.with_domain(domain)), values
    X, _, y = split_table(read_table(path), domain.dim if domain else None)
    return Design.from_points(X, domain), y


def run(args):
    domain = domain_from_args(args.lower, args.upper)
    design, values = _load(args.design, domain)
    if values is None:
        raise DataError(f"{args.design} has no response values")
    kernel = kernel_from_args(args)
    policy = settings.NO_NUGGET if args.nugget == "none" else settings.DEFAULT_NUGGET
    interp = fit(design, values, kernel, policy)

    report = {
        "n": design.size,
        "kernel": kernel.to_dict(),
        "nugget_used": interp.nugget_used,
        "native_norm_sq": native_norm_sq(interp),
        "log_det": log_det(interp),
    }
    try:
        report["profile_loglik"] = profile_loglik_from_factor(interp.chol, interp.values)
    except (UndefinedLikelihoodError, InputError) as exc:
        logger.warning("%s", exc)
        report["profile_loglik"] = None

    writer = OutputWriter(args.out)
    writer.json("interpolator.json", interp.to_dict())
    writer.json("report.json", report)
    if args.predict_grid:
        grid = tensor_grid(design.domain, args.predict_grid)
        frame = pd.DataFrame(grid, columns=coordinate_columns(design.dim))
        frame["prediction"] = predict_many(interp, grid)
        writer.csv("predictions.csv", frame)
    print(pd.Series(report, dtype=object).to_string())
    residual = np.max(np.abs(predict_many(interp, design.points) - interp.values))
    logger.info("largest residual at the design points: %.3e", residual)
    return EXIT_OK
