"""
eig subcommand for the Calibration Toolkit
Nystrom eigenpairs of a kernel integral operator on a box
"""

import logging

import numpy as np

from calibkit.cli.options import (
    add_kernel_arguments,
    add_output_argument,
    add_quad_argument,
    domain_from_args,
    kernel_from_args,
)
from calibkit.core.design import tensor_grid
from calibkit.core.operator import nystrom_eig
from calibkit.errors import EXIT_OK
from calibkit.io.outputs import OutputWriter

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("eig", help="eigenvalues and eigenfunctions of the kernel operator")
    add_kernel_arguments(parser)
    parser.add_argument("--lower", default="-1", help="comma separated lower bounds, e.g. --lower=-1,-1 (default -1)")
    parser.add_argument("--upper", default="1", help="comma separated upper bounds (default 1)")
    parser.add_argument("--modes", type=int, default=5, help="number of modes to keep")
    parser.add_argument("--grid", type=int, default=201, help="sample points per dimension")
    add_output_argument(parser, "eig_out")
    add_quad_argument(parser)
    parser.set_defaults(handler=run)


def run(args):
    kernel = kernel_from_args(args)
    domain = domain_from_args(args.lower, args.upper)
    eig = nystrom_eig(kernel, domain, args.quad_order, args.modes)

    gram = eig.orthonormality()
    off_diagonal = float(np.max(np.abs(gram - np.eye(eig.num_modes))))
    trace_gap = abs(float(np.sum(eig.all_eigenvalues)) - domain.volume) / domain.volume
    logger.info("orthonormality defect %.2e, max residual %.2e, trace gap %.2e",
                off_diagonal, float(np.max(eig.residuals())), trace_gap)

    writer = OutputWriter(args.out)
    writer.csv("eigen.csv", eig.eigenvalue_frame())
    writer.csv("eigenfunctions.csv", eig.export_frame(tensor_grid(domain, args.grid)))
    print(eig.eigenvalue_frame().to_string(index=False))
    return EXIT_OK
