"""
Shared command line options for the Calibration Toolkit
"""

import argparse

from calibkit import settings
from calibkit.core.design import BoxDomain
from calibkit.core.kernels import KernelFamily, KernelSpec
from calibkit.errors import EXIT_USAGE, InputError


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with the toolkit's usage code"""

    def error(self, message):
        self.print_usage()
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def add_output_argument(parser, default):
    parser.add_argument("--out", default=default, help=f"output directory (default: {default})")


def add_quad_argument(parser):
    parser.add_argument("--quad-order", type=int, default=None,
                        help="Gauss-Legendre order per dimension")


def add_kernel_arguments(parser, phi=1.0):
    group = parser.add_argument_group("kernel")
    group.add_argument("--kernel", choices=[family.value for family in KernelFamily], default="gaussian")
    group.add_argument("--phi", type=float, default=phi, help=f"kernel scale (default: {phi})")
    group.add_argument("--nu", type=float, default=None, help="Matern smoothness (0.5, 1.5, 2.5 or 3.5)")


def kernel_from_args(args):
    if args.kernel == KernelFamily.MATERN.value and args.nu is None:
        raise InputError("--nu is required for the Matern kernel")
    return KernelSpec(args.kernel, args.phi, args.nu if args.kernel == KernelFamily.MATERN.value else None)


def parse_vector(text, name):
    try:
        return tuple(float(item) for item in str(text).split(",") if item.strip())
    except ValueError as exc:
        raise InputError(f"bad {name} {text!r}: {exc}") from exc


def domain_from_args(lower, upper):
    """BoxDomain from comma separated bound strings (None when both are missing)"""
    if lower is None and upper is None:
        return None
    if lower is None or upper is None:
        raise InputError("give both --lower and --upper")
    return BoxDomain(parse_vector(lower, "--lower"), parse_vector(upper, "--upper"))


def phi_grid_from_args(text):
    return None if text is None else settings.parse_phi_grid(text)


def sizes_from_args(text, minimum=1):
    return None if text is None else settings.parse_sizes(text, minimum)
