"""
Command line entry point for the Calibration Toolkit
"""

import logging
import sys

from calibkit import TOOL_NAME, __version__
from calibkit.cli.commands import calibrate, eig, example1, interp, rates
from calibkit.cli.options import ArgumentParser
from calibkit.errors import CalibkitError

logger = logging.getLogger(__name__)

COMMANDS = (example1, calibrate, rates, eig, interp)

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def build_parser():
    parser = ArgumentParser(
        prog=TOOL_NAME,
        description="Frequentist calibration of computer models: KO, modified KO, least L2 and OLS",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv=None):
    """Parse arguments, run the subcommand and return its exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except CalibkitError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
