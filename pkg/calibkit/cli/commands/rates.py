"""
rates subcommand for the Calibration Toolkit
Sweeps design sizes and fits convergence slopes
"""

import logging

from calibkit import settings
from calibkit.calibration.estimators import calibrate
from calibkit.calibration.rates import rate_slopes, run_rate_sweep
from calibkit.cli.commands.calibrate import selected_methods
from calibkit.cli.options import add_output_argument, add_quad_argument
from calibkit.errors import EXIT_OK, InputError
from calibkit.io.manifest import load_manifest
from calibkit.io.outputs import OutputWriter

logger = logging.getLogger(__name__)

DEFAULT_ESTIMATORS = ("l2", "ols")
MIN_SIZES = 3


def add_parser(subparsers):
    parser = subparsers.add_parser("rates", help="convergence-rate sweep over design sizes")
    parser.add_argument("--manifest", required=True, help="problem manifest (JSON)")
    parser.add_argument("--sizes", default=None, help="comma separated increasing sizes (at least 3)")
    parser.add_argument("--method", default=None, help="estimator name, comma list or all (default l2,ols)")
    add_output_argument(parser, "rates_out")
    add_quad_argument(parser)
    parser.set_defaults(handler=run)


def _sizes(args, manifest):
    if args.sizes is not None:
        return settings.parse_sizes(args.sizes, MIN_SIZES)
    if "sizes" in manifest.rates:
        return settings.parse_sizes(",".join(str(n) for n in manifest.rates["sizes"]), MIN_SIZES)
    raise InputError("give --sizes or a 'rates.sizes' list in the manifest")


def _estimator_names(args, manifest):
    if args.method is None:
        return list(manifest.rates.get("estimators", DEFAULT_ESTIMATORS))
    names = []
    for item in args.method.split(","):
        names.extend(selected_methods(item.strip(), manifest.problem))
    return [name for name in names if name != "l2_projection"]


def run(args):
    manifest = load_manifest(args.manifest)
    sizes = _sizes(args, manifest)
    quad_order = args.quad_order or manifest.quad_order
    names = _estimator_names(args, manifest)
    if not names:
        raise InputError("no estimators selected")

    def estimator_for(name):
        def estimate(problem):
            return calibrate(problem, name, kernel=manifest.kernel, phi_grid=manifest.phi_grid,
                             schedule=manifest.schedule, quad=quad_order, nugget=manifest.nugget,
                             optimizer=manifest.optimizer, threads=1)
        return estimate

    estimators = {name: estimator_for(name) for name in names}
    frame = run_rate_sweep(manifest.problem_at, sizes, estimators, manifest.reference, quad_order)
    slopes = rate_slopes(frame)

    writer = OutputWriter(args.out, manifest.sha256)
    writer.csv("rates.csv", frame)
    writer.csv("slopes.csv", slopes)
    print(frame.to_string(index=False))
    print()
    print(slopes.to_string(index=False))
    return EXIT_OK
