"""
calibrate subcommand for the Calibration Toolkit
Runs one method (or all applicable methods) on a manifest problem
"""

import logging

import pandas as pd

from calibkit.calibration.estimators import METHODS, applicable_methods, calibrate
from calibkit.cli.options import add_output_argument, add_quad_argument, phi_grid_from_args
from calibkit.errors import EXIT_OK, InputError
from calibkit.io.manifest import load_manifest
from calibkit.io.outputs import OutputWriter

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("calibrate", help="calibrate a problem described by a manifest")
    parser.add_argument("--manifest", required=True, help="problem manifest (JSON)")
    parser.add_argument("--method", default="all", help=f"one of {', '.join(METHODS)} or all")
    add_output_argument(parser, "calibrate_out")
    add_quad_argument(parser)
    parser.add_argument("--phi-grid", default=None, help="profile likelihood grid a:b:steps")
    parser.set_defaults(handler=run)


def selected_methods(name, problem):
    if name == "all":
        return applicable_methods(problem)
    if name not in METHODS:
        raise InputError(f"unknown method {name!r}; choose from {', '.join(METHODS)} or all")
    return [name]


def run_methods(manifest, names, quad_order=None, phi_grid=None):
    """Run the named methods on a loaded manifest, flags overriding manifest settings"""
    quad_order = quad_order or manifest.quad_order
    phi_grid = phi_grid if phi_grid is not None else manifest.phi_grid
    results = {}
    for name in names:
        results[name] = calibrate(
            manifest.problem, name,
            kernel=manifest.kernel,
            phi_grid=phi_grid,
            schedule=manifest.schedule,
            quad=quad_order,
            nugget=manifest.nugget,
            optimizer=manifest.optimizer,
        )
    return results


def run(args):
    manifest = load_manifest(args.manifest)
    names = selected_methods(args.method, manifest.problem)
    results = run_methods(manifest, names, args.quad_order, phi_grid_from_args(args.phi_grid))

    writer = OutputWriter(args.out, manifest.sha256)
    writer.json("result.json", {
        "manifest": manifest.path.name,
        "manifest_sha256": manifest.sha256,
        "problem": manifest.problem.name,
        "results": {name: result.to_dict() for name, result in results.items()},
    })
    table = pd.DataFrame([result.summary_row() for result in results.values()])
    text = table.to_string(index=False)
    writer.text("result.txt", text, table.columns)
    print(text)
    return EXIT_OK
