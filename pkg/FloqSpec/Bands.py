import logging
import os

from FloqSpec.errors import UsageError
from FloqSpec.problem_io import (
    add_numeric_args,
    add_output_args,
    add_problem_args,
    dumps_json,
    load_system,
    options_from_args,
    run_tool,
    tool_parser,
    write_text,
)
from FloqSpec.spectral import scalar_spectrum, stability_bands

script_dir = os.path.dirname(os.path.abspath(__file__))
version_py = os.path.join(script_dir, "_version.py")
with open(version_py) as _vf:
    exec(_vf.read())

logger = logging.getLogger(__name__)


def band_report(system, lam_min, lam_max, options):
    """Bands of an n=2 system, or the whole-line report of an n=1 system."""
    if system.n == 1:
        return scalar_spectrum(system, lam_min, lam_max, options)
    return stability_bands(system, lam_min, lam_max, options)


def main(argv=None):
    parser = tool_parser("Bands",
                         "Spectral bands {|D| <= 2}, band edges and gaps inside a lambda window.",
                         "Bands {}".format(__version__))
    add_problem_args(parser)
    parser.add_argument("--lambda-min", type=float, default=None,
                        help="Left end of the window (examples default to their own window).")
    parser.add_argument("--lambda-max", type=float, default=None,
                        help="Right end of the window.")
    add_numeric_args(parser)
    add_output_args(parser, choices=("json",))

    def _run(args):
        options = options_from_args(args)
        system = load_system(args, options)
        lo, hi = args.lambda_min, args.lambda_max
        if args.example and (lo is None or hi is None):
            from FloqSpec.example_registry import get_example

            window = get_example(args.example).window
            lo = window[0] if lo is None else lo
            hi = window[1] if hi is None else hi
        if lo is None or hi is None:
            raise UsageError("--lambda-min and --lambda-max are required with --problem")
        report = band_report(system, lo, hi, options)
        write_text(dumps_json(report.to_dict()), args.output_file)

    return run_tool(parser, argv, _run)


if __name__ == "__main__":
    raise SystemExit(main())
