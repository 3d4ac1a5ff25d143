import logging
import os

from FloqSpec.problem_io import (
    add_output_args,
    add_problem_args,
    dumps_json,
    load_system,
    options_from_args,
    parse_complex,
    run_tool,
    tool_parser,
    write_text,
)
from FloqSpec.spectral import GreensKernel

script_dir = os.path.dirname(os.path.abspath(__file__))
version_py = os.path.join(script_dir, "_version.py")
with open(version_py) as _vf:
    exec(_vf.read())

logger = logging.getLogger(__name__)


def main(argv=None):
    parser = tool_parser("Greens",
                         "Green's function G(x, y) at a lambda of the resolvent set (n=2).",
                         "Greens {}".format(__version__))
    add_problem_args(parser)
    parser.add_argument("--lambda", dest="lam", type=str, required=True,
                        help="Spectral parameter off the spectrum; complex values as 1+2j or 1+2i.")
    parser.add_argument("--x", type=float, required=True, help="First argument of G.")
    parser.add_argument("--y", type=float, required=True, help="Second argument of G.")
    add_output_args(parser, choices=("json",))

    def _run(args):
        options = options_from_args(args)
        system = load_system(args, options)
        kernel = GreensKernel(system, parse_complex(args.lam), options)
        doc = kernel.value(args.x, args.y).to_dict()
        doc["multipliers"] = list(kernel.data.multipliers)
        doc["normalisation_residual"] = kernel.normalisation_residual(args.x)
        write_text(dumps_json(doc), args.output_file)

    return run_tool(parser, argv, _run)


if __name__ == "__main__":
    raise SystemExit(main())
