import logging
import os

from FloqSpec.floquet_core import multipliers_exponents
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
from FloqSpec.spectral import classify_lambda

script_dir = os.path.dirname(os.path.abspath(__file__))
version_py = os.path.join(script_dir, "_version.py")
with open(version_py) as _vf:
    exec(_vf.read())

logger = logging.getLogger(__name__)


def monodromy_report(system, lam, options):
    data = multipliers_exponents(system, lam, options)
    mono = data.monodromy
    return {
        "lambda": complex(lam),
        "M": mono.M,
        "det_M": mono.det_M,
        "D": mono.D,
        "multipliers": list(data.multipliers),
        "exponents": list(data.exponents),
        "structure": data.structure,
        "near_threshold": data.near_threshold,
        "classification": classify_lambda(system, lam, options),
        "base_point": system.x0,
    }


def main(argv=None):
    parser = tool_parser("Monodromy",
                         "Monodromy matrix, multipliers, exponents and structure at one lambda.",
                         "Monodromy {}".format(__version__))
    add_problem_args(parser)
    parser.add_argument("--lambda", dest="lam", type=str, required=True,
                        help="Spectral parameter; complex values as 1+2j or 1+2i.")
    add_output_args(parser, choices=("json",))

    def _run(args):
        options = options_from_args(args)
        system = load_system(args, options)
        report = monodromy_report(system, parse_complex(args.lam), options)
        write_text(dumps_json(report), args.output_file)

    return run_tool(parser, argv, _run)


if __name__ == "__main__":
    raise SystemExit(main())
