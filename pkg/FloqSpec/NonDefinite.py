import logging
import os

from FloqSpec.problem_io import (
    add_output_args,
    add_problem_args,
    dumps_json,
    load_system,
    options_from_args,
    run_tool,
    tool_parser,
    write_text,
)
from FloqSpec.spectral import detect_l0

script_dir = os.path.dirname(os.path.abspath(__file__))
version_py = os.path.join(script_dir, "_version.py")
with open(version_py) as _vf:
    exec(_vf.read())

logger = logging.getLogger(__name__)


def main(argv=None):
    parser = tool_parser("NonDefinite",
                         "Detect solutions of J u' + q u = 0 with w u = 0 (the space L0).",
                         "NonDefinite {}".format(__version__))
    add_problem_args(parser)
    parser.add_argument("--probe", type=float, default=None,
                        help="Real lambda at which Floquet solutions are computed (default 0).")
    add_output_args(parser, choices=("json",))

    def _run(args):
        options = options_from_args(args).replace(l0_probe=args.probe)
        system = load_system(args, options)
        write_text(dumps_json(detect_l0(system, options).to_dict()), args.output_file)

    return run_tool(parser, argv, _run)


if __name__ == "__main__":
    raise SystemExit(main())
