import logging
import os

from FloqSpec.errors import InvalidProblemError
from FloqSpec.measure_model import validate_system
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

script_dir = os.path.dirname(os.path.abspath(__file__))
version_py = os.path.join(script_dir, "_version.py")
with open(version_py) as _vf:
    exec(_vf.read())

logger = logging.getLogger(__name__)


def main(argv=None):
    parser = tool_parser("Validate",
                         "Check a problem against the standing hypotheses and report the singular set Lambda.",
                         "Validate {}".format(__version__))
    add_problem_args(parser)
    add_output_args(parser, choices=("json",))

    def _run(args):
        options = options_from_args(args)
        system = load_system(args, options, validate=False)
        report = validate_system(system, options)
        doc = report.to_dict()
        if report.ok:
            doc["base_point"] = system.x0
            doc["base_point_defaulted"] = system.base_point_defaulted
        write_text(dumps_json(doc), args.output_file)
        if not report.ok:
            raise InvalidProblemError(report)

    return run_tool(parser, argv, _run)


if __name__ == "__main__":
    raise SystemExit(main())
