import logging
import os

from FloqSpec.Bands import band_report
from FloqSpec.Discriminant import discriminant_table
from FloqSpec.errors import InvalidProblemError, UsageError
from FloqSpec.example_registry import REGISTRY, check_example, clip_bands, get_example
from FloqSpec.measure_model import validate_system
from FloqSpec.problem_io import (
    add_numeric_args,
    add_output_args,
    dumps_json,
    options_from_args,
    parse_params,
    run_tool,
    serialize_problem,
    tool_parser,
    write_frame,
    write_text,
)

script_dir = os.path.dirname(os.path.abspath(__file__))
version_py = os.path.join(script_dir, "_version.py")
with open(version_py) as _vf:
    exec(_vf.read())

logger = logging.getLogger(__name__)

ACTIONS = ("discriminant", "bands", "check", "export")


def main(argv=None):
    parser = tool_parser("Examples",
                         "Built-in closed-form example systems: list, sample, band search, "
                         "check against the closed form, or export as a problem file.",
                         "Examples {}".format(__version__))
    parser.add_argument("name", type=str, help="Example name, or 'list'.")
    parser.add_argument("action", type=str, nargs="?", default="check", choices=ACTIONS,
                        help="What to do with the example (default: check).")
    parser.add_argument("--param", type=str, action="append", default=[], metavar="KEY=VALUE",
                        help="Override an example parameter (repeatable).")
    parser.add_argument("--lambda-min", type=float, default=None, help="Window start (default: per example).")
    parser.add_argument("--lambda-max", type=float, default=None, help="Window end (default: per example).")
    parser.add_argument("--samples", type=int, default=100, help="Number of lambda samples.")
    add_numeric_args(parser)
    add_output_args(parser, default="json")

    def _run(args):
        if args.name == "list":
            names = [{"name": e.name, "summary": e.summary, "params": e.defaults,
                      "closed_form": e.closed_form is not None} for e in REGISTRY.values()]
            write_text(dumps_json(names), args.output_file)
            return
        entry = get_example(args.name)
        overrides = parse_params(args.param)
        options = options_from_args(args)
        window = (entry.window[0] if args.lambda_min is None else args.lambda_min,
                  entry.window[1] if args.lambda_max is None else args.lambda_max)

        if args.action == "export":
            write_text(serialize_problem(entry.system(overrides)), args.output_file)
            return
        if args.action == "check":
            write_text(dumps_json(check_example(entry, overrides, window, args.samples, options)),
                       args.output_file)
            return

        system = entry.system(overrides, options=options)
        report = validate_system(system, options)
        if not report.ok:
            raise InvalidProblemError(report)
        if args.action == "discriminant":
            frame = discriminant_table(system, window[0], window[1], args.samples, options)
            if entry.closed_form is not None:
                closed = [entry.formula(lam, overrides) for lam in frame["lambda"]]
                frame["re_closed_form"] = [c.real for c in closed]
            if args.output == "csv":
                write_frame(frame, args.output_file)
            else:
                write_text(dumps_json(frame.astype(object).where(frame.notna(), None)
                                      .to_dict(orient="records")), args.output_file)
            return
        if args.action == "bands":
            doc = band_report(system, window[0], window[1], options).to_dict()
            if entry.expected_bands is not None:
                doc["expected_bands"] = [list(b) for b in
                                         clip_bands(entry.expected_bands(entry.params(overrides)), window)]
            write_text(dumps_json(doc), args.output_file)
            return
        raise UsageError(f"unknown action {args.action!r}")

    return run_tool(parser, argv, _run)


if __name__ == "__main__":
    raise SystemExit(main())
