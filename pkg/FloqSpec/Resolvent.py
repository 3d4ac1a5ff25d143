import logging
import os

import pandas as pd

from FloqSpec.errors import UsageError
from FloqSpec.problem_io import (
    add_output_args,
    add_problem_args,
    dumps_json,
    load_system,
    options_from_args,
    parse_complex,
    run_tool,
    tool_parser,
    write_frame,
    write_text,
)
from FloqSpec.spectral import resolvent_apply

script_dir = os.path.dirname(os.path.abspath(__file__))
version_py = os.path.join(script_dir, "_version.py")
with open(version_py) as _vf:
    exec(_vf.read())

logger = logging.getLogger(__name__)


def parse_source(text):
    """'p:f1,f2' -> (p, [f1, f2])"""
    pos, sep, values = text.partition(":")
    if not sep:
        raise UsageError(f"--source expects POSITION:F1,F2, got {text!r}")
    try:
        position = float(pos)
    except ValueError:
        raise UsageError(f"--source: bad position in {text!r}") from None
    return position, [parse_complex(v) for v in values.split(",")]


def resolvent_frame(output):
    rows = []
    for s in output.samples:
        u = s.value.u_balanced
        row = {"x": s.x, "kind": s.kind}
        for i, v in enumerate(u, start=1):
            row[f"re_u{i}"] = v.real
            row[f"im_u{i}"] = v.imag
        row["jump_residual"] = s.jump_residual
        rows.append(row)
    return pd.DataFrame(rows)


def resolvent_document(output):
    return {
        "lambda": output.lam,
        "samples": [
            {"x": s.x, "kind": s.kind, "u_minus": s.value.u_minus, "u_plus": s.value.u_plus,
             "u_balanced": s.value.u_balanced, "jump_residual": s.jump_residual}
            for s in output.samples
        ],
        "ac_residuals": [list(r) for r in output.ac_residuals],
        "max_jump_residual": output.max_jump_residual,
        "max_ac_residual": output.max_ac_residual,
    }


def main(argv=None):
    parser = tool_parser("Resolvent",
                         "Apply the resolvent at a lambda off the spectrum to a source carried by atoms of w.",
                         "Resolvent {}".format(__version__))
    add_problem_args(parser)
    parser.add_argument("--lambda", dest="lam", type=str, required=True,
                        help="Spectral parameter off the spectrum.")
    parser.add_argument("--source", type=str, action="append", default=[], metavar="P:F1,F2",
                        help="Source value f(P) at an atom P of w (repeatable).")
    parser.add_argument("--sample", type=float, action="append", default=[],
                        help="Extra point at which u is reported (repeatable).")
    parser.add_argument("--extent", type=float, nargs=2, default=None, metavar=("LO", "HI"),
                        help="Report u and residuals at every atom in [LO, HI] as well.")
    add_output_args(parser, default="json")

    def _run(args):
        options = options_from_args(args)
        system = load_system(args, options)
        sources = [parse_source(s) for s in args.source]
        output = resolvent_apply(system, parse_complex(args.lam), sources, args.sample,
                                 tuple(args.extent) if args.extent else None, options=options)
        if args.output == "csv":
            write_frame(resolvent_frame(output), args.output_file)
        else:
            write_text(dumps_json(resolvent_document(output)), args.output_file)

    return run_tool(parser, argv, _run)


if __name__ == "__main__":
    raise SystemExit(main())
