import logging
import math
import os

import numpy as np
import pandas as pd

from FloqSpec.errors import SingularLambdaError, UsageError
from FloqSpec.floquet_core import multipliers_exponents
from FloqSpec.problem_io import (
    add_numeric_args,
    add_output_args,
    add_problem_args,
    dumps_json,
    load_system,
    options_from_args,
    run_tool,
    tool_parser,
    write_frame,
    write_text,
)

script_dir = os.path.dirname(os.path.abspath(__file__))
version_py = os.path.join(script_dir, "_version.py")
with open(version_py) as _vf:
    exec(_vf.read())

logger = logging.getLogger(__name__)

COLUMNS = ["lambda", "re_D", "im_D", "abs_rho1", "error"]


def discriminant_table(system, lam_min, lam_max, samples, options):
    """
    Sample D(lambda) on a uniform grid.

    Rows whose lambda hits the singular set keep NaN values and carry the
    error label instead of aborting the sweep.
    """
    if samples < 1:
        raise UsageError("--samples must be at least 1")
    if not (math.isfinite(lam_min) and math.isfinite(lam_max)) or lam_min > lam_max \
            or (samples > 1 and lam_min == lam_max):
        raise UsageError(f"empty window [{lam_min}, {lam_max}]")
    grid = np.linspace(lam_min, lam_max, samples) if samples > 1 else np.array([lam_min])
    rows = []
    for lam in grid:
        try:
            data = multipliers_exponents(system, lam, options)
        except SingularLambdaError as exc:
            logger.warning("lambda=%.17g: %s", lam, exc)
            rows.append([lam, math.nan, math.nan, math.nan, exc.label])
            continue
        D = data.D if system.n == 2 else data.multipliers[0]
        rows.append([lam, D.real, D.imag, abs(data.multipliers[0]), ""])
    return pd.DataFrame(rows, columns=COLUMNS)


def main(argv=None):
    parser = tool_parser("Discriminant",
                         "Sample the Floquet discriminant D(lambda) = tr M(lambda) on a lambda grid.",
                         "Discriminant {}".format(__version__))
    add_problem_args(parser)
    parser.add_argument("--lambda-min", type=float, required=True, help="Left end of the lambda window.")
    parser.add_argument("--lambda-max", type=float, required=True, help="Right end of the lambda window.")
    parser.add_argument("--samples", type=int, default=101, help="Number of grid points (1 = lambda-min only).")
    add_numeric_args(parser)
    add_output_args(parser, default="csv")

    def _run(args):
        options = options_from_args(args)
        system = load_system(args, options)
        frame = discriminant_table(system, args.lambda_min, args.lambda_max, args.samples, options)
        if args.output == "csv":
            write_frame(frame, args.output_file)
        else:
            records = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
            write_text(dumps_json(records), args.output_file)

    return run_tool(parser, argv, _run)


if __name__ == "__main__":
    raise SystemExit(main())
