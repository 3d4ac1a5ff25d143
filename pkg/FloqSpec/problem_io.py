"""
FloqSpec/problem_io.py
---------------------------------------------------------------------
Problem files, machine-readable output and the plumbing shared by the
command-line tools (argument parser, logging set-up, system loading, exit
codes).

Problem file (JSON, schema_version 1)::

    {"schema_version": 1, "n": 2, "period": 1.0, "r": 1.0,
     "q": {"atoms": [{"position": 0.0, "weight": [[1, 0], [0, 0]]}],
           "density": [{"from": 0.0, "to": 1.0, "matrix": [[0, 0], [0, -1]]}]},
     "w": {"atoms": [...], "density": [...]},
     "base_point": 0.5}

``J`` may be given as ``"J": [[0, -r], [r, 0]]`` instead of ``"r"``; for n=1
``"J_imag": s`` means J = i s and matrices may be plain numbers.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from FloqSpec.errors import (
    EXIT_OK,
    EXIT_USAGE,
    FloquetError,
    InvalidProblemError,
    ProblemFileError,
    UsageError,
    exit_code,
)
from FloqSpec.measure_model import (
    Atom,
    CanonicalSystem,
    DensitySegment,
    MatrixMeasureSpec,
    validate_system,
)
from FloqSpec.options import DEFAULT_OPTIONS, NumericOptions

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema_version", "n", "period", "r", "J", "J_imag", "q", "w", "base_point"}


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------

def _number(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError(f"expected a real number, got {value!r}", field)
    value = float(value)
    if not math.isfinite(value):
        raise ProblemFileError(f"expected a finite number, got {value!r}", field)
    return value


def _matrix(value: Any, n: int, field: str) -> np.ndarray:
    if n == 1 and not isinstance(value, list):
        return np.array([[_number(value, field)]])
    if not isinstance(value, list) or len(value) != n:
        raise ProblemFileError(f"expected a {n}x{n} matrix (list of {n} rows)", field)
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != n:
            raise ProblemFileError(f"row {i} must be a list of {n} numbers", field)
        rows.append([_number(v, f"{field}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows)


def _measure(value: Any, n: int, period: float, field: str) -> MatrixMeasureSpec:
    if value is None:
        return MatrixMeasureSpec.zero(period, n)
    if not isinstance(value, dict):
        raise ProblemFileError("expected an object with 'atoms' and/or 'density'", field)
    extra = set(value) - {"atoms", "density"}
    if extra:
        raise ProblemFileError(f"unknown key(s) {sorted(extra)}", field)
    atoms = []
    for i, a in enumerate(value.get("atoms", [])):
        where = f"{field}.atoms[{i}]"
        if not isinstance(a, dict) or set(a) != {"position", "weight"}:
            raise ProblemFileError("atom must have exactly 'position' and 'weight'", where)
        atoms.append(Atom(_number(a["position"], where + ".position"),
                          _matrix(a["weight"], n, where + ".weight")))
    segments = []
    for i, s in enumerate(value.get("density", [])):
        where = f"{field}.density[{i}]"
        if not isinstance(s, dict) or set(s) != {"from", "to", "matrix"}:
            raise ProblemFileError("density segment must have exactly 'from', 'to' and 'matrix'", where)
        segments.append(DensitySegment(_number(s["from"], where + ".from"),
                                       _number(s["to"], where + ".to"),
                                       _matrix(s["matrix"], n, where + ".matrix")))
    return MatrixMeasureSpec(period, n, tuple(atoms), tuple(segments))


def problem_from_dict(doc: Dict[str, Any],
                      options: NumericOptions = DEFAULT_OPTIONS) -> CanonicalSystem:
    """Build (without validating) the system described by a decoded document."""
    if not isinstance(doc, dict):
        raise ProblemFileError("top level must be a JSON object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise ProblemFileError(f"unknown key(s) {sorted(extra)}")
    if "schema_version" not in doc:
        raise ProblemFileError("missing", "schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ProblemFileError(f"unsupported schema version {doc['schema_version']!r}",
                               "schema_version")
    n = doc.get("n")
    if n not in (1, 2) or isinstance(n, bool):
        raise ProblemFileError("must be 1 or 2", "n")
    if "period" not in doc:
        raise ProblemFileError("missing", "period")
    period = _number(doc["period"], "period")
    if period <= 0.0:
        raise ProblemFileError("must be positive", "period")

    if n == 1:
        if "J_imag" not in doc:
            raise ProblemFileError("n=1 problems give J = i*s as 'J_imag': s", "J_imag")
        J = np.array([[1j * _number(doc["J_imag"], "J_imag")]])
    elif "r" in doc and "J" in doc:
        raise ProblemFileError("give either 'r' or 'J', not both", "J")
    elif "r" in doc:
        J = _number(doc["r"], "r") * np.array([[0.0, -1.0], [1.0, 0.0]])
    elif "J" in doc:
        J = _matrix(doc["J"], 2, "J")
    else:
        raise ProblemFileError("n=2 problems need 'r' or 'J'", "r")

    q = _measure(doc.get("q"), n, period, "q")
    w = _measure(doc.get("w"), n, period, "w")
    base = doc.get("base_point")
    base = None if base is None else _number(base, "base_point")
    return CanonicalSystem(J, q, w, base, options=options)


def parse_problem(source: Union[str, Path, Dict[str, Any]],
                  options: NumericOptions = DEFAULT_OPTIONS,
                  validate: bool = True) -> CanonicalSystem:
    """Parse a problem file (path, JSON text or decoded dict) and validate it.

    Raises ``ProblemFileError`` on decode/schema errors and
    ``InvalidProblemError`` (carrying the ``ValidationReport``) when the
    system violates the hypotheses.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if isinstance(source, Path) or not text.lstrip().startswith("{"):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise ProblemFileError(f"cannot read problem file: {exc}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemFileError(f"invalid JSON: {exc.msg} (column {exc.colno})",
                                   line=exc.lineno) from None
    system = problem_from_dict(doc, options)
    if validate:
        report = validate_system(system, options)
        if not report.ok:
            raise InvalidProblemError(report)
    if system.base_point_defaulted:
        logger.info("base point not given; using x0=%.17g", system.x0)
    return system


def _matrix_out(m: np.ndarray, n: int):
    if n == 1:
        return float(np.real(m[0, 0]))
    return [[float(v) for v in row] for row in np.real(m)]


def _measure_out(m: MatrixMeasureSpec, n: int) -> dict:
    return {
        "atoms": [{"position": a.position, "weight": _matrix_out(a.weight, n)} for a in m.atoms],
        "density": [{"from": s.start, "to": s.stop, "matrix": _matrix_out(s.matrix, n)}
                    for s in m.segments],
    }


def problem_to_dict(system: CanonicalSystem) -> dict:
    n = system.n
    doc: Dict[str, Any] = {"schema_version": SCHEMA_VERSION, "n": n, "period": system.period}
    if n == 1:
        doc["J_imag"] = system.scale
    elif np.array_equal(system.J, system.scale * np.array([[0.0, -1.0], [1.0, 0.0]])):
        doc["r"] = system.scale
    else:
        doc["J"] = _matrix_out(system.J, 2)
    doc["q"] = _measure_out(system.q, n)
    doc["w"] = _measure_out(system.w, n)
    if system.base_point is not None:
        doc["base_point"] = system.base_point
    return doc


def serialize_problem(system: CanonicalSystem) -> str:
    """Problem file text; floats keep their shortest round-trip repr."""
    return json.dumps(problem_to_dict(system), indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------
# Output
# ----------------------------------------------------------------------

def to_jsonable(obj: Any) -> Any:
    """Complex numbers become [re, im]; arrays nested lists of [re, im]."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_text(text: str, output_file: Optional[str] = None) -> None:
    if output_file:
        Path(output_file).write_text(text)
        logger.info("wrote %s", output_file)
    else:
        sys.stdout.write(text)


def write_frame(frame: pd.DataFrame, output_file: Optional[str] = None) -> None:
    write_text(frame.to_csv(index=False, float_format="%.17g"), output_file)


def complex_matrix(m: np.ndarray) -> list:
    return to_jsonable(np.asarray(m, dtype=complex))


# ----------------------------------------------------------------------
# Command-line plumbing
# ----------------------------------------------------------------------

class ToolArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def tool_parser(prog: str, description: str, version: str) -> ToolArgumentParser:
    parser = ToolArgumentParser(prog=prog, description=description)
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="More log output on stderr (-v info, -vv debug).")
    parser.add_argument("-V", "--version", action="version",
                        version=version)
    return parser


def add_problem_args(parser: argparse.ArgumentParser, required: bool = True) -> None:
    src = parser.add_mutually_exclusive_group(required=required)
    src.add_argument("--problem", type=str, default=None, help="Path to a JSON problem file.")
    src.add_argument("--example", type=str, default=None,
                     help="Name of a built-in example system instead of a problem file.")
    parser.add_argument("--param", type=str, action="append", default=[], metavar="KEY=VALUE",
                        help="Override an example parameter (repeatable).")
    parser.add_argument("--base-point", type=float, default=None,
                        help="Continuity point x0 in [0, period) (default: middle of the largest atom-free gap).")


def add_numeric_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, default=None, help="Band-edge bisection tolerance.")
    parser.add_argument("--grid-n", type=int, default=None, help="Number of lambda grid points for band search.")
    parser.add_argument("--quad-order", type=int, default=None, help="Gauss-Legendre order per density piece.")


def add_output_args(parser: argparse.ArgumentParser, default: str = "json",
                    choices: Sequence[str] = ("csv", "json")) -> None:
    parser.add_argument("--output", type=str, default=default, choices=list(choices),
                        help="Output format.")
    parser.add_argument("--output-file", type=str, default=None,
                        help="Write to this file instead of stdout.")


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def parse_params(items: Iterable[str]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--param {key}: not a number: {value!r}") from None
    return out


def options_from_args(args: argparse.Namespace) -> NumericOptions:
    for name in ("tol", "grid_n", "quad_order"):
        value = getattr(args, name, None)
        if value is not None and value <= 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    return DEFAULT_OPTIONS.replace(band_tol=getattr(args, "tol", None),
                                   grid_n=getattr(args, "grid_n", None),
                                   quad_order=getattr(args, "quad_order", None))


def load_system(args: argparse.Namespace, options: NumericOptions,
                validate: bool = True) -> CanonicalSystem:
    """System named by --problem or --example (+ --param, --base-point)."""
    if args.example:
        from FloqSpec.example_registry import get_example

        entry = get_example(args.example)
        system = entry.system(parse_params(args.param), base_point=args.base_point,
                              options=options)
        if validate:
            report = validate_system(system, options)
            if not report.ok:
                raise InvalidProblemError(report)
        return system
    if args.param:
        raise UsageError("--param only applies to --example")
    system = parse_problem(args.problem, options, validate=False)
    if args.base_point is not None:
        system = system.with_base_point(args.base_point)
    if validate:
        report = validate_system(system, options)
        if not report.ok:
            raise InvalidProblemError(report)
    return system


def setup_logging(verbose: int = 0) -> None:
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, format="[%(levelname)s] %(message)s", level=level)
    logging.getLogger().setLevel(level)


def run_tool(parser: argparse.ArgumentParser, argv: Optional[List[str]],
             body: Callable[[argparse.Namespace], Optional[int]]) -> int:
    """Parse ``argv``, run ``body`` and turn FloqSpec errors into exit codes."""
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        status = body(args)
    except FloquetError as exc:
        label = getattr(exc, "label", None)
        prefix = f"[{label}] " if label else ""
        print(f"Error: {prefix}{exc}", file=sys.stderr)
        return exit_code(exc)
    return EXIT_OK if status is None else status
