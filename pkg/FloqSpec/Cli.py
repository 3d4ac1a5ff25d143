#!/usr/bin/env python3
"""
FloqSpec/Cli.py
---------------------------------------------------------------------
Unified command-line wrapper for the FloqSpec tools.

Usage
-----
    $ FloqSpec <tool> [tool-specific options]

Each tool (validate, discriminant, bands, ...) is a sub-command; every
remaining CLI token is forwarded untouched to the tool's ``main(argv)``,
whose return value becomes the exit status:

    0  success
    1  usage error
    2  invalid problem (parse error or violated hypotheses)
    3  query on the spectrum or on the singular set Lambda
"""
from __future__ import annotations

import argparse
import sys
from typing import Callable, Dict, List, Optional

from FloqSpec.Validate import main as _run_validate
from FloqSpec.Discriminant import main as _run_discriminant
from FloqSpec.Bands import main as _run_bands
from FloqSpec.Monodromy import main as _run_monodromy
from FloqSpec.Greens import main as _run_greens
from FloqSpec.Resolvent import main as _run_resolvent
from FloqSpec.NonDefinite import main as _run_l0
from FloqSpec.Examples import main as _run_examples
from FloqSpec.errors import EXIT_USAGE
from FloqSpec.problem_io import ToolArgumentParser

# ----------------------------------------------------------------------
# Sub-command registry
# ----------------------------------------------------------------------
_SUBCOMMANDS: Dict[str, Callable[[Optional[List[str]]], int]] = {
    "validate": _run_validate,
    "discriminant": _run_discriminant,
    "bands": _run_bands,
    "monodromy": _run_monodromy,
    "greens": _run_greens,
    "resolvent": _run_resolvent,
    "l0": _run_l0,
    "examples": _run_examples,
}

_SUBCOMMAND_DESCR: Dict[str, str] = {
    "validate": "Check hypotheses and report the singular set Lambda",
    "discriminant": "Sample D(lambda) on a grid (CSV)",
    "bands": "Spectral bands, edges and gaps in a window",
    "monodromy": "Monodromy matrix, multipliers and structure at one lambda",
    "greens": "Green's function G(x, y) off the spectrum",
    "resolvent": "Resolvent applied to a source on atoms of w",
    "l0": "Detect a non-trivial L0 (non-definite problem)",
    "examples": "Built-in closed-form example systems",
}

# ----------------------------------------------------------------------
# CLI construction helpers
# ----------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    """Return the top-level parser with one sub-parser per tool."""
    parser = ToolArgumentParser(
        prog="FloqSpec",
        description="Floquet and spectral analysis of periodic canonical systems (wrapper for individual tools)",
    )

    subparsers = parser.add_subparsers(
        title="Available tools",
        dest="cmd",
        metavar="<tool>",
        required=True,
    )

    for name in _SUBCOMMANDS:
        help_line = _SUBCOMMAND_DESCR.get(name, "(no description)")
        sp = subparsers.add_parser(
            name,
            help=help_line,
            description=help_line,
            add_help=False,  # the tool defines -h/--help
        )
        sp.set_defaults(_entry=_SUBCOMMANDS[name])

    return parser

# ----------------------------------------------------------------------
# Public entry point
# ----------------------------------------------------------------------

def main(argv: Optional[List[str]] = None) -> int:
    """Parse the wrapper-level options and dispatch to the chosen tool."""

    argv = sys.argv[1:] if argv is None else argv
    parser = _build_parser()

    # First-stage parse: identify the sub-command and collect the rest
    ns, rest = parser.parse_known_args(argv)

    if not hasattr(ns, "_entry"):
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    entry: Callable[[Optional[List[str]]], int] = getattr(ns, "_entry")
    return entry(rest)


if __name__ == "__main__":
    sys.exit(main())
