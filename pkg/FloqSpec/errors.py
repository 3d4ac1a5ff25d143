"""
FloqSpec/errors.py
---------------------------------------------------------------------
Exception hierarchy shared by the numerical core and the command-line tools.

Bad input is a ``ValueError`` (as everywhere in the toolkit); a spectral
parameter hitting the singular set is an ``ArithmeticError``.  The CLI maps
every class to one of the documented exit codes through ``exit_code``.
"""
from __future__ import annotations

from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID_PROBLEM = 2
EXIT_SPECTRUM = 3


class FloquetError(Exception):
    """Base class of every error raised by FloqSpec."""

    exit_code = EXIT_USAGE


class UsageError(FloquetError, ValueError):
    """Bad command-line values (empty window, malformed numbers, ...)."""

    exit_code = EXIT_USAGE


class StructureError(FloquetError, ValueError):
    """An operation was called on a system of the wrong shape."""

    exit_code = EXIT_INVALID_PROBLEM


class HypothesisError(FloquetError, ValueError):
    """The system violates the standing hypotheses; carries the report."""

    exit_code = EXIT_INVALID_PROBLEM

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class IdenticallySingularError(HypothesisError):
    """det B+(p, .) vanishes identically at some atom: Lambda is all of C."""

    def __init__(self, position: float, report=None):
        super().__init__(
            f"identically singular atom at x={position:.17g}: Lambda = C", report)
        self.position = position


class SingularLambdaError(FloquetError, ArithmeticError):
    """lambda lies in the singular set at the atom ``position``."""

    exit_code = EXIT_SPECTRUM

    def __init__(self, position: float, lam: complex):
        super().__init__(
            f"lambda={complex(lam)} in Lambda at atom p={position:.17g}")
        self.position = position
        self.lam = complex(lam)
        self.label = "singular_lambda"


class SpectrumError(FloquetError, ValueError):
    """A resolvent quantity was requested at a point of S or Lambda."""

    exit_code = EXIT_SPECTRUM

    def __init__(self, message: str, label: str):
        super().__init__(message)
        self.label = label


class JordanStructureError(FloquetError, ValueError):
    """Floquet solution requested for the wrong multiplier structure."""

    exit_code = EXIT_SPECTRUM


class AnchorError(FloquetError, ValueError):
    """A period integral was anchored on an atom."""

    exit_code = EXIT_USAGE


class TrivialWeightError(FloquetError, ValueError):
    """The weight w vanishes identically."""

    exit_code = EXIT_INVALID_PROBLEM


class ProblemFileError(FloquetError, ValueError):
    """A problem file could not be parsed; names the field and/or line."""

    exit_code = EXIT_INVALID_PROBLEM

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.field = field
        self.line = line


class InvalidProblemError(ProblemFileError):
    """The problem parsed but failed ``validate_system``."""

    def __init__(self, report):
        messages = "; ".join(v.message for v in report.violations)
        if report.identically_singular:
            messages = "identically singular (Lambda = C); " + messages
        super().__init__(f"invalid problem: {messages}")
        self.report = report


def exit_code(exc: BaseException) -> int:
    """Exit status used by the command-line tools for ``exc``."""
    return getattr(exc, "exit_code", EXIT_USAGE)
