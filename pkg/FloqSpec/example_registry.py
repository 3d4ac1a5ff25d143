"""
FloqSpec/example_registry.py
---------------------------------------------------------------------
The seven closed-form example systems (n=2, J = [[0,-1],[1,0]]).

Each entry builds its CanonicalSystem from a parameter dict, carries its
closed-form discriminant where one exists and a default lambda window.
``mu`` below is the Dirac comb sum_k delta_k.

  schrodinger-free            q = diag(0,-1), w = diag(1,0)          D = 2 cos(sqrt(lam))
  constant-q-zero-weight      q = [[a,b],[b,d]], w = 0               D = 2 cosh(sqrt(b^2 - a d))
  constant-q-rank-one-weight  q = [[a,b],[b,0]], w = diag(1,0)       D = 2 cosh(b)
  dirac-comb-scalar-weight    q = [[a mu,0],[0,-1]], w = diag(alpha mu, 0)
                                                                     D = 2 + a - alpha lam
  dirac-comb-rank-one         q = [[a,b],[b,0]] mu, w = diag(1,0) mu D = 2 (4+b^2)/(4-b^2)
  dirac-comb-full             q = [[a,b],[b,d]] mu, w = I mu         D = 16/(lam^2-(a+d)lam+ad-b^2+4) - 2
  lambda-everywhere-singular  omega = 2, q = [[0,2],[2,0]] sum_k (delta_2k - delta_2k+1),
                              w = diag(2,0) mu                       (Lambda = C, rejected)
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from FloqSpec.errors import UsageError
from FloqSpec.floquet_core import discriminant
from FloqSpec.measure_model import CanonicalSystem, MatrixMeasureSpec
from FloqSpec.options import DEFAULT_OPTIONS, NumericOptions

logger = logging.getLogger(__name__)

Params = Dict[str, float]


@dataclass(frozen=True)
class ExampleEntry:
    name: str
    summary: str
    build: Callable[[Params], CanonicalSystem]
    defaults: Params = field(default_factory=dict)
    closed_form: Optional[Callable[[complex, Params], complex]] = None
    expected_bands: Optional[Callable[[Params], List[Tuple[float, float]]]] = None
    window: Tuple[float, float] = (-10.0, 10.0)

    def params(self, overrides: Optional[Params] = None) -> Params:
        overrides = dict(overrides or {})
        unknown = sorted(set(overrides) - set(self.defaults))
        if unknown:
            known = ", ".join(sorted(self.defaults)) or "none"
            raise UsageError(f"example '{self.name}' has no parameter(s) {', '.join(unknown)} "
                             f"(available: {known})")
        merged = dict(self.defaults)
        merged.update({k: float(v) for k, v in overrides.items()})
        return merged

    def system(self, overrides: Optional[Params] = None, **kw) -> CanonicalSystem:
        return self.build(self.params(overrides), **kw)

    def formula(self, lam: complex, overrides: Optional[Params] = None) -> complex:
        if self.closed_form is None:
            raise UsageError(f"example '{self.name}' has no closed-form discriminant")
        return complex(self.closed_form(complex(lam), self.params(overrides)))


def _r1(q: MatrixMeasureSpec, w: MatrixMeasureSpec, **kw) -> CanonicalSystem:
    return CanonicalSystem.from_scale(1.0, q, w, **kw)


def _sym(a: float, b: float, d: float) -> np.ndarray:
    return np.array([[a, b], [b, d]])


def _comb(matrix, density=None) -> MatrixMeasureSpec:
    return MatrixMeasureSpec.comb(1.0, matrix, 0.0, density)


def _schrodinger_free(p: Params, **kw) -> CanonicalSystem:
    return _r1(MatrixMeasureSpec.lebesgue(1.0, np.diag([0.0, -1.0])),
               MatrixMeasureSpec.lebesgue(1.0, np.diag([1.0, 0.0])), **kw)


def _constant_zero_weight(p: Params, **kw) -> CanonicalSystem:
    return _r1(MatrixMeasureSpec.lebesgue(1.0, _sym(p["a"], p["b"], p["d"])),
               MatrixMeasureSpec.zero(1.0, 2), **kw)


def _constant_rank_one(p: Params, **kw) -> CanonicalSystem:
    return _r1(MatrixMeasureSpec.lebesgue(1.0, _sym(p["a"], p["b"], 0.0)),
               MatrixMeasureSpec.lebesgue(1.0, np.diag([1.0, 0.0])), **kw)


def _comb_scalar_weight(p: Params, **kw) -> CanonicalSystem:
    return _r1(_comb(np.diag([p["a"], 0.0]), np.diag([0.0, -1.0])),
               _comb(np.diag([p["alpha"], 0.0])), **kw)


def _comb_rank_one(p: Params, **kw) -> CanonicalSystem:
    return _r1(_comb(_sym(p["a"], p["b"], 0.0)), _comb(np.diag([1.0, 0.0])), **kw)


def _comb_full(p: Params, **kw) -> CanonicalSystem:
    return _r1(_comb(_sym(p["a"], p["b"], p["d"])), _comb(np.eye(2)), **kw)


def _everywhere_singular(p: Params, **kw) -> CanonicalSystem:
    off = np.array([[0.0, 2.0], [2.0, 0.0]])
    q = MatrixMeasureSpec(2.0, 2, atoms=((0.0, off), (1.0, -off)))
    w = MatrixMeasureSpec(2.0, 2, atoms=((0.0, np.diag([2.0, 0.0])),
                                         (1.0, np.diag([2.0, 0.0]))))
    return CanonicalSystem.from_scale(1.0, q, w, **kw)


def _rays(p: Params) -> List[Tuple[float, float]]:
    s = p["a"] + p["d"]
    root = math.sqrt((p["a"] - p["d"]) ** 2 + 4.0 * p["b"] ** 2)
    return [(-math.inf, 0.5 * (s - root)), (0.5 * (s + root), math.inf)]


def _interval(p: Params) -> List[Tuple[float, float]]:
    if p["alpha"] <= 0.0:
        return []
    return [(p["a"] / p["alpha"], (4.0 + p["a"]) / p["alpha"])]


REGISTRY: Dict[str, ExampleEntry] = {
    e.name: e for e in (
        ExampleEntry("schrodinger-free", "-y'' = lam y as a canonical system",
                     _schrodinger_free, {},
                     lambda lam, p: 2.0 * cmath.cos(cmath.sqrt(lam)),
                     lambda p: [(0.0, math.inf)], (-10.0, 40.0)),
        ExampleEntry("constant-q-zero-weight", "constant q, w = 0 (non-definite, D constant)",
                     _constant_zero_weight, {"a": 0.0, "b": 1.0, "d": 0.0},
                     lambda lam, p: 2.0 * cmath.cosh(cmath.sqrt(p["b"] ** 2 - p["a"] * p["d"]))),
        ExampleEntry("constant-q-rank-one-weight", "constant q, rank-one constant w (dim L0 = 1)",
                     _constant_rank_one, {"a": 0.0, "b": 1.0},
                     lambda lam, p: 2.0 * cmath.cosh(p["b"])),
        ExampleEntry("dirac-comb-scalar-weight", "comb in q11 and w11, q22 = -1",
                     _comb_scalar_weight, {"a": 1.0, "alpha": 1.0},
                     lambda lam, p: 2.0 + p["a"] - p["alpha"] * lam, _interval),
        ExampleEntry("dirac-comb-rank-one", "symmetric comb q, rank-one comb w (b^2 != 4)",
                     _comb_rank_one, {"a": 0.0, "b": 1.0},
                     lambda lam, p: 2.0 * (4.0 + p["b"] ** 2) / (4.0 - p["b"] ** 2)),
        ExampleEntry("dirac-comb-full", "symmetric comb q, identity comb w",
                     _comb_full, {"a": 0.0, "b": 1.0, "d": 0.0},
                     lambda lam, p: 16.0 / (lam * lam - (p["a"] + p["d"]) * lam
                                           + p["a"] * p["d"] - p["b"] ** 2 + 4.0) - 2.0,
                     _rays, (-20.0, 20.0)),
        ExampleEntry("lambda-everywhere-singular", "period 2; B+ singular for every lambda",
                     _everywhere_singular, {}),
    )
}


def get_example(name: str) -> ExampleEntry:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UsageError(f"unknown example '{name}'; available: {', '.join(REGISTRY)}") from None


def clip_bands(bands: List[Tuple[float, float]],
               window: Tuple[float, float]) -> List[Tuple[float, float]]:
    lo, hi = window
    out = []
    for a, b in bands:
        a, b = max(a, lo), min(b, hi)
        if a <= b:
            out.append((a, b))
    return out


def check_example(entry: ExampleEntry, overrides: Optional[Params] = None,
                  window: Optional[Tuple[float, float]] = None, samples: int = 100,
                  options: NumericOptions = DEFAULT_OPTIONS) -> dict:
    """Largest |D_numeric - D_closed_form| over ``samples`` points of the window."""
    params = entry.params(overrides)
    window = window or entry.window
    sys = entry.build(params, options=options)
    grid = np.linspace(window[0], window[1], samples)
    errors = [abs(discriminant(sys, lam, options) - entry.formula(lam, params)) for lam in grid]
    worst = int(np.argmax(errors))
    logger.info("%s: max |D - closed form| = %.3e at lambda=%.17g",
                entry.name, errors[worst], grid[worst])
    return {"name": entry.name, "params": params, "window": list(window),
            "samples": samples, "max_error": float(errors[worst]),
            "worst_lambda": float(grid[worst])}
