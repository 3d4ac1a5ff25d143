"""
FloqSpec/spectral.py
---------------------------------------------------------------------
Spectral bands (the conditional stability set), point classification,
detection of non-definite problems (L0), Green's function and resolvent.

Band search: D is sampled on a uniform grid, sign changes of D - 2 and
D + 2 are refined by bisection, and tangential contacts |D| = 2 are caught
at grid extrema by bisecting dD/dlambda.  Bands are the pieces between
consecutive edges where |D| <= 2 at the midpoint.
"""
from __future__ import annotations

import logging
import math
import weakref
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect

from FloqSpec.errors import (
    HypothesisError,
    SingularLambdaError,
    SpectrumError,
    StructureError,
    TrivialWeightError,
    UsageError,
)
from FloqSpec.floquet_core import (
    DISTINCT,
    DOUBLE_DIAGONAL,
    DOUBLE_JORDAN,
    FloquetData,
    discriminant,
    discriminant_derivative,
    floquet_solution,
    gram_matrix,
    monodromy,
    monodromy_derivative,
    multipliers_exponents,
)
from FloqSpec.measure_model import AtomEvent, CanonicalSystem, gauss_legendre, validate_system
from FloqSpec.options import NumericOptions
from FloqSpec.propagation import (
    BalancedValue,
    atom_transfer,
    balanced_fundamental,
    fundamental_matrix,
    jump_matrices,
)

logger = logging.getLogger(__name__)

RESOLVENT = "resolvent"
BAND_INTERIOR = "band_interior"
BAND_EDGE = "band_edge"
SINGULAR_LAMBDA = "singular_lambda"

SIMPLE = "simple"
DEGENERATE = "degenerate"


# ----------------------------------------------------------------------
# Reports
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Edge:
    lam: float
    kind: str
    level: float
    identity_monodromy: bool = False

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "type": self.kind, "level": self.level,
                "identity_monodromy": self.identity_monodromy}


@dataclass(frozen=True)
class BandReport:
    window: Tuple[float, float]
    bands: Tuple[Tuple[float, float], ...] = ()
    gaps: Tuple[Tuple[float, float], ...] = ()
    edges: Tuple[Edge, ...] = ()
    constant_D: bool = False
    constant_value: Optional[complex] = None
    non_definite: bool = False
    l0_dimension: Optional[int] = None
    scalar_whole_line: bool = False
    clipped_low: bool = False
    clipped_high: bool = False
    tolerance: float = 0.0
    max_modulus_deviation: Optional[float] = None
    off_axis_deviation: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "window": list(self.window),
            "bands": [list(b) for b in self.bands],
            "gaps": [list(g) for g in self.gaps],
            "edges": [e.to_dict() for e in self.edges],
            "flags": {
                "constant_D": self.constant_D,
                "constant_value": self.constant_value,
                "non_definite": self.non_definite,
                "l0_dimension": self.l0_dimension,
                "scalar_whole_line": self.scalar_whole_line,
                "clipped_low": self.clipped_low,
                "clipped_high": self.clipped_high,
            },
            "tolerance": self.tolerance,
        }
        if self.max_modulus_deviation is not None:
            out["max_modulus_deviation"] = self.max_modulus_deviation
            out["off_axis_deviation"] = self.off_axis_deviation
        return out


@dataclass(frozen=True, eq=False)
class L0Report:
    """Solutions of J u' + q u = 0 with w u = 0, as initial vectors at x0."""

    dimension: int
    basis: Tuple[np.ndarray, ...] = ()
    evidence: Tuple[float, ...] = ()
    probe: float = 0.0
    constant_value: Optional[complex] = None

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "basis": [list(v) for v in self.basis],
            "evidence": list(self.evidence),
            "probe": self.probe,
            "constant_value": self.constant_value,
        }


@dataclass(frozen=True, eq=False)
class GreensValue:
    lam: complex
    x: float
    y: float
    G: np.ndarray
    decay: float

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "x": self.x, "y": self.y, "G": self.G,
                "decay": self.decay}


@dataclass(frozen=True, eq=False)
class ResolventSample:
    x: float
    kind: str
    value: BalancedValue
    jump_residual: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ResolventOutput:
    lam: complex
    samples: Tuple[ResolventSample, ...]
    ac_residuals: Tuple[Tuple[float, float, float], ...] = ()

    @property
    def max_jump_residual(self) -> float:
        vals = [s.jump_residual for s in self.samples if s.jump_residual is not None]
        return max(vals, default=0.0)

    @property
    def max_ac_residual(self) -> float:
        return max((r for _, _, r in self.ac_residuals), default=0.0)

    def at(self, x: float) -> ResolventSample:
        for s in self.samples:
            if s.x == x:
                return s
        raise KeyError(x)


# ----------------------------------------------------------------------
# Point classification
# ----------------------------------------------------------------------

def _in_singular_set(sys: CanonicalSystem, lam: complex, options: NumericOptions) -> Optional[float]:
    n = sys.n
    for p, (dq, dw) in zip(sys.layout.atom_positions, sys.layout.atom_jumps):
        for b in jump_matrices(sys.J, dq, dw, lam):
            scale = max(1.0, float(np.linalg.norm(b))) ** n
            if abs(np.linalg.det(b)) <= options.singular_rtol * scale:
                return p
    return None


def classify_lambda(sys: CanonicalSystem, lam: complex,
                    options: Optional[NumericOptions] = None) -> str:
    """One of resolvent, band_interior, band_edge, singular_lambda."""
    options = options or sys.options
    lam = complex(lam)
    if _in_singular_set(sys, lam, options) is not None:
        return SINGULAR_LAMBDA
    try:
        data = multipliers_exponents(sys, lam, options)
    except SingularLambdaError:
        return SINGULAR_LAMBDA
    if sys.n == 1:
        rho = abs(data.multipliers[0])
        return BAND_INTERIOR if abs(rho - 1.0) <= options.edge_tol else RESOLVENT
    if abs(lam.imag) > options.real_root_tol * (1.0 + abs(lam)):
        rho = abs(data.multipliers[0])
        if rho - 1.0 > options.edge_tol:
            return RESOLVENT
        return BAND_EDGE if data.structure != DISTINCT else BAND_INTERIOR
    d = abs(data.D.real)
    if abs(d - 2.0) <= options.edge_tol * (1.0 + d):
        return BAND_EDGE
    return BAND_INTERIOR if d < 2.0 else RESOLVENT


# ----------------------------------------------------------------------
# Non-definiteness
# ----------------------------------------------------------------------

def _sample_states(sys: CanonicalSystem, lam: float, options: NumericOptions):
    """(x, Wd or Delta_w, U at x, is_atom) over one period, at atoms and Gauss nodes."""
    nodes, _ = gauss_legendre(options.quad_order)
    x0 = sys.x0
    out = []
    for ev in sys.layout.events(x0, x0 + sys.period):
        if isinstance(ev, AtomEvent):
            U = balanced_fundamental(sys, lam, ev.position, options=options).u_balanced
            out.append((ev.position, ev.jumps[1], U, True))
            continue
        half, mid = 0.5 * (ev.stop - ev.start), 0.5 * (ev.stop + ev.start)
        for t in (-1.0, *nodes):
            x = mid + half * t
            U = fundamental_matrix(sys, lam, x0, x, options).value
            out.append((x, ev.densities[1], U, False))
    return out


def detect_l0(sys: CanonicalSystem,
              options: Optional[NumericOptions] = None) -> L0Report:
    """Dimension and basis of L0 from the Floquet solutions at a real probe.

    A probe with a Jordan monodromy (or on a singular point) is shifted by +1.
    With distinct multipliers the candidates are the two eigenvectors of M.
    For M = +-I, or a Jordan block at every probe (M does not depend on
    lambda when w vanishes), they are the eigenvectors of the Gram matrix,
    whose kernel holds every initial value of an L0 solution.
    """
    options = options or sys.options
    probe = options.l0_probe
    data: Optional[FloquetData] = None
    jordan: Optional[Tuple[float, FloquetData]] = None
    failure: Optional[SingularLambdaError] = None
    for attempt in range(options.l0_retries + 1):
        try:
            data = multipliers_exponents(sys, probe, options)
        except SingularLambdaError as exc:
            data, failure = None, exc
        if data is not None and data.structure != DOUBLE_JORDAN:
            break
        if data is not None:
            jordan = (probe, data)
        data = None
        if attempt < options.l0_retries:
            logger.warning("L0 probe lambda=%g unusable; shifting to %g", probe, probe + 1.0)
            probe += 1.0
    if data is None:
        if jordan is None:
            raise failure
        probe, data = jordan
        logger.info("Jordan monodromy at every L0 probe; using the Gram kernel at lambda=%g", probe)

    gram = gram_matrix(sys, probe, options)
    if data.structure in (DOUBLE_DIAGONAL, DOUBLE_JORDAN):
        _, vecs = np.linalg.eigh(0.5 * (gram + gram.conj().T))
        candidates = [vecs[:, i] for i in range(vecs.shape[1])]
        multipliers = [data.multipliers[0]] * len(candidates)
    else:
        candidates = list(data.vectors)
        multipliers = list(data.multipliers)

    states = _sample_states(sys, probe, options)
    conf_tol = math.sqrt(options.l0_tol)
    basis: List[np.ndarray] = []
    evidence: List[float] = []
    rhos: List[complex] = []
    for c, rho in zip(candidates, multipliers):
        c = np.asarray(c, dtype=complex)
        c = c / np.linalg.norm(c)
        I0 = float(np.real(c.conj() @ gram @ c))
        evidence.append(I0)
        values = [(W, U @ c) for _, W, U, _ in states]
        sup = max((float(np.linalg.norm(u)) ** 2 for _, u in values), default=1.0)
        if I0 > options.l0_tol * (1.0 + sup):
            continue
        confirmed = all(
            np.linalg.norm(W @ u) <= conf_tol * (1.0 + np.linalg.norm(W)) * (1.0 + np.linalg.norm(u))
            for W, u in values)
        if confirmed:
            basis.append(c)
            rhos.append(rho)
    constant = None
    if basis:
        rho = rhos[0]
        constant = complex(rho + 1.0 / rho) if sys.n == 2 else complex(rho)
    logger.info("L0 dimension %d (probe lambda=%g)", len(basis), probe)
    return L0Report(len(basis), tuple(basis), tuple(evidence), probe, constant)


_L0_CACHE: "weakref.WeakKeyDictionary[CanonicalSystem, Dict[NumericOptions, L0Report]]" = \
    weakref.WeakKeyDictionary()


def cached_l0(sys: CanonicalSystem, options: Optional[NumericOptions] = None) -> L0Report:
    """detect_l0, computed once per system and options."""
    options = options or sys.options
    per_system = _L0_CACHE.setdefault(sys, {})
    if options not in per_system:
        per_system[options] = detect_l0(sys, options)
    return per_system[options]


# ----------------------------------------------------------------------
# Bands
# ----------------------------------------------------------------------

def _check_window(lam_min: float, lam_max: float) -> None:
    if not (math.isfinite(lam_min) and math.isfinite(lam_max)) or lam_min >= lam_max:
        raise UsageError(f"empty window [{lam_min}, {lam_max}]")


def _require_valid(sys: CanonicalSystem, options: NumericOptions) -> None:
    report = validate_system(sys, options)
    if not report.ok:
        raise HypothesisError(
            "system violates the standing hypotheses: "
            + "; ".join(v.message for v in report.violations), report)


def _real_D(sys: CanonicalSystem, options: NumericOptions):
    return lambda lam: discriminant(sys, lam, options).real


def _merge_candidates(cands: List[Tuple[float, float, bool]], Dfun,
                      options: NumericOptions) -> List[Tuple[float, float, bool]]:
    """Collapse same-level candidates that are one tangential contact."""
    cands = sorted(cands)
    out: List[Tuple[float, float, bool]] = []
    for lam, level, tangent in cands:
        if out:
            plam, plevel, ptangent = out[-1]
            close = abs(lam - plam) <= 1e-6 * (1.0 + abs(lam))
            if close and plevel == level and (
                    abs(lam - plam) <= 10.0 * options.band_tol * (1.0 + abs(lam))
                    or abs(Dfun(0.5 * (lam + plam)) - level) <= options.edge_tol):
                if tangent and not ptangent:
                    out[-1] = (lam, level, True)
                elif tangent == ptangent:
                    out[-1] = (0.5 * (lam + plam), level, tangent)
                continue
        out.append((lam, level, tangent))
    return out


def stability_bands(sys: CanonicalSystem, lam_min: float, lam_max: float,
                    options: Optional[NumericOptions] = None) -> BandReport:
    """Bands {|D| <= 2} of a validated n=2 system inside [lam_min, lam_max]."""
    options = options or sys.options
    _check_window(lam_min, lam_max)
    if sys.n == 1:
        raise StructureError("n=1 systems have no band structure; use scalar_spectrum")
    _require_valid(sys, options)

    Dfun = _real_D(sys, options)
    grid = np.linspace(lam_min, lam_max, options.grid_n)
    D = np.array([Dfun(lam) for lam in grid])
    l0 = cached_l0(sys, options)
    window = (float(lam_min), float(lam_max))

    if D.max() - D.min() <= options.constant_rtol * (1.0 + np.abs(D).max()):
        logger.info("D is constant (%.17g) on the window", D[0])
        return BandReport(window, (), (window,), (), True, complex(D[0]), l0.dimension > 0,
                          l0.dimension, tolerance=options.band_tol)

    rtol = max(options.band_tol, 4.0 * np.finfo(float).eps)
    cands: List[Tuple[float, float, bool]] = []
    for level in (2.0, -2.0):
        g = D - level
        f = lambda lam, level=level: Dfun(lam) - level
        for i in range(len(grid)):
            if g[i] == 0.0:
                cands.append((float(grid[i]), level, False))
            elif i + 1 < len(grid) and g[i] * g[i + 1] < 0.0:
                root = bisect(f, grid[i], grid[i + 1], xtol=options.band_tol, rtol=rtol)
                cands.append((float(root), level, False))
    logger.info("%d sign changes of D -+ 2 bracketed", len(cands))

    Ddot = lambda lam: discriminant_derivative(sys, lam, options).real
    for i in range(1, len(grid) - 1):
        left, right = D[i] - D[i - 1], D[i + 1] - D[i]
        if left * right > 0.0 or (left == 0.0 and right == 0.0):
            continue
        level = 2.0 if D[i] > 0 else -2.0
        if abs(abs(D[i]) - 2.0) > 4.0 * max(abs(left), abs(right)):
            continue
        a, b = grid[i - 1], grid[i + 1]
        da, db = Ddot(a), Ddot(b)
        star = float(grid[i]) if da * db > 0.0 else float(
            bisect(Ddot, a, b, xtol=options.band_tol, rtol=rtol))
        value = Dfun(star)
        if abs(value * value - 4.0) <= options.edge_tol:
            cands.append((star, level, True))
            continue
        gs = value - level
        f = lambda lam, level=level: Dfun(lam) - level
        for lo, hi, g_out in ((a, star, D[i - 1] - level), (star, b, D[i + 1] - level)):
            if gs * g_out < 0.0:
                cands.append((float(bisect(f, lo, hi, xtol=options.band_tol, rtol=rtol)), level, False))

    edges: List[Edge] = []
    for lam, level, tangent in _merge_candidates(cands, Dfun, options):
        M = monodromy(sys, lam, options).M
        Mdot = monodromy_derivative(sys, lam, options)
        ident = np.linalg.norm(M - 0.5 * level * np.eye(2)) <= options.edge_tol * (
            1.0 + np.linalg.norm(M) + np.linalg.norm(Mdot))
        kind = DEGENERATE if (tangent or ident) else SIMPLE
        edges.append(Edge(lam, kind, level, bool(ident)))

    points = [window[0]] + [e.lam for e in edges if window[0] < e.lam < window[1]] + [window[1]]
    bands: List[List[float]] = []
    for lo, hi in zip(points[:-1], points[1:]):
        if hi <= lo or abs(Dfun(0.5 * (lo + hi))) > 2.0:
            continue
        if bands and bands[-1][1] == lo:
            bands[-1][1] = hi
        else:
            bands.append([lo, hi])
    for e in edges:
        if e.kind == DEGENERATE and not any(lo <= e.lam <= hi for lo, hi in bands):
            bands.append([e.lam, e.lam])
    bands.sort()

    gaps: List[Tuple[float, float]] = []
    cursor = window[0]
    for lo, hi in bands:
        if lo > cursor:
            gaps.append((cursor, lo))
        cursor = max(cursor, hi)
    if cursor < window[1]:
        gaps.append((cursor, window[1]))

    clipped_low = bool(bands) and bands[0][0] == window[0] and abs(D[0]) < 2.0
    clipped_high = bool(bands) and bands[-1][1] == window[1] and abs(D[-1]) < 2.0
    if clipped_low or clipped_high:
        logger.warning("band(s) extend beyond the window [%g, %g]", *window)
    return BandReport(window, tuple(tuple(b) for b in bands), tuple(gaps), tuple(edges),
                      False, None, l0.dimension > 0, l0.dimension,
                      clipped_low=clipped_low, clipped_high=clipped_high,
                      tolerance=options.band_tol)


def scalar_spectrum(sys: CanonicalSystem, lam_min: float, lam_max: float,
                    options: Optional[NumericOptions] = None) -> BandReport:
    """n=1: the spectrum is the whole real line; |rho| = 1 is checked on a grid."""
    options = options or sys.options
    _check_window(lam_min, lam_max)
    if sys.n != 1:
        raise StructureError("scalar_spectrum needs an n=1 system")
    if sys.w.is_zero():
        raise TrivialWeightError("trivial weight: w vanishes identically")
    grid = np.linspace(lam_min, lam_max, options.grid_n)
    dev = max(abs(abs(monodromy(sys, lam, options).D) - 1.0) for lam in grid)
    probes = grid[:: max(1, len(grid) // 20)]
    off = min(abs(abs(monodromy(sys, lam + s * 1j, options).D) - 1.0)
              for lam in probes for s in (1.0, -1.0))
    window = (float(lam_min), float(lam_max))
    return BandReport(window, (window,), (), (), scalar_whole_line=True,
                      clipped_low=True, clipped_high=True, tolerance=options.band_tol,
                      max_modulus_deviation=float(dev), off_axis_deviation=float(off))


# ----------------------------------------------------------------------
# Green's function and resolvent
# ----------------------------------------------------------------------

class GreensKernel:
    """Normalised Floquet pair for a point of the resolvent set.

    psi1 grows at +infinity (|rho1| > 1), psi2 decays there, and
    ``c1^T J c2 = 1``.
    """

    def __init__(self, sys: CanonicalSystem, lam: complex,
                 options: Optional[NumericOptions] = None,
                 l0: Optional[L0Report] = None):
        options = options or sys.options
        if sys.n != 2:
            raise StructureError("the Green's function is implemented for n=2 systems")
        lam = complex(lam)
        label = classify_lambda(sys, lam, options)
        if label != RESOLVENT:
            raise SpectrumError(
                f"no Green's function on the spectrum: lambda={lam} is {label}", label)
        if (l0 or cached_l0(sys, options)).dimension:
            raise HypothesisError("the problem is non-definite (L0 is non-trivial)")
        data = multipliers_exponents(sys, lam, options)
        c1, c2 = data.vectors
        norm = complex(c1 @ sys.J @ c2)
        self.sys = sys
        self.lam = lam
        self.options = options
        self.data = replace(data, vectors=(c1, c2 / norm))
        self.decay = float(data.exponents[0].real)

    def psi(self, which: int, x: float) -> BalancedValue:
        return floquet_solution(self.sys, self.lam, which, x, self.data, self.options)

    def value(self, x: float, y: float) -> GreensValue:
        if y < x:
            G = np.outer(self.psi(2, x).u_balanced, self.psi(1, y).u_balanced)
        elif x < y:
            G = np.outer(self.psi(1, x).u_balanced, self.psi(2, y).u_balanced)
        else:
            p1, p2 = self.psi(1, x).u_balanced, self.psi(2, x).u_balanced
            G = 0.5 * (np.outer(p2, p1) + np.outer(p1, p2))
        return GreensValue(self.lam, x, y, G, self.decay)

    def normalisation_residual(self, x: float) -> float:
        p1, p2 = self.psi(1, x), self.psi(2, x)
        return float(abs(p1.u_minus @ self.sys.J @ p2.u_minus - 1.0))


def greens_function(sys: CanonicalSystem, lam: complex, x: float, y: float,
                    options: Optional[NumericOptions] = None,
                    l0: Optional[L0Report] = None) -> GreensValue:
    return GreensKernel(sys, lam, options, l0).value(x, y)


def resolvent_apply(sys: CanonicalSystem, lam: complex,
                    sources: Sequence[Tuple[float, Sequence[complex]]],
                    sample_points: Sequence[float] = (),
                    extent: Optional[Tuple[float, float]] = None,
                    kernel: Optional[GreensKernel] = None,
                    options: Optional[NumericOptions] = None) -> ResolventOutput:
    """Solve J u' + (q - lambda w) u = w f for f carried by atoms of w.

    Returns u-, u+ and u# at every atom between the outermost sources (widened
    to ``extent`` when given) and at ``sample_points``, with the jump residual
    B+ u+ - B- u- - Delta_w f at atoms and the homogeneous-propagation
    residual between consecutive atoms.
    """
    options = options or sys.options
    kernel = kernel or GreensKernel(sys, lam, options)
    lam = kernel.lam

    forcing: Dict[float, np.ndarray] = {}
    for p, f in sources:
        p = float(p)
        dw = sys.jumps(p)[1]
        if not np.any(dw):
            raise UsageError(f"source at x={p} is not an atom of w; w f would vanish there")
        forcing[p] = forcing.get(p, 0.0) + dw @ np.asarray(f, dtype=complex)

    coeffs = []
    for p, wf in sorted(forcing.items()):
        coeffs.append((p, kernel.psi(1, p).u_balanced @ wf, kernel.psi(2, p).u_balanced @ wf))

    def solve_at(x: float) -> BalancedValue:
        a_lt = sum((a for p, a, _ in coeffs if p < x), 0.0)
        a_le = sum((a for p, a, _ in coeffs if p <= x), 0.0)
        b_ge = sum((b for p, _, b in coeffs if p >= x), 0.0)
        b_gt = sum((b for p, _, b in coeffs if p > x), 0.0)
        p1, p2 = kernel.psi(1, x), kernel.psi(2, x)
        return BalancedValue(x, p2.u_minus * a_lt + p1.u_minus * b_ge,
                             p2.u_plus * a_le + p1.u_plus * b_gt)

    atoms: List[float] = []
    if forcing or extent is not None:
        ends = list(forcing) + (list(extent) if extent is not None else [])
        lo, hi = min(ends), max(ends)
        omega = sys.period
        tol = options.position_tol * max(omega, abs(lo), abs(hi))
        for k in range(math.floor(lo / omega) - 1, math.floor(hi / omega) + 2):
            for r in sys.layout.atom_positions:
                x = k * omega + r
                near = [p for p in forcing if abs(p - x) <= tol]
                x = near[0] if near else x
                if lo - tol <= x <= hi + tol:
                    atoms.append(x)
    atoms = sorted(set(atoms))

    samples: List[ResolventSample] = []
    for x in atoms:
        u = solve_at(x)
        dq, dw = sys.jumps(x)
        b_plus, b_minus = jump_matrices(sys.J, dq, dw, lam)
        res = b_plus @ u.u_plus - b_minus @ u.u_minus - forcing.get(x, 0.0)
        samples.append(ResolventSample(x, "atom", u, float(np.linalg.norm(res))))
    for x in sample_points:
        samples.append(ResolventSample(float(x), "sample", solve_at(float(x))))

    ac: List[Tuple[float, float, float]] = []
    for s, t in zip(samples[: len(atoms)][:-1], samples[1: len(atoms)]):
        dq, dw = sys.jumps(s.x)
        A = atom_transfer(sys.J, dq, dw, lam, s.x, options)
        U = fundamental_matrix(sys, lam, s.x, t.x, options).value
        pred = U @ np.linalg.solve(A, s.value.u_plus)
        ac.append((s.x, t.x, float(np.linalg.norm(t.value.u_minus - pred))))
    return ResolventOutput(lam, tuple(samples), tuple(ac))
