"""
FloqSpec/measure_model.py
---------------------------------------------------------------------
Periodic matrix-valued measures (Dirac atoms plus piecewise-constant
densities), the canonical system ``J u' + q u = lambda w u`` built from two of
them, hypothesis validation, the singular set Lambda and period integrals.

One period is always represented on ``[0, period)``.  Positions elsewhere on
the real line are reduced modulo the period.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss

from FloqSpec.errors import AnchorError, IdenticallySingularError
from FloqSpec.options import DEFAULT_OPTIONS, NumericOptions

logger = logging.getLogger(__name__)

STANDARD_J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _frozen(value, dtype=float) -> np.ndarray:
    arr = np.array(value, dtype=dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    nodes, weights = leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


# ----------------------------------------------------------------------
# Measures
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Atom:
    position: float
    weight: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", float(self.position))
        object.__setattr__(self, "weight", _frozen(self.weight))


@dataclass(frozen=True, eq=False)
class DensitySegment:
    start: float
    stop: float
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "stop", float(self.stop))
        object.__setattr__(self, "matrix", _frozen(self.matrix))


@dataclass(frozen=True, eq=False)
class MatrixMeasureSpec:
    """One period of an omega-periodic n x n measure.

    ``atoms`` are ``Atom`` objects (or ``(position, weight)`` pairs) with
    positions in ``[0, period)``; ``segments`` are ``DensitySegment`` objects
    (or ``(start, stop, matrix)`` triples) partitioning ``[0, period)``.  An
    empty segment list means the density vanishes.  Nothing is checked here:
    ``validate_system`` reports every defect.
    """

    period: float
    dim: int
    atoms: Tuple[Atom, ...] = ()
    segments: Tuple[DensitySegment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "dim", int(self.dim))
        atoms = tuple(a if isinstance(a, Atom) else Atom(*a) for a in self.atoms)
        segs = tuple(s if isinstance(s, DensitySegment) else DensitySegment(*s)
                     for s in self.segments)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "segments", segs)

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, period: float, dim: int) -> "MatrixMeasureSpec":
        return cls(period, dim)

    @classmethod
    def lebesgue(cls, period: float, matrix) -> "MatrixMeasureSpec":
        """Constant density ``matrix`` times Lebesgue measure."""
        matrix = _frozen(matrix)
        return cls(period, matrix.shape[0], segments=((0.0, period, matrix),))

    @classmethod
    def comb(cls, period: float, weight, position: float = 0.0,
             density=None) -> "MatrixMeasureSpec":
        """``weight`` times the Dirac comb at ``position + k*period``."""
        weight = _frozen(weight)
        segs = () if density is None else ((0.0, period, density),)
        return cls(period, weight.shape[0], atoms=((position, weight),), segments=segs)

    # -- queries --------------------------------------------------------
    def tolerance(self, options: NumericOptions = DEFAULT_OPTIONS) -> float:
        return options.position_tol * max(1.0, self.period)

    def reduce(self, x: float, options: NumericOptions = DEFAULT_OPTIONS) -> float:
        """Representative of ``x`` in ``[0, period)``."""
        r = math.fmod(float(x), self.period)
        if r < 0.0:
            r += self.period
        if self.period - r <= self.tolerance(options) * max(1.0, abs(x) / self.period):
            r = 0.0
        return r

    def atom_index(self, x: float, options: NumericOptions = DEFAULT_OPTIONS) -> Optional[int]:
        """Index of the atom sitting at ``x`` (mod period), else ``None``."""
        r = self.reduce(x, options)
        tol = self.tolerance(options) * max(1.0, abs(x) / self.period)
        for i, atom in enumerate(self.atoms):
            d = abs(atom.position - r)
            if min(d, self.period - d) <= tol:
                return i
        return None

    def density_at(self, x: float, options: NumericOptions = DEFAULT_OPTIONS) -> np.ndarray:
        if not self.segments:
            return np.zeros((self.dim, self.dim))
        r = self.reduce(x, options)
        starts = [s.start for s in self.segments]
        idx = int(np.searchsorted(starts, r, side="right")) - 1
        idx = min(max(idx, 0), len(self.segments) - 1)
        return self.segments[idx].matrix

    def is_zero(self) -> bool:
        return (all(not np.any(a.weight) for a in self.atoms)
                and all(not np.any(s.matrix) for s in self.segments))

    def total(self) -> np.ndarray:
        """Mass of one period (the drift of the antiderivative times omega)."""
        out = np.zeros((self.dim, self.dim))
        for a in self.atoms:
            out = out + a.weight
        for s in self.segments:
            out = out + (s.stop - s.start) * s.matrix
        return out


def jump_at(m: MatrixMeasureSpec, x: float,
            options: NumericOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Atom weight R+(x) - R-(x) of the periodic extension of ``m``."""
    idx = m.atom_index(x, options)
    if idx is None:
        return np.zeros((m.dim, m.dim))
    return m.atoms[idx].weight


# ----------------------------------------------------------------------
# Merged period layout
# ----------------------------------------------------------------------

class AtomEvent(NamedTuple):
    position: float
    jumps: Tuple[np.ndarray, ...]


class SegmentEvent(NamedTuple):
    start: float
    stop: float
    densities: Tuple[np.ndarray, ...]


class PeriodLayout:
    """Atoms and density breakpoints of several measures on one period.

    ``events(a, b)`` decomposes ``[a, b)`` into atoms (at the position, the
    atom at ``a`` included, the one at ``b`` excluded) and atom-free segments
    on which every density is constant.
    """

    def __init__(self, measures: Sequence[MatrixMeasureSpec],
                 options: NumericOptions = DEFAULT_OPTIONS):
        self.measures = tuple(measures)
        self.options = options
        self.period = self.measures[0].period
        self.dim = self.measures[0].dim
        self._tol = options.position_tol * max(1.0, self.period)

        positions: List[float] = []
        for m in self.measures:
            positions.extend(m.reduce(a.position, options) for a in m.atoms)
        self.atom_positions = self._merge(positions)
        self.atom_jumps = [
            tuple(jump_at(m, p, options) for m in self.measures)
            for p in self.atom_positions
        ]

        breaks = [0.0] + list(self.atom_positions)
        for m in self.measures:
            for s in m.segments:
                for b in (s.start, s.stop):
                    if self._tol < b < self.period - self._tol:
                        breaks.append(b)
        self.breaks = self._merge(breaks)

    def _merge(self, values: Sequence[float]) -> List[float]:
        out: List[float] = []
        for v in sorted(values):
            if not out or v - out[-1] > self._tol:
                out.append(v)
        return out

    def atom_at(self, r: float) -> Optional[int]:
        for i, p in enumerate(self.atom_positions):
            d = abs(p - r)
            if min(d, self.period - d) <= self._tol:
                return i
        return None

    def events(self, a: float, b: float) -> List[Tuple]:
        """Ordered ``AtomEvent`` / ``SegmentEvent`` list covering ``[a, b)``."""
        if b <= a:
            return []
        omega = self.period
        tol = self._tol * max(1.0, abs(a) / omega, abs(b) / omega)
        points = {a: None, b: None}
        for k in range(math.floor(a / omega) - 1, math.floor(b / omega) + 2):
            for br in self.breaks:
                x = k * omega + br
                if x < a - tol or x > b + tol:
                    continue
                if abs(x - a) <= tol:
                    x = a
                elif abs(x - b) <= tol:
                    x = b
                idx = self.atom_at(br)
                if idx is not None or x not in points:
                    points[x] = idx if idx is not None else points.get(x)
        ordered = sorted(points.items())
        out: List[Tuple] = []
        for (x, idx), (nxt, _) in zip(ordered[:-1], ordered[1:]):
            if idx is not None:
                out.append(AtomEvent(x, self.atom_jumps[idx]))
            if nxt > x:
                mid = 0.5 * (x + nxt)
                dens = tuple(m.density_at(mid, self.options) for m in self.measures)
                out.append(SegmentEvent(x, nxt, dens))
        return out


# ----------------------------------------------------------------------
# Canonical system
# ----------------------------------------------------------------------

def default_base_point(q: MatrixMeasureSpec, w: MatrixMeasureSpec,
                       options: NumericOptions = DEFAULT_OPTIONS) -> float:
    """Midpoint of the largest atom-free gap of q and w (cyclically)."""
    layout = PeriodLayout((q, w), options)
    pos = layout.atom_positions
    if not pos:
        return 0.0
    best, start = -1.0, 0.0
    for i, p in enumerate(pos):
        nxt = pos[i + 1] if i + 1 < len(pos) else pos[0] + layout.period
        if nxt - p > best + layout._tol:
            best, start = nxt - p, p
    return q.reduce(start + 0.5 * best, options)


@dataclass(frozen=True, eq=False)
class CanonicalSystem:
    """``J u' + q u = lambda w u`` with omega-periodic measure coefficients.

    ``J`` is stored as an n x n array (1 x 1 and purely imaginary for n=1).
    ``base_point`` is the continuity point x0 where ``U(x0) = I``; when it is
    omitted the midpoint of the largest atom-free gap is used.
    """

    J: np.ndarray
    q: MatrixMeasureSpec
    w: MatrixMeasureSpec
    base_point: Optional[float] = None
    options: NumericOptions = field(default=DEFAULT_OPTIONS, repr=False)

    def __post_init__(self):
        J = np.asarray(self.J)
        dtype = complex if np.iscomplexobj(J) else float
        object.__setattr__(self, "J", _frozen(J, dtype))
        if self.base_point is not None:
            object.__setattr__(self, "base_point", float(self.base_point))

    @classmethod
    def from_scale(cls, r: float, q: MatrixMeasureSpec, w: MatrixMeasureSpec,
                   base_point: Optional[float] = None, **kw) -> "CanonicalSystem":
        """n=2 system with ``J = r [[0, -1], [1, 0]]``."""
        return cls(float(r) * STANDARD_J, q, w, base_point, **kw)

    @classmethod
    def scalar(cls, s: float, q: MatrixMeasureSpec, w: MatrixMeasureSpec,
               base_point: Optional[float] = None, **kw) -> "CanonicalSystem":
        """n=1 system with ``J = i s``."""
        return cls(np.array([[1j * float(s)]]), q, w, base_point, **kw)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @property
    def period(self) -> float:
        return self.q.period

    @property
    def base_point_defaulted(self) -> bool:
        return self.base_point is None

    @cached_property
    def x0(self) -> float:
        if self.base_point is not None:
            return self.base_point
        x0 = default_base_point(self.q, self.w, self.options)
        logger.debug("base point defaulted to %.17g", x0)
        return x0

    @cached_property
    def layout(self) -> PeriodLayout:
        return PeriodLayout((self.q, self.w), self.options)

    @property
    def scale(self) -> float:
        """J = scale * [[0, -1], [1, 0]] for n=2, J = i*scale for n=1."""
        if self.n == 1:
            return float(self.J[0, 0].imag)
        return float(np.real(self.J[1, 0]))

    def with_base_point(self, x0: Optional[float]) -> "CanonicalSystem":
        return replace(self, base_point=x0)

    def jumps(self, x: float) -> Tuple[np.ndarray, np.ndarray]:
        """(Delta_q(x), Delta_w(x))."""
        return jump_at(self.q, x, self.options), jump_at(self.w, x, self.options)

    def is_atom(self, x: float) -> bool:
        return self.layout.atom_at(self.q.reduce(x, self.options)) is not None


# ----------------------------------------------------------------------
# Validation and the singular set
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    position: Optional[float] = None

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "position": self.position}


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()
    singular_set: Tuple[complex, ...] = ()
    identically_singular: bool = False
    singular_positions: Tuple[float, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [v.to_dict() for v in self.violations],
            "singular_set": [[z.real, z.imag] for z in self.singular_set],
            "identically_singular": self.identically_singular,
            "singular_positions": list(self.singular_positions),
        }


def det_polynomial(J: np.ndarray, dq: np.ndarray, dw: np.ndarray,
                   sign: int = +1) -> np.ndarray:
    """Ascending coefficients of lambda -> det(J + sign/2 (dq - lambda dw))."""
    a = np.asarray(J, dtype=complex) + sign * 0.5 * np.asarray(dq)
    b = -sign * 0.5 * np.asarray(dw, dtype=complex)
    if a.shape == (1, 1):
        return np.array([a[0, 0], b[0, 0]])
    c0 = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    c1 = a[0, 0] * b[1, 1] + b[0, 0] * a[1, 1] - a[0, 1] * b[1, 0] - b[0, 1] * a[1, 0]
    c2 = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
    return np.array([c0, c1, c2])


def _roots(coeffs: np.ndarray, scale: float) -> Optional[np.ndarray]:
    """Roots of the polynomial, or ``None`` when it vanishes identically."""
    coeffs = np.array(coeffs, dtype=complex)
    small = np.abs(coeffs) <= 1e-14 * scale
    coeffs[small] = 0.0
    if not np.any(coeffs):
        return None
    while coeffs[-1] == 0.0:
        coeffs = coeffs[:-1]
    if len(coeffs) == 1:
        return np.array([], dtype=complex)
    return Polynomial(coeffs).roots().astype(complex)


def _atom_roots(J, dq, dw) -> Optional[List[complex]]:
    scale = (np.linalg.norm(J) + np.linalg.norm(dq) + np.linalg.norm(dw)) ** J.shape[0]
    out: List[complex] = []
    for sign in (+1, -1):
        r = _roots(det_polynomial(J, dq, dw, sign), max(scale, 1.0))
        if r is None:
            return None
        out.extend(complex(z) for z in r)
    return out


def _dedupe(values: Sequence[complex], tol: float) -> List[complex]:
    out: List[complex] = []
    for z in sorted(values, key=lambda c: (c.real, c.imag)):
        if not any(abs(z - y) <= tol * (1.0 + abs(z)) for y in out):
            out.append(z)
    return out


def _is_real(z: complex, options: NumericOptions) -> bool:
    return abs(z.imag) <= options.real_root_tol * (1.0 + abs(z))


def singular_set(sys: CanonicalSystem,
                 options: Optional[NumericOptions] = None) -> List[complex]:
    """Lambda: roots of det B+-(p, .) over the atoms of one period."""
    options = options or sys.options
    found: List[complex] = []
    for p, (dq, dw) in zip(sys.layout.atom_positions, sys.layout.atom_jumps):
        roots = _atom_roots(sys.J, dq, dw)
        if roots is None:
            raise IdenticallySingularError(p)
        found.extend(roots)
    found = _dedupe(found, options.real_root_tol)
    closed = list(found)
    for z in found:
        if not any(abs(z.conjugate() - y) <= options.real_root_tol * (1.0 + abs(z))
                   for y in closed):
            closed.append(z.conjugate())
    return sorted(closed, key=lambda c: (c.real, c.imag))


def _check_measure(name: str, m: MatrixMeasureSpec, n: int,
                   options: NumericOptions) -> List[Violation]:
    out: List[Violation] = []
    if m.dim != n:
        out.append(Violation("dimension", f"{name} has dimension {m.dim}, expected {n}"))
    if not (m.period > 0.0 and math.isfinite(m.period)):
        out.append(Violation("period", f"{name}.period must be positive, got {m.period}"))
        return out
    tol = m.tolerance(options)
    prev = None
    for atom in m.atoms:
        if atom.weight.shape != (n, n) or not np.all(np.isfinite(atom.weight)):
            out.append(Violation("weight_shape",
                                 f"{name} atom weight at {atom.position} is not a finite {n}x{n} matrix",
                                 atom.position))
        if not (0.0 <= atom.position < m.period):
            out.append(Violation("atom_range",
                                 f"{name} atom at {atom.position} outside [0, {m.period})",
                                 atom.position))
        if prev is not None and atom.position <= prev + tol:
            code = "atom_duplicate" if abs(atom.position - prev) <= tol else "atom_order"
            out.append(Violation(code,
                                 f"{name} atom positions must be strictly increasing ({prev} then {atom.position})",
                                 atom.position))
        prev = atom.position
    if m.segments:
        if abs(m.segments[0].start) > tol:
            out.append(Violation("segment_cover", f"{name} density must start at 0"))
        if abs(m.segments[-1].stop - m.period) > tol:
            out.append(Violation("segment_cover", f"{name} density must end at the period {m.period}"))
        for s, t in zip(m.segments[:-1], m.segments[1:]):
            if abs(s.stop - t.start) > tol:
                out.append(Violation("segment_cover",
                                     f"{name} density segments [{s.start},{s.stop}) and [{t.start},{t.stop}) do not abut"))
        for s in m.segments:
            if not s.stop > s.start:
                out.append(Violation("segment_order",
                                     f"{name} density segment [{s.start},{s.stop}) is empty or reversed", s.start))
            if s.matrix.shape != (n, n) or not np.all(np.isfinite(s.matrix)):
                out.append(Violation("weight_shape",
                                     f"{name} density on [{s.start},{s.stop}) is not a finite {n}x{n} matrix", s.start))
    return out


def _matrices(m: MatrixMeasureSpec):
    for a in m.atoms:
        yield a.position, a.weight
    for s in m.segments:
        yield s.start, s.matrix


def validate_system(sys: CanonicalSystem,
                    options: Optional[NumericOptions] = None) -> ValidationReport:
    """Check the standing hypotheses; never raises for a violated one."""
    options = options or sys.options
    v: List[Violation] = []
    J = sys.J
    if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] not in (1, 2):
        v.append(Violation("dimension", f"J must be 1x1 or 2x2, got shape {J.shape}"))
        return ValidationReport(tuple(v))
    n = J.shape[0]
    v.extend(_check_measure("q", sys.q, n, options))
    v.extend(_check_measure("w", sys.w, n, options))
    if sys.q.period != sys.w.period:
        v.append(Violation("period_mismatch",
                           f"q and w periods differ ({sys.q.period} vs {sys.w.period})"))
    if v:
        return ValidationReport(tuple(v))

    if n == 2:
        if np.any(np.abs(np.imag(J)) > 0) or np.linalg.norm(J + J.T) > 1e-14 * np.linalg.norm(J) \
                or abs(np.linalg.det(np.real(J))) == 0.0:
            v.append(Violation("J", "J must be real, skew-symmetric and invertible"))
    else:
        j = complex(J[0, 0])
        if j.real != 0.0 or j == 0:
            v.append(Violation("J", "J must be a non-zero purely imaginary number"))

    for pos, mat in _matrices(sys.q):
        if np.linalg.norm(mat - mat.T) > 1e-12 * max(1.0, np.linalg.norm(mat)):
            v.append(Violation("q_not_symmetric", f"q matrix at {pos} is not symmetric", pos))
    for pos, mat in _matrices(sys.w):
        sym = 0.5 * (mat + mat.T)
        if np.linalg.norm(mat - mat.T) > 1e-12 * max(1.0, np.linalg.norm(mat)):
            v.append(Violation("w_not_symmetric", f"w matrix at {pos} is not symmetric", pos))
        elif np.linalg.eigvalsh(sym).min() < -options.psd_rtol * np.linalg.norm(sym):
            v.append(Violation("w_not_psd", f"w matrix at {pos} is not positive semi-definite", pos))

    x0 = sys.base_point
    if x0 is not None:
        if not (0.0 <= x0 < sys.period):
            v.append(Violation("base_point_range",
                               f"base point {x0} outside [0, {sys.period})", x0))
        elif sys.is_atom(x0):
            v.append(Violation("base_point_atom", f"base point {x0} is an atom", x0))
    if any(x.code == "J" for x in v):
        return ValidationReport(tuple(v))

    lam_set: List[complex] = []
    dead: List[float] = []
    for p, (dq, dw) in zip(sys.layout.atom_positions, sys.layout.atom_jumps):
        roots = _atom_roots(J, dq, dw)
        if roots is None:
            dead.append(p)
            v.append(Violation("identically_singular",
                               f"B+(x, lambda) is singular for every lambda at x={p} (Lambda = C)", p))
            continue
        lam_set.extend(roots)
        for z in _dedupe([z for z in roots if _is_real(z, options)], options.real_root_tol):
            v.append(Violation("singular_real",
                               f"B+(x, lambda) is singular at x={p} for real lambda={z.real:.17g}", p))
    if dead:
        return ValidationReport(tuple(v), (), True, tuple(dead))
    return ValidationReport(tuple(v), tuple(singular_set(sys, options)), False, ())


def check_first_order_atoms(r: MatrixMeasureSpec,
                            options: NumericOptions = DEFAULT_OPTIONS) -> Tuple[Violation, ...]:
    """Atoms of ``u' = r u`` at which ``I +- Delta_r / 2`` is singular."""
    out: List[Violation] = []
    eye = np.eye(r.dim)
    for atom in r.atoms:
        for sign in (+1, -1):
            mat = eye + sign * 0.5 * atom.weight
            if abs(np.linalg.det(mat)) <= options.singular_rtol * max(1.0, np.linalg.norm(mat)) ** r.dim:
                out.append(Violation("first_order_singular",
                                     f"I {'+' if sign > 0 else '-'} Delta/2 is singular at x={atom.position}",
                                     atom.position))
    return tuple(out)


# ----------------------------------------------------------------------
# Quadrature
# ----------------------------------------------------------------------

def period_integral(m: MatrixMeasureSpec,
                    g: Callable[[float], np.ndarray],
                    a: float = 0.0,
                    options: NumericOptions = DEFAULT_OPTIONS,
                    subdivisions: int = 1,
                    right: Optional[Callable[[float], np.ndarray]] = None) -> np.ndarray:
    """Integral of ``g * m`` (or ``g * m * right``) over ``[a, a + period)``.

    Atoms contribute ``g(p) @ weight`` (times ``right(p)``); each density piece
    is integrated by Gauss-Legendre of ``options.quad_order`` on
    ``subdivisions`` equal parts.
    """
    if m.atom_index(a, options) is not None:
        raise AnchorError(f"anchor a={a} is an atom position; shift the anchor")
    nodes, weights = gauss_legendre(options.quad_order)
    total = np.zeros((m.dim, m.dim), dtype=complex)
    for ev in PeriodLayout((m,), options).events(a, a + m.period):
        if isinstance(ev, AtomEvent):
            term = np.asarray(g(ev.position), dtype=complex) @ ev.jumps[0]
            total += term if right is None else term @ np.asarray(right(ev.position), dtype=complex)
            continue
        dens = ev.densities[0]
        if not np.any(dens):
            continue
        edges = np.linspace(ev.start, ev.stop, subdivisions + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
            for t, wt in zip(nodes, weights):
                x = mid + half * t
                term = np.asarray(g(x), dtype=complex) @ dens
                if right is not None:
                    term = term @ np.asarray(right(x), dtype=complex)
                total += (wt * half) * term
    return total
