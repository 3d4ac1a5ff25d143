"""
FloqSpec/propagation.py
---------------------------------------------------------------------
Transfer matrices across atoms and atom-free segments, fundamental matrices
and balanced solution values.

Conventions
  * ``transfer(a -> b)`` maps u-(a) to u-(b): an atom at ``a`` is crossed,
    an atom at ``b`` is not.  For ``b < a`` the inverse of ``transfer(b -> a)``
    is returned.
  * Segment exponentials are evaluated in closed form (2x2) with the modulus
    ``exp(log_scale)`` factored out, so long propagations do not overflow.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from FloqSpec.errors import SingularLambdaError
from FloqSpec.measure_model import AtomEvent, CanonicalSystem
from FloqSpec.options import DEFAULT_OPTIONS, NumericOptions

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# Matrix exponential
# ----------------------------------------------------------------------

def expm_scaled(A: np.ndarray,
                options: NumericOptions = DEFAULT_OPTIONS) -> Tuple[np.ndarray, float]:
    """``exp(A) = E * exp(log_scale)`` for a 1x1 or 2x2 matrix ``A``.

    2x2 case: with s = tr(A)/2 and z**2 = s**2 - det(A),
    ``exp(A) = e^s (cosh z I + sinh(z)/z (A - s I))``; the Taylor series of
    cosh and sinh(z)/z is used once ``2|z|`` drops below
    ``series_tol * max(1, |A|)``.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape == (1, 1):
        a = complex(A[0, 0])
        return np.array([[cmath.exp(1j * a.imag)]]), a.real

    s = 0.5 * (A[0, 0] + A[1, 1])
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    z2 = s * s - det
    z = cmath.sqrt(z2)
    B = A - s * np.eye(2)
    shift = 0.0
    if 2.0 * abs(z) < options.series_tol * max(1.0, np.linalg.norm(A)):
        ch = 1.0 + z2 / 2.0 + z2 * z2 / 24.0
        shc = 1.0 + z2 / 6.0 + z2 * z2 / 120.0
    elif abs(z.real) <= 30.0:
        ch = cmath.cosh(z)
        shc = cmath.sinh(z) / z
    else:
        shift = abs(z.real)
        ep, em = cmath.exp(z - shift), cmath.exp(-z - shift)
        ch = 0.5 * (ep + em)
        shc = 0.5 * (ep - em) / z
    E = cmath.exp(1j * s.imag) * (ch * np.eye(2) + shc * B)
    return E, s.real + shift


def segment_generator(J: np.ndarray, Qd: np.ndarray, Wd: np.ndarray,
                      lam: complex) -> np.ndarray:
    """``J^-1 (lambda W_d - Q_d)``."""
    return np.linalg.solve(np.asarray(J, dtype=complex),
                           lam * np.asarray(Wd, dtype=complex) - np.asarray(Qd))


def segment_transfer(J, Qd, Wd, lam: complex, h: float,
                     options: NumericOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """``exp(h J^-1 (lambda W_d - Q_d))``."""
    E, log_scale = expm_scaled(h * segment_generator(J, Qd, Wd, lam), options)
    return E * math.exp(log_scale)


def atom_transfer(J, dq, dw, lam: complex, position: Optional[float] = None,
                  options: NumericOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """``B+^-1 B-``: maps u- to u+ across an atom.

    Raises ``SingularLambdaError`` when ``B+`` or ``B-`` is singular, i.e.
    when lambda belongs to the singular set at this atom.
    """
    J = np.asarray(J, dtype=complex)
    half = 0.5 * (np.asarray(dq) - lam * np.asarray(dw))
    b_plus, b_minus = J + half, J - half
    n = J.shape[0]
    for b in (b_plus, b_minus):
        scale = max(1.0, float(np.linalg.norm(b))) ** n
        if abs(np.linalg.det(b)) <= options.singular_rtol * scale:
            raise SingularLambdaError(float("nan") if position is None else position, lam)
    return np.linalg.solve(b_plus, b_minus)


def jump_matrices(J, dq, dw, lam: complex) -> Tuple[np.ndarray, np.ndarray]:
    """(B+, B-) at an atom."""
    J = np.asarray(J, dtype=complex)
    half = 0.5 * (np.asarray(dq) - lam * np.asarray(dw))
    return J + half, J - half


# ----------------------------------------------------------------------
# Transfer matrices
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Transfer from ``x_from`` to ``x_to``: ``matrix * exp(log_scale)``."""

    lam: complex
    x_from: float
    x_to: float
    matrix: np.ndarray
    log_scale: float = 0.0

    @property
    def value(self) -> np.ndarray:
        return self.matrix * math.exp(self.log_scale)

    def det(self) -> complex:
        n = self.matrix.shape[0]
        return complex(np.linalg.det(self.matrix)) * math.exp(n * self.log_scale)

    def inverse(self) -> "TransferMatrix":
        return TransferMatrix(self.lam, self.x_to, self.x_from,
                              np.linalg.inv(self.matrix), -self.log_scale)

    def then(self, other: "TransferMatrix") -> "TransferMatrix":
        """``other . self``: first this transfer, then ``other``."""
        return TransferMatrix(self.lam, self.x_from, other.x_to,
                              other.matrix @ self.matrix,
                              self.log_scale + other.log_scale)


def _renormalise(mat: np.ndarray, log_scale: float,
                 options: NumericOptions) -> Tuple[np.ndarray, float]:
    nrm = float(np.linalg.norm(mat))
    if nrm > options.overflow_norm or 0.0 < nrm < 1.0 / options.overflow_norm:
        return mat / nrm, log_scale + math.log(nrm)
    return mat, log_scale


def _forward(sys: CanonicalSystem, lam: complex, a: float, b: float,
             options: NumericOptions) -> Tuple[np.ndarray, float]:
    mat = np.eye(sys.n, dtype=complex)
    log_scale = 0.0
    for ev in sys.layout.events(a, b):
        if isinstance(ev, AtomEvent):
            dq, dw = ev.jumps
            mat = atom_transfer(sys.J, dq, dw, lam, ev.position, options) @ mat
        else:
            Qd, Wd = ev.densities
            if not (np.any(Qd) or np.any(Wd)):
                continue
            gen = segment_generator(sys.J, Qd, Wd, lam)
            E, s = expm_scaled((ev.stop - ev.start) * gen, options)
            mat = E @ mat
            log_scale += s
        mat, log_scale = _renormalise(mat, log_scale, options)
    return mat, log_scale


def fundamental_matrix(sys: CanonicalSystem, lam: complex, x_from: float,
                       x_to: float, options: Optional[NumericOptions] = None) -> TransferMatrix:
    """Ordered product of atom and segment transfers covering [x_from, x_to)."""
    options = options or sys.options
    lam = complex(lam)
    if x_to >= x_from:
        mat, log_scale = _forward(sys, lam, x_from, x_to, options)
        return TransferMatrix(lam, x_from, x_to, mat, log_scale)
    mat, log_scale = _forward(sys, lam, x_to, x_from, options)
    return TransferMatrix(lam, x_to, x_from, mat, log_scale).inverse()


# ----------------------------------------------------------------------
# Balanced values
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BalancedValue:
    """One-sided limits of a solution (vector or matrix) at ``x``."""

    x: float
    u_minus: np.ndarray
    u_plus: np.ndarray

    @property
    def u_balanced(self) -> np.ndarray:
        return 0.5 * (self.u_plus + self.u_minus)

    def scaled(self, factor) -> "BalancedValue":
        return BalancedValue(self.x, factor * self.u_minus, factor * self.u_plus)

    def __add__(self, other: "BalancedValue") -> "BalancedValue":
        return BalancedValue(self.x, self.u_minus + other.u_minus,
                             self.u_plus + other.u_plus)


def cross_atom(sys: CanonicalSystem, lam: complex, x: float, u_minus: np.ndarray,
               options: Optional[NumericOptions] = None) -> BalancedValue:
    """Attach u+ to u-(x) (equal to u- off atoms)."""
    options = options or sys.options
    dq, dw = sys.jumps(x)
    if sys.is_atom(x) and (np.any(dq) or np.any(dw)):
        u_plus = atom_transfer(sys.J, dq, dw, lam, sys.q.reduce(x, options), options) @ u_minus
    else:
        u_plus = u_minus
    return BalancedValue(x, u_minus, u_plus)


def balanced_fundamental(sys: CanonicalSystem, lam: complex, x: float,
                         x_from: Optional[float] = None,
                         options: Optional[NumericOptions] = None) -> BalancedValue:
    """U-(x), U+(x) and U#(x) of the fundamental matrix normalised at ``x_from``."""
    x_from = sys.x0 if x_from is None else x_from
    U = fundamental_matrix(sys, lam, x_from, x, options).value
    return cross_atom(sys, lam, x, U, options)


def balanced_solution(sys: CanonicalSystem, lam: complex, c, x: float,
                      options: Optional[NumericOptions] = None) -> BalancedValue:
    """Solution with ``u(x0) = c`` evaluated at ``x``."""
    c = np.asarray(c, dtype=complex)
    U = fundamental_matrix(sys, lam, sys.x0, x, options).value
    return cross_atom(sys, lam, x, U @ c, options)
