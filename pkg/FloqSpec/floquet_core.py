"""
FloqSpec/floquet_core.py
---------------------------------------------------------------------
Monodromy matrix, Floquet discriminant, multipliers and exponents, Floquet
and generalized Floquet solutions, the matrix T(lambda) and the derivative
of the discriminant.

For n=2 the multipliers are ordered |rho1| >= |rho2| (ties: Im rho1 >= 0);
exponents use the principal logarithm, alpha = log(rho) / omega.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from FloqSpec.errors import JordanStructureError, StructureError
from FloqSpec.measure_model import AtomEvent, CanonicalSystem, gauss_legendre
from FloqSpec.options import NumericOptions
from FloqSpec.propagation import (
    BalancedValue,
    atom_transfer,
    balanced_fundamental,
    balanced_solution,
    expm_scaled,
    fundamental_matrix,
    segment_generator,
)

logger = logging.getLogger(__name__)

SCALAR = "scalar"
DISTINCT = "distinct"
DOUBLE_DIAGONAL = "double_diagonal"
DOUBLE_JORDAN = "double_jordan"


@dataclass(frozen=True, eq=False)
class MonodromyData:
    lam: complex
    M: np.ndarray
    det_M: complex
    D: complex

    @property
    def n(self) -> int:
        return self.M.shape[0]


@dataclass(frozen=True, eq=False)
class FloquetData:
    """Multipliers, exponents and eigen/Jordan structure of M(lambda).

    ``vectors`` holds the eigenvectors (c1, c2) for ``distinct`` and
    ``double_diagonal``, the Jordan chain (c, c_gen) with
    ``M c_gen = rho c_gen + c`` for ``double_jordan``, and (1,) for n=1.
    """

    monodromy: MonodromyData
    multipliers: Tuple[complex, ...]
    exponents: Tuple[complex, ...]
    structure: str
    vectors: Tuple[np.ndarray, ...]
    near_threshold: bool = False

    @property
    def lam(self) -> complex:
        return self.monodromy.lam

    @property
    def M(self) -> np.ndarray:
        return self.monodromy.M

    @property
    def D(self) -> complex:
        return self.monodromy.D


def _opts(sys: CanonicalSystem, options: Optional[NumericOptions]) -> NumericOptions:
    return options or sys.options


def monodromy(sys: CanonicalSystem, lam: complex,
              options: Optional[NumericOptions] = None) -> MonodromyData:
    """M(lambda) = U(x0 + omega) with U(x0) = I."""
    options = _opts(sys, options)
    x0 = sys.x0
    M = fundamental_matrix(sys, lam, x0, x0 + sys.period, options).value
    return MonodromyData(complex(lam), M, complex(np.linalg.det(M)), complex(np.trace(M)))


def discriminant(sys: CanonicalSystem, lam: complex,
                 options: Optional[NumericOptions] = None) -> complex:
    return monodromy(sys, lam, options).D


def _null_vector(N: np.ndarray) -> np.ndarray:
    """Unit vector spanning the kernel of a (numerically) singular 2x2 ``N``."""
    r0, r1 = N[0], N[1]
    if np.linalg.norm(r0) >= np.linalg.norm(r1):
        v = np.array([-r0[1], r0[0]])
    else:
        v = np.array([-r1[1], r1[0]])
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return np.array([1.0 + 0j, 0.0])
    return v / nrm


def multipliers_exponents(sys: CanonicalSystem, lam: complex,
                          options: Optional[NumericOptions] = None) -> FloquetData:
    options = _opts(sys, options)
    mono = monodromy(sys, lam, options)
    omega = sys.period
    M = mono.M
    if sys.n == 1:
        rho = complex(M[0, 0])
        return FloquetData(mono, (rho,), (cmath.log(rho) / omega,), SCALAR,
                           (np.array([1.0 + 0j]),))

    D, det = mono.D, mono.det_M
    sq = cmath.sqrt(D * D - 4.0 * det)
    r1, r2 = 0.5 * (D + sq), 0.5 * (D - sq)
    if abs(abs(r1) - abs(r2)) <= 1e-14 * max(abs(r1), abs(r2)):
        rho1 = r1 if r1.imag >= r2.imag else r2
    else:
        rho1 = r1 if abs(r1) > abs(r2) else r2
    rho2 = det / rho1

    gap = abs(D * D - 4.0 * det)
    thr = options.jordan_tol * (1.0 + abs(D) ** 2)
    eye = np.eye(2)
    if gap <= thr:
        rho = 0.5 * D
        N = M - rho * eye
        size = float(np.linalg.norm(N))
        tol_N = options.jordan_tol * max(1.0, float(np.linalg.norm(M)))
        near = tol_N / 100.0 < size <= 100.0 * tol_N
        if size > tol_N:
            j = int(np.argmax(np.linalg.norm(N, axis=0)))
            c = N[:, j].astype(complex)
            c_gen = eye[:, j].astype(complex)
            nrm = np.linalg.norm(c)
            structure, vectors = DOUBLE_JORDAN, (c / nrm, c_gen / nrm)
        else:
            structure = DOUBLE_DIAGONAL
            vectors = (eye[:, 0].astype(complex), eye[:, 1].astype(complex))
        rho1 = rho2 = rho
    else:
        near = gap <= 100.0 * thr
        structure = DISTINCT
        vectors = (_null_vector(M - rho1 * eye), _null_vector(M - rho2 * eye))
    if near:
        logger.warning("lambda=%s: multiplier structure %s is close to the classification threshold",
                       complex(lam), structure)
    exponents = (cmath.log(rho1) / omega, cmath.log(rho2) / omega)
    return FloquetData(mono, (rho1, rho2), exponents, structure, vectors, near)


# ----------------------------------------------------------------------
# Floquet solutions
# ----------------------------------------------------------------------

def _reduce(sys: CanonicalSystem, x: float) -> Tuple[int, float]:
    k = math.floor((x - sys.x0) / sys.period)
    return k, x - k * sys.period


def _power(rho: complex, k: int) -> complex:
    if k == 0:
        return 1.0 + 0j
    return cmath.exp(k * cmath.log(rho))


def floquet_solution(sys: CanonicalSystem, lam: complex, which: int, x: float,
                     data: Optional[FloquetData] = None,
                     options: Optional[NumericOptions] = None) -> BalancedValue:
    """psi_which(x) with psi(x0) = c_which and psi(x + omega) = rho psi(x)."""
    data = data or multipliers_exponents(sys, lam, options)
    if data.structure == DOUBLE_JORDAN:
        raise JordanStructureError(
            f"lambda={complex(lam)} has a Jordan monodromy; use generalized_floquet")
    if which not in (1, 2) or which > len(data.multipliers):
        raise StructureError(f"no Floquet solution number {which} for n={sys.n}")
    k, x_red = _reduce(sys, x)
    val = balanced_solution(sys, lam, data.vectors[which - 1], x_red, options)
    factor = _power(data.multipliers[which - 1], k)
    return BalancedValue(x, factor * val.u_minus, factor * val.u_plus)


def generalized_floquet(sys: CanonicalSystem, lam: complex, x: float,
                        data: Optional[FloquetData] = None,
                        options: Optional[NumericOptions] = None
                        ) -> Tuple[BalancedValue, BalancedValue]:
    """(v1, v2) with v2(x + omega) = rho v2(x) + v1(x)."""
    data = data or multipliers_exponents(sys, lam, options)
    if data.structure != DOUBLE_JORDAN:
        raise JordanStructureError(
            f"lambda={complex(lam)} has structure {data.structure}, not double_jordan")
    c, c_gen = data.vectors
    rho = data.multipliers[0]
    k, x_red = _reduce(sys, x)
    U = balanced_fundamental(sys, lam, x_red, options=options)
    first = _power(rho, k) * c
    second = _power(rho, k) * c_gen + (k * _power(rho, k - 1)) * c
    v1 = BalancedValue(x, U.u_minus @ first, U.u_plus @ first)
    v2 = BalancedValue(x, U.u_minus @ second, U.u_plus @ second)
    return v1, v2


def floquet_polynomial(j: int, x: float, rho: complex, omega: float) -> complex:
    """q_j(x): q_0 = 1, q_{j+1} = q_j (x - j omega) / ((j + 1) rho omega)."""
    q = 1.0 + 0j
    for i in range(j):
        q = q * (x - i * omega) / ((i + 1) * rho * omega)
    return q


def floquet_periodic_parts(sys: CanonicalSystem, lam: complex, x: float,
                           data: Optional[FloquetData] = None,
                           options: Optional[NumericOptions] = None
                           ) -> Tuple[np.ndarray, np.ndarray]:
    """Balanced omega-periodic parts (p0, p1) of v2 = e^{alpha x}(q_1 p0 + p1)."""
    data = data or multipliers_exponents(sys, lam, options)
    v1, v2 = generalized_floquet(sys, lam, x, data, options)
    alpha, rho = data.exponents[0], data.multipliers[0]
    damp = cmath.exp(-alpha * x)
    p0 = damp * v1.u_balanced
    p1 = damp * v2.u_balanced - floquet_polynomial(1, x, rho, sys.period) * p0
    return p0, p1


# ----------------------------------------------------------------------
# Period integrals of U
# ----------------------------------------------------------------------

def _weighted_period_integral(sys: CanonicalSystem, lam: complex, hermitian: bool,
                              options: NumericOptions) -> np.ndarray:
    """Integral over [x0, x0 + omega) of L(U) w U with balanced U at atoms.

    ``L`` is the conjugate transpose when ``hermitian`` and the transpose
    otherwise (U(., conj lambda)* = U(., lambda)^T for real coefficients).

    This is ``period_integral(w, L(U), x0, right=U)`` specialised to the
    propagated U: U is carried across the merged q/w events instead of being
    recomputed from x0 at every node, and density pieces are split where
    ``h * |generator|`` exceeds ``options.quad_step`` so the nodes also
    resolve the kinks of U at breakpoints of q.
    """
    n = sys.n
    left = (lambda U: U.conj().T) if hermitian else (lambda U: U.T)
    nodes, weights = gauss_legendre(options.quad_order)
    U = np.eye(n, dtype=complex)
    total = np.zeros((n, n), dtype=complex)
    x0 = sys.x0
    for ev in sys.layout.events(x0, x0 + sys.period):
        if isinstance(ev, AtomEvent):
            dq, dw = ev.jumps
            U_plus = atom_transfer(sys.J, dq, dw, lam, ev.position, options) @ U
            if np.any(dw):
                Ub = 0.5 * (U + U_plus)
                total += left(Ub) @ dw @ Ub
            U = U_plus
            continue
        Qd, Wd = ev.densities
        h = ev.stop - ev.start
        gen = segment_generator(sys.J, Qd, Wd, lam)
        if np.any(Wd):
            pieces = max(1, math.ceil(h * float(np.linalg.norm(gen)) / options.quad_step))
            step = h / pieces
            for i in range(pieces):
                lo = i * step
                for t, wt in zip(nodes, weights):
                    s = lo + 0.5 * step * (1.0 + t)
                    E, ls = expm_scaled(s * gen, options)
                    Ux = E @ U * math.exp(ls)
                    total += (0.5 * step * wt) * (left(Ux) @ Wd @ Ux)
        if np.any(Qd) or np.any(Wd):
            E, ls = expm_scaled(h * gen, options)
            U = E @ U * math.exp(ls)
    return total


def _require_real_pair(sys: CanonicalSystem, what: str) -> None:
    if sys.n != 2:
        raise StructureError(f"{what} is defined for n=2 systems only")


def t_matrix(sys: CanonicalSystem, lam: complex,
             options: Optional[NumericOptions] = None) -> np.ndarray:
    """T(lambda) = int U(., conj lambda)* w U(., lambda) over one period."""
    _require_real_pair(sys, "T(lambda)")
    return _weighted_period_integral(sys, complex(lam), False, _opts(sys, options))


def gram_matrix(sys: CanonicalSystem, lam: complex,
                options: Optional[NumericOptions] = None) -> np.ndarray:
    """int U* w U over one period; Hermitian PSD, equal to T for real lambda."""
    return _weighted_period_integral(sys, complex(lam), True, _opts(sys, options))


def period_seminorm(sys: CanonicalSystem, lam: complex, c, k: int = 0,
                    gram: Optional[np.ndarray] = None,
                    options: Optional[NumericOptions] = None) -> float:
    """I_k(u) for u = U(., lambda) c over [x0 + k omega, x0 + (k+1) omega)."""
    if gram is None:
        gram = gram_matrix(sys, lam, options)
    v = np.asarray(c, dtype=complex)
    if k:
        M = monodromy(sys, lam, options).M
        v = np.linalg.matrix_power(M if k > 0 else np.linalg.inv(M), abs(k)) @ v
    return float(np.real(v.conj() @ gram @ v))


def monodromy_derivative(sys: CanonicalSystem, lam: complex,
                         options: Optional[NumericOptions] = None) -> np.ndarray:
    """dM/dlambda = M J^-1 T."""
    _require_real_pair(sys, "dM/dlambda")
    M = monodromy(sys, lam, options).M
    return M @ np.linalg.solve(sys.J.astype(complex), t_matrix(sys, lam, options))


def discriminant_derivative(sys: CanonicalSystem, lam: complex,
                            options: Optional[NumericOptions] = None) -> complex:
    return complex(np.trace(monodromy_derivative(sys, lam, options)))


def discriminant_identity_residuals(sys: CanonicalSystem, lam: float,
                                    options: Optional[NumericOptions] = None
                                    ) -> Tuple[complex, complex]:
    """Residuals of the two identities tying D' to T and the entries of M.

    4 r M21 D' = -T11 (D^2 - 4) + a* T a,  a = (M11 - M22, 2 M21)
    4 r M12 D' =  T22 (D^2 - 4) - b* T b,  b = (-2 M12, M11 - M22)
    """
    _require_real_pair(sys, "the discriminant identity")
    M = monodromy(sys, lam, options).M
    T = t_matrix(sys, lam, options)
    Ddot = complex(np.trace(M @ np.linalg.solve(sys.J.astype(complex), T)))
    D = complex(np.trace(M))
    r = sys.scale
    a = np.array([M[0, 0] - M[1, 1], 2.0 * M[1, 0]])
    b = np.array([-2.0 * M[0, 1], M[0, 0] - M[1, 1]])
    first = 4.0 * r * M[1, 0] * Ddot + T[0, 0] * (D * D - 4.0) - a.conj() @ T @ a
    second = 4.0 * r * M[0, 1] * Ddot - T[1, 1] * (D * D - 4.0) + b.conj() @ T @ b
    return complex(first), complex(second)
