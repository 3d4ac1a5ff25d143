import cmath
import math

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

from FloqSpec.errors import SingularLambdaError
from FloqSpec.measure_model import STANDARD_J
from FloqSpec.propagation import (
    atom_transfer,
    balanced_fundamental,
    balanced_solution,
    expm_scaled,
    fundamental_matrix,
    segment_transfer,
)

ZERO = np.zeros((2, 2))


# -- single steps -------------------------------------------------------

def test_zero_atom_is_identity():
    assert_allclose(atom_transfer(STANDARD_J, ZERO, ZERO, 3.0), np.eye(2))


@pytest.mark.parametrize("a, alpha, lam", [(1.0, 1.0, 0.3), (2.0, 0.5, -4.0), (0.0, 1.0, 7.5)])
def test_scalar_weight_atom(a, alpha, lam):
    A = atom_transfer(STANDARD_J, np.diag([a, 0.0]), np.diag([alpha, 0.0]), lam)
    assert_allclose(A, [[1.0, 0.0], [a - lam * alpha, 1.0]], atol=1e-14)


def test_scalar_atom():
    A = atom_transfer(np.array([[1j]]), np.array([[2.0]]), np.zeros((1, 1)), 0.7)
    assert_allclose(A, [[1j]], atol=1e-15)


def test_singular_atom_raises():
    with pytest.raises(SingularLambdaError) as info:
        atom_transfer(STANDARD_J, ZERO, np.eye(2), 2j, position=0.0)
    assert info.value.lam == 2j
    assert info.value.label == "singular_lambda"


def test_segment_zero_and_nilpotent():
    assert_allclose(segment_transfer(STANDARD_J, ZERO, ZERO, 5.0, 1.0), np.eye(2))
    # J^-1 (-Q) = [[0, 1], [0, 0]]
    M = segment_transfer(STANDARD_J, np.diag([0.0, -1.0]), ZERO, 5.0, 1.0)
    assert_allclose(M, [[1.0, 1.0], [0.0, 1.0]], atol=1e-14)


def test_schrodinger_segment_trace():
    M = segment_transfer(STANDARD_J, np.diag([0.0, -1.0]), np.diag([1.0, 0.0]), math.pi ** 2, 1.0)
    assert np.trace(M).real == pytest.approx(-2.0, abs=1e-12)


def test_expm_matches_scipy():
    rng = np.random.default_rng(3)
    for _ in range(50):
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        E, s = expm_scaled(A)
        assert_allclose(E * math.exp(s), scipy.linalg.expm(A), rtol=1e-12, atol=1e-12)


def test_expm_near_degenerate_uses_series():
    A = np.array([[1.0, 1e-12], [0.0, 1.0]])
    E, s = expm_scaled(A)
    assert_allclose(E * math.exp(s), [[math.e, math.e * 1e-12], [0.0, math.e]], rtol=1e-14)


def test_expm_does_not_overflow():
    A = np.array([[0.0, 1.0], [1.0e6, 0.0]])
    E, s = expm_scaled(A)
    assert np.all(np.isfinite(E))
    assert s == pytest.approx(1.0e3)


def test_expm_scalar():
    E, s = expm_scaled(np.array([[2.0 - 3.0j]]))
    assert s == 2.0
    assert E[0, 0] == pytest.approx(cmath.exp(-3.0j))


# -- fundamental matrices -------------------------------------------------

def test_identity_at_start(example):
    s = example("schrodinger-free")
    assert_allclose(fundamental_matrix(s, 2.0, 0.3, 0.3).value, np.eye(2))


def test_scalar_weight_monodromy_matrix(example):
    s = example("dirac-comb-scalar-weight")
    M = fundamental_matrix(s, 0.0, -0.5, 0.5).value
    assert_allclose(M, [[1.5, 1.25], [1.0, 1.5]], atol=1e-14)


def test_composition(random_system):
    rng = np.random.default_rng(11)
    for seed in range(20):
        s = random_system(seed)
        lam = rng.uniform(-2.0, 2.0) + 0.1j * rng.normal()
        w = s.period
        whole = fundamental_matrix(s, lam, 0.0, 2.0 * w).value
        parts = fundamental_matrix(s, lam, w, 2.0 * w).value @ fundamental_matrix(s, lam, 0.0, w).value
        assert_allclose(parts, whole, rtol=1e-10, atol=1e-10 * np.linalg.norm(whole))


def test_backward_is_inverse(random_system):
    s = random_system(5)
    fwd = fundamental_matrix(s, 0.7, -0.3, 1.9).value
    bwd = fundamental_matrix(s, 0.7, 1.9, -0.3).value
    assert_allclose(bwd @ fwd, np.eye(2), atol=1e-10)


def test_symplectic(random_system):
    rng = np.random.default_rng(12)
    for seed in range(20):
        s = random_system(seed)
        lam = rng.uniform(-2.0, 2.0)
        x = rng.uniform(-2.0 * s.period, 2.0 * s.period)
        T = fundamental_matrix(s, lam, s.x0, x)
        U = T.value
        assert_allclose(U.T @ s.J @ U, s.J, atol=1e-10 * max(1.0, np.linalg.norm(U) ** 2))
        assert T.det() == pytest.approx(1.0, abs=1e-10 * max(1.0, np.linalg.norm(U) ** 2))


def test_conjugation_symmetry(random_system):
    rng = np.random.default_rng(13)
    for seed in range(20):
        s = random_system(seed)
        lam = rng.uniform(-2.0, 2.0) + 0.3j
        x = rng.uniform(-2.0 * s.period, 2.0 * s.period)
        U = fundamental_matrix(s, lam, s.x0, x).value
        V = fundamental_matrix(s, np.conj(lam), s.x0, x).value
        assert_allclose(V, U.conj(), rtol=1e-10, atol=1e-12)


def test_scalar_modulus_is_one(scalar_comb):
    for lam in np.linspace(-5.0, 5.0, 21):
        for x in (0.0, 0.3, 1.0, -2.7):
            U = balanced_fundamental(scalar_comb, lam, x)
            assert abs(U.u_plus[0, 0]) == pytest.approx(1.0, abs=1e-12)
            assert abs(U.u_minus[0, 0]) == pytest.approx(1.0, abs=1e-12)


# -- balanced values ------------------------------------------------------

def test_balanced_solution_at_base_point(example):
    s = example("schrodinger-free")
    u = balanced_solution(s, 3.0, [1.0, 2.0], s.x0)
    assert_allclose(u.u_minus, [1.0, 2.0])
    assert_allclose(u.u_balanced, [1.0, 2.0])


def test_balanced_solution_jump_at_atom(example):
    s = example("dirac-comb-scalar-weight", a=1.0, alpha=2.0)
    lam = 0.75
    u = balanced_solution(s, lam, [1.0, 0.0], 1.0)
    jump = u.u_plus - u.u_minus
    assert jump[0] == pytest.approx(0.0, abs=1e-14)
    assert jump[1] == pytest.approx((1.0 - 2.0 * lam) * u.u_minus[0])
    assert_allclose(u.u_balanced, 0.5 * (u.u_minus + u.u_plus))
