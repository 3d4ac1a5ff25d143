import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from FloqSpec.errors import AnchorError, IdenticallySingularError
from FloqSpec.floquet_core import gram_matrix
from FloqSpec.measure_model import (
    AtomEvent,
    CanonicalSystem,
    MatrixMeasureSpec,
    PeriodLayout,
    SegmentEvent,
    check_first_order_atoms,
    det_polynomial,
    jump_at,
    period_integral,
    singular_set,
    validate_system,
)
from FloqSpec.propagation import balanced_fundamental, fundamental_matrix, jump_matrices


def _sys(q_atoms=(), w_atoms=(), q_dens=(), w_dens=(), period=1.0, base_point=None):
    q = MatrixMeasureSpec(period, 2, q_atoms, q_dens)
    w = MatrixMeasureSpec(period, 2, w_atoms, w_dens)
    return CanonicalSystem.from_scale(1.0, q, w, base_point=base_point)


# -- jumps --------------------------------------------------------------

def test_jump_at_comb():
    m = MatrixMeasureSpec.comb(1.0, np.diag([1.0, 0.0]))
    assert_allclose(jump_at(m, 3.0), np.diag([1.0, 0.0]))
    assert_allclose(jump_at(m, -2.0), np.diag([1.0, 0.0]))
    assert_allclose(jump_at(m, 0.5), np.zeros((2, 2)))


def test_jump_at_lebesgue_is_zero():
    m = MatrixMeasureSpec.lebesgue(2.0, np.eye(2))
    assert not np.any(jump_at(m, 1.3))
    assert_allclose(m.total(), 2.0 * np.eye(2))


def test_reduce_is_periodic():
    m = MatrixMeasureSpec.zero(0.75, 2)
    assert m.reduce(-0.25) == pytest.approx(0.5)
    assert m.reduce(1.5) == pytest.approx(0.0, abs=1e-15)


# -- layout -------------------------------------------------------------

def test_events_include_start_atom_and_exclude_end_atom():
    m = MatrixMeasureSpec.comb(1.0, np.diag([1.0, 0.0]), density=np.diag([0.0, -1.0]))
    events = PeriodLayout((m,)).events(0.0, 2.0)
    atoms = [e.position for e in events if isinstance(e, AtomEvent)]
    assert atoms == [0.0, 1.0]
    segments = [(e.start, e.stop) for e in events if isinstance(e, SegmentEvent)]
    assert segments == [(0.0, 1.0), (1.0, 2.0)]


def test_events_split_at_density_breaks():
    q = MatrixMeasureSpec(1.0, 2, segments=((0.0, 0.25, np.eye(2)), (0.25, 1.0, 2.0 * np.eye(2))))
    events = PeriodLayout((q,)).events(0.1, 0.6)
    assert [(e.start, e.stop) for e in events] == [(0.1, 0.25), (0.25, 0.6)]
    assert_allclose(events[1].densities[0], 2.0 * np.eye(2))


def test_default_base_point():
    assert _sys(q_atoms=((0.0, np.eye(2)),)).x0 == pytest.approx(0.5)
    assert _sys().x0 == 0.0
    s = _sys(q_atoms=((0.0, np.eye(2)),), w_atoms=((0.2, np.eye(2)),))
    assert s.x0 == pytest.approx(0.6)
    assert s.base_point_defaulted


# -- validation ---------------------------------------------------------

def test_zero_coefficients_are_valid():
    report = validate_system(_sys())
    assert report.ok
    assert report.singular_set == ()


def test_identity_comb_singular_set(example):
    report = validate_system(example("dirac-comb-full", a=0.0, b=0.0, d=0.0))
    assert report.ok
    lam = sorted(report.singular_set, key=lambda z: z.imag)
    assert_allclose(lam, [-2j, 2j], atol=1e-12)


def test_scalar_weight_comb_has_no_singular_points(example):
    s = example("dirac-comb-scalar-weight")
    assert singular_set(s) == []
    assert validate_system(s).ok


def test_det_polynomial_is_sign_symmetric_on_the_real_axis(random_system):
    for seed in range(10):
        s = random_system(seed)
        for dq, dw in s.layout.atom_jumps:
            plus = det_polynomial(s.J, dq, dw, +1)
            minus = det_polynomial(s.J, dq, dw, -1)
            for lam in np.linspace(-3.0, 3.0, 7):
                assert np.polyval(plus[::-1], lam) == pytest.approx(np.polyval(minus[::-1], lam))


def test_everywhere_singular_example(example):
    s = example("lambda-everywhere-singular")
    report = validate_system(s)
    assert not report.ok
    assert report.identically_singular
    assert "identically_singular" in report.codes()
    assert 0.0 in report.singular_positions
    with pytest.raises(IdenticallySingularError):
        singular_set(s)


def test_real_singular_point_is_a_violation():
    s = _sys(q_atoms=((0.0, np.diag([0.0, 1.0])),), w_atoms=((0.0, np.diag([1.0, 0.0])),))
    report = validate_system(s)
    assert "singular_real" in report.codes()
    assert any(abs(z - 4.0) < 1e-9 for z in report.singular_set)


def test_valid_system_has_invertible_atom_jumps_on_the_real_axis(random_system):
    rng = np.random.default_rng(23)
    checked = 0
    for seed in range(20):
        s = random_system(seed)
        assert validate_system(s).ok
        for dq, dw in s.layout.atom_jumps:
            for lam in rng.uniform(-20.0, 20.0, size=100):
                b_plus, _ = jump_matrices(s.J, dq, dw, lam)
                inv = np.linalg.inv(b_plus)
                assert np.all(np.isfinite(inv))
                checked += 1
    assert checked > 0


@pytest.mark.parametrize(
    "kwargs, code",
    [
        ({"w_dens": ((0.0, 1.0, np.diag([1.0, -1.0])),)}, "w_not_psd"),
        ({"q_dens": ((0.0, 1.0, np.array([[0.0, 1.0], [0.0, 0.0]])),)}, "q_not_symmetric"),
        ({"q_atoms": ((0.5, np.eye(2)), (0.2, np.eye(2)))}, "atom_order"),
        ({"q_atoms": ((0.2, np.eye(2)), (0.2, np.eye(2)))}, "atom_duplicate"),
        ({"q_atoms": ((1.5, np.eye(2)),)}, "atom_range"),
        ({"q_dens": ((0.0, 0.4, np.eye(2)), (0.5, 1.0, np.eye(2)))}, "segment_cover"),
        ({"q_atoms": ((0.3, np.eye(2)),), "base_point": 0.3}, "base_point_atom"),
        ({"base_point": 1.2}, "base_point_range"),
    ],
)
def test_violations(kwargs, code):
    report = validate_system(_sys(**kwargs))
    assert not report.ok
    assert code in report.codes()


def test_dimension_mismatch():
    q = MatrixMeasureSpec.zero(1.0, 1)
    w = MatrixMeasureSpec.zero(1.0, 2)
    report = validate_system(CanonicalSystem.from_scale(1.0, q, w))
    assert "dimension" in report.codes()


def test_scalar_system_is_valid(scalar_comb):
    report = validate_system(scalar_comb)
    assert report.ok
    # (i -+ 1) never vanishes
    assert report.singular_set == ()


def test_first_order_atoms():
    bad = MatrixMeasureSpec.comb(1.0, np.diag([2.0, -2.0]))
    assert [v.position for v in check_first_order_atoms(bad)] == [0.0, 0.0]
    assert check_first_order_atoms(MatrixMeasureSpec.comb(1.0, np.eye(2))) == ()


# -- period integrals ---------------------------------------------------

def test_period_integral_lebesgue():
    m = MatrixMeasureSpec.lebesgue(1.0, np.eye(2))
    assert_allclose(period_integral(m, lambda x: np.eye(2), 0.3), np.eye(2), atol=1e-14)


@pytest.mark.parametrize("anchor", [-0.5, 0.5])
def test_period_integral_comb(anchor):
    m = MatrixMeasureSpec.comb(1.0, np.diag([2.5, 0.0]))
    assert_allclose(period_integral(m, lambda x: np.eye(2), anchor), np.diag([2.5, 0.0]))


def test_period_integral_rejects_atom_anchor():
    m = MatrixMeasureSpec.comb(1.0, np.eye(2))
    with pytest.raises(AnchorError):
        period_integral(m, lambda x: np.eye(2), 2.0)


def test_period_integral_shift_by_one_period():
    rng = np.random.default_rng(7)
    for _ in range(50):
        omega = rng.uniform(0.5, 2.0)
        pos = np.sort(rng.uniform(0.0, omega, size=2))
        cut = rng.uniform(0.0, omega)
        m = MatrixMeasureSpec(omega, 2, ((pos[0], np.eye(2)), (pos[1], np.diag([1.0, 3.0]))),
                              ((0.0, cut, np.eye(2)), (cut, omega, np.diag([2.0, 0.5]))))
        k = 2.0 * math.pi / omega
        c = rng.normal(size=(2, 2))

        def g(x, c=c, k=k):
            return c * math.cos(k * x) + np.eye(2) * math.sin(2 * k * x)

        a = rng.uniform(-omega, omega)
        first = period_integral(m, g, a)
        second = period_integral(m, g, a + omega)
        assert_allclose(first, second, atol=1e-10)


def test_period_integral_with_right_factor_matches_gram_on_a_comb(example):
    s = example("dirac-comb-full", b=1.0)
    for lam in (0.3, 0.3 + 0.2j):
        def ub(x, lam=lam):
            return balanced_fundamental(s, lam, x).u_balanced

        total = period_integral(s.w, lambda x: ub(x).conj().T, s.x0, right=ub)
        assert_allclose(total, gram_matrix(s, lam), rtol=1e-12, atol=1e-12)


def test_period_integral_with_right_factor_matches_gram_on_a_density(example):
    s = example("schrodinger-free")
    lam = 2.0

    def U(x):
        return fundamental_matrix(s, lam, s.x0, x).value

    total = period_integral(s.w, lambda x: U(x).conj().T, s.x0, subdivisions=8, right=U)
    assert_allclose(total, gram_matrix(s, lam), rtol=1e-10, atol=1e-12)
