import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import bisect

from FloqSpec import spectral
from FloqSpec.errors import HypothesisError, SpectrumError, StructureError, TrivialWeightError, UsageError
from FloqSpec.floquet_core import (
    discriminant,
    discriminant_derivative,
    floquet_solution,
    monodromy,
    multipliers_exponents,
)
from FloqSpec.measure_model import CanonicalSystem, MatrixMeasureSpec
from FloqSpec.propagation import balanced_solution, jump_matrices
from FloqSpec.spectral import (
    BAND_EDGE,
    BAND_INTERIOR,
    DEGENERATE,
    RESOLVENT,
    SIMPLE,
    SINGULAR_LAMBDA,
    GreensKernel,
    cached_l0,
    classify_lambda,
    detect_l0,
    greens_function,
    resolvent_apply,
    scalar_spectrum,
    stability_bands,
)


# -- classification ---------------------------------------------------------

@pytest.mark.parametrize(
    "name, params, lam, label",
    [
        ("schrodinger-free", {}, -1.0, RESOLVENT),
        ("dirac-comb-full", {"a": 0.0, "b": 0.0, "d": 0.0}, 2j, SINGULAR_LAMBDA),
        ("dirac-comb-scalar-weight", {}, 3.0, BAND_INTERIOR),
        ("dirac-comb-scalar-weight", {}, 1.0, BAND_EDGE),
        ("dirac-comb-scalar-weight", {}, 2.0 + 1.0j, RESOLVENT),
        ("dirac-comb-full", {"b": 1.0}, 0.0, RESOLVENT),
    ],
)
def test_classify_lambda(example, name, params, lam, label):
    assert classify_lambda(example(name, **params), lam) == label


# -- bands ------------------------------------------------------------------

def test_scalar_weight_comb_band(example):
    s = example("dirac-comb-scalar-weight")
    report = stability_bands(s, -10.0, 10.0)
    assert len(report.bands) == 1
    assert report.bands[0] == pytest.approx((1.0, 5.0), abs=1e-8)
    assert [e.kind for e in report.edges] == [SIMPLE, SIMPLE]
    assert [e.level for e in report.edges] == [2.0, -2.0]
    assert report.gaps[0] == pytest.approx((-10.0, 1.0), abs=1e-8)
    assert report.gaps[1] == pytest.approx((5.0, 10.0), abs=1e-8)
    assert not report.constant_D
    assert report.l0_dimension == 0
    assert not report.non_definite
    assert not (report.clipped_low or report.clipped_high)


def test_full_comb_rays(example):
    s = example("dirac-comb-full", b=1.0)
    report = stability_bands(s, -50.0, 50.0)
    assert len(report.bands) == 2
    assert report.bands[0] == pytest.approx((-50.0, -1.0), abs=1e-8)
    assert report.bands[1] == pytest.approx((1.0, 50.0), abs=1e-8)
    assert len(report.gaps) == 1
    assert report.gaps[0] == pytest.approx((-1.0, 1.0), abs=1e-8)
    assert report.clipped_low and report.clipped_high

    rng = np.random.default_rng(31)
    for e in report.edges:
        tol = report.tolerance * (1.0 + abs(e.lam))
        D = discriminant(s, e.lam).real
        assert abs(D * D - 4.0) <= 4.0 * tol * abs(discriminant_derivative(s, e.lam)) + 1e-12
    for lo, hi in report.bands:
        for lam in rng.uniform(lo, hi, size=20):
            assert discriminant(s, lam).real ** 2 < 4.0
    for lo, hi in report.gaps:
        for lam in rng.uniform(lo + 1e-6, hi - 1e-6, size=20):
            assert discriminant(s, lam).real ** 2 > 4.0
    # D is monotone inside a band
    grid = np.linspace(1.0, 50.0, 200)
    values = [discriminant(s, lam).real for lam in grid]
    assert np.all(np.diff(values) < 0.0)


def _sampled_extrema(s, grid):
    """(kind, D) at sampled strict local extrema, refined by bisecting dD/dlambda."""
    D = [discriminant(s, lam).real for lam in grid]

    def Ddot(lam):
        return discriminant_derivative(s, lam).real

    out = []
    for i in range(1, len(grid) - 1):
        if D[i] < D[i - 1] and D[i] < D[i + 1]:
            kind = "min"
        elif D[i] > D[i - 1] and D[i] > D[i + 1]:
            kind = "max"
        else:
            continue
        a, b = grid[i - 1], grid[i + 1]
        star = bisect(Ddot, a, b, xtol=1e-13) if Ddot(a) * Ddot(b) < 0.0 else grid[i]
        out.append((kind, discriminant(s, star).real))
    return out


def test_no_minimum_at_plus_two_or_maximum_at_minus_two(example, random_system):
    extrema = _sampled_extrema(example("schrodinger-free"), np.linspace(1.0, 45.0, 441))
    assert [k for k, _ in extrema] == ["min", "max"]
    assert extrema[0][1] == pytest.approx(-2.0, abs=1e-9)
    assert extrema[1][1] == pytest.approx(2.0, abs=1e-9)

    for seed in range(10):
        s = random_system(seed)
        if detect_l0(s).dimension:
            continue
        for kind, value in _sampled_extrema(s, np.linspace(-10.0, 10.0, 401)):
            if kind == "min":
                assert abs(value - 2.0) > 1e-9
            else:
                assert abs(value + 2.0) > 1e-9


def test_schrodinger_free_degenerate_edges(example):
    s = example("schrodinger-free")
    report = stability_bands(s, -5.0, 40.0)
    assert len(report.bands) == 1
    assert report.bands[0] == pytest.approx((0.0, 40.0), abs=1e-8)
    assert report.clipped_high
    kinds = {round(e.lam, 6): e for e in report.edges}
    assert len(report.edges) == 3
    first, second, third = report.edges
    assert first.lam == pytest.approx(0.0, abs=1e-8)
    assert first.kind == SIMPLE
    assert second.lam == pytest.approx(math.pi ** 2, abs=1e-6)
    assert third.lam == pytest.approx(4.0 * math.pi ** 2, abs=1e-6)
    for e in (second, third):
        assert e.kind == DEGENERATE
        assert e.identity_monodromy
    assert second.level == -2.0 and third.level == 2.0
    assert len(kinds) == 3


def test_constant_discriminant(example):
    report = stability_bands(example("constant-q-zero-weight", a=1.0, b=0.0, d=1.0), -10.0, 10.0)
    assert report.constant_D
    assert report.bands == ()
    assert report.constant_value == pytest.approx(2.0 * math.cos(1.0))
    assert report.non_definite
    assert report.l0_dimension == 2


def test_constant_discriminant_rank_one(example):
    report = stability_bands(example("constant-q-rank-one-weight"), -10.0, 10.0)
    assert report.constant_D
    assert report.l0_dimension == 1
    assert report.constant_value == pytest.approx(2.0 * math.cosh(1.0))
    assert report.to_dict()["flags"]["non_definite"] is True


def test_band_window_errors(example):
    s = example("dirac-comb-scalar-weight")
    with pytest.raises(UsageError):
        stability_bands(s, 1.0, 1.0)
    with pytest.raises(HypothesisError):
        stability_bands(example("lambda-everywhere-singular"), -1.0, 1.0)


def test_band_report_dict(example):
    doc = stability_bands(example("dirac-comb-scalar-weight"), -10.0, 10.0).to_dict()
    assert doc["edges"][0]["type"] == SIMPLE
    assert set(doc["flags"]) >= {"constant_D", "non_definite", "l0_dimension", "scalar_whole_line",
                                 "clipped_low", "clipped_high"}


# -- L0 ------------------------------------------------------------------------

def test_detect_l0_definite(example):
    assert detect_l0(example("schrodinger-free")).dimension == 0
    assert detect_l0(example("dirac-comb-full", b=1.0)).dimension == 0


def test_detect_l0_rank_one_weight(example):
    s = example("constant-q-rank-one-weight")
    report = detect_l0(s)
    assert report.dimension == 1
    c = report.basis[0]
    assert_allclose(np.abs(c), [0.0, 1.0], atol=1e-12)
    assert report.constant_value == pytest.approx(2.0 * math.cosh(1.0))
    for x in (-1.0, 0.4, 2.5):
        u = balanced_solution(s, 0.0, c, x).u_balanced
        assert abs(u[0]) <= 1e-12
        assert abs(u[1]) == pytest.approx(math.exp(x))
    # D stays off (-2, 2)
    for lam in np.linspace(-10.0, 10.0, 21):
        assert abs(discriminant(s, lam).real) >= 2.0


def test_detect_l0_rank_one_comb(example):
    report = detect_l0(example("dirac-comb-rank-one"))
    assert report.dimension == 1
    assert report.constant_value == pytest.approx(10.0 / 3.0)


def test_detect_l0_massless_comb(example):
    assert detect_l0(example("dirac-comb-scalar-weight", alpha=0.0)).dimension == 2


def test_detect_l0_zero_system():
    zero = MatrixMeasureSpec.zero(1.0, 2)
    assert detect_l0(CanonicalSystem.from_scale(1.0, zero, zero)).dimension == 2


def test_detect_l0_jordan_monodromy(example):
    s = example("dirac-comb-scalar-weight", a=0.0, alpha=0.0)
    assert_allclose(monodromy(s, 0.0).M, [[1.0, 1.0], [0.0, 1.0]], atol=1e-14)
    assert monodromy(s, 0.0).M == pytest.approx(np.array([[1.0, 1.0], [0.0, 1.0]]))
    report = detect_l0(s)
    assert report.dimension == 2
    # M does not depend on lambda, so every shift is Jordan too and the last one is kept
    assert report.probe == s.options.l0_probe + s.options.l0_retries
    assert report.constant_value == pytest.approx(2.0)


def test_constant_jordan_discriminant_bands(example):
    report = stability_bands(example("constant-q-zero-weight", a=1.0, b=1.0, d=1.0), -5.0, 5.0)
    assert report.constant_D
    assert report.constant_value == pytest.approx(2.0)
    assert report.l0_dimension == 2
    assert report.non_definite


def test_l0_report_is_computed_once_per_system(example, monkeypatch):
    s = example("dirac-comb-full", b=1.0)
    calls = []

    def counting(sys, options=None):
        calls.append(sys)
        return detect_l0(sys, options)

    monkeypatch.setattr(spectral, "detect_l0", counting)
    GreensKernel(s, 0.0)
    GreensKernel(s, 0.5j)
    greens_function(s, 0.0, 0.2, 0.1)
    stability_bands(s, -3.0, 3.0)
    assert len(calls) == 1
    report = cached_l0(s)
    GreensKernel(example("dirac-comb-full", b=1.0), 0.0, l0=report)
    assert len(calls) == 1


# -- scalar case ------------------------------------------------------------------

def test_scalar_spectrum(scalar_comb):
    report = scalar_spectrum(scalar_comb, -5.0, 5.0)
    assert report.scalar_whole_line
    assert report.bands == ((-5.0, 5.0),)
    assert report.max_modulus_deviation <= 1e-10
    assert report.off_axis_deviation > 0.5


def test_scalar_spectrum_shifted_potential():
    q = MatrixMeasureSpec(1.0, 1, ((0.0, [[2.0]]),), ((0.0, 1.0, [[0.7]]),))
    w = MatrixMeasureSpec.lebesgue(1.0, [[1.0]])
    report = scalar_spectrum(CanonicalSystem.scalar(1.0, q, w), -5.0, 5.0)
    assert report.bands == ((-5.0, 5.0),)
    assert report.max_modulus_deviation <= 1e-10


def test_scalar_errors(scalar_comb, example):
    q = MatrixMeasureSpec.comb(1.0, [[2.0]])
    trivial = CanonicalSystem.scalar(1.0, q, MatrixMeasureSpec.zero(1.0, 1))
    with pytest.raises(TrivialWeightError):
        scalar_spectrum(trivial, -1.0, 1.0)
    with pytest.raises(StructureError):
        scalar_spectrum(example("schrodinger-free"), -1.0, 1.0)
    with pytest.raises(StructureError):
        stability_bands(scalar_comb, -1.0, 1.0)


# -- Green's function --------------------------------------------------------------

@pytest.fixture
def kernel(example):
    return GreensKernel(example("dirac-comb-full", b=1.0), 0.0)


def test_greens_kernel_multipliers(kernel):
    assert kernel.data.multipliers[0] == pytest.approx(3.0)
    assert kernel.data.multipliers[1] == pytest.approx(1.0 / 3.0)
    assert kernel.decay == pytest.approx(math.log(3.0))


def test_greens_normalisation(kernel):
    for x in np.linspace(-4.7, 4.3, 13):
        assert kernel.normalisation_residual(x) <= 1e-10


def test_greens_symmetry(kernel):
    for x, y in [(0.3, 2.6), (-1.2, 0.7), (0.0, 3.0)]:
        assert_allclose(kernel.value(y, x).G, kernel.value(x, y).G.T, atol=1e-12)
    diag = kernel.value(0.0, 0.0).G
    assert_allclose(diag, diag.T, atol=1e-12)
    assert np.all(np.isfinite(diag))


def test_greens_decay(kernel):
    rho = 1.0 / 3.0
    for sign in (1.0, -1.0):
        near = np.linalg.norm(kernel.value(5.0 * sign, 0.0).G)
        far = np.linalg.norm(kernel.value(10.0 * sign, 0.0).G)
        assert far == pytest.approx(rho ** 5 * near, rel=1e-9)


def test_greens_function_on_spectrum(example):
    with pytest.raises(SpectrumError) as info:
        greens_function(example("dirac-comb-scalar-weight"), 3.0, 0.0, 0.0)
    assert info.value.label == BAND_INTERIOR


def test_greens_function_non_definite(example):
    with pytest.raises(HypothesisError):
        greens_function(example("dirac-comb-rank-one"), 1.0j, 0.0, 0.0)


def test_greens_independent_of_multiplier_labels(example, random_system):
    for s, lam in [(example("dirac-comb-full", b=1.0), 0.0), (random_system(3), 0.4 + 0.8j)]:
        kernel = GreensKernel(s, lam)
        raw = multipliers_exponents(s, lam)
        grow, dec = raw.vectors
        swapped = replace(raw, multipliers=raw.multipliers[::-1], exponents=raw.exponents[::-1],
                          vectors=(dec, grow / complex(grow @ s.J @ dec)))
        def psi(which, x, s=s, lam=lam, data=swapped):
            return floquet_solution(s, lam, which, x, data).u_balanced

        for x, y in [(0.3, 2.6), (2.6, 0.3), (-1.2, 0.7), (1.5, -2.0)]:
            # label 1 now decays, label 2 grows
            G = np.outer(psi(1, x), psi(2, y)) if y < x else np.outer(psi(2, x), psi(1, y))
            assert_allclose(G, kernel.value(x, y).G, rtol=1e-9, atol=1e-12)


# -- resolvent -----------------------------------------------------------------------

def _brute_force_comb(s, lam, f, N):
    """u+ at the atoms -N-1..N of an atoms-only comb with the Floquet boundary conditions."""
    M = monodromy(s, lam).M
    vals, vecs = np.linalg.eig(M)
    order = np.argsort(-np.abs(vals))
    grow, decay = vecs[:, order[0]], vecs[:, order[1]]
    size = 2 * (2 * N + 2)
    A = np.zeros((size, size), dtype=complex)
    rhs = np.zeros(size, dtype=complex)

    def col(k):
        return 2 * (k + N + 1)

    row = 0
    for k in range(-N, N + 1):
        dq, dw = s.jumps(float(k))
        b_plus, b_minus = jump_matrices(s.J, dq, dw, lam)
        A[row:row + 2, col(k):col(k) + 2] = b_plus
        A[row:row + 2, col(k - 1):col(k - 1) + 2] = -b_minus
        if k == 0:
            rhs[row:row + 2] = dw @ np.asarray(f, dtype=complex)
        row += 2
    A[row, col(-N - 1)] = grow[1]
    A[row, col(-N - 1) + 1] = -grow[0]
    A[row + 1, col(N)] = decay[1]
    A[row + 1, col(N) + 1] = -decay[0]
    sol = np.linalg.solve(A, rhs)
    return {k: sol[col(k):col(k) + 2] for k in range(-N - 1, N + 1)}


def test_resolvent_matches_linear_system(example):
    s = example("dirac-comb-full", b=1.0)
    out = resolvent_apply(s, 0.0, [(0.0, [1.0, 0.0])], extent=(-10.0, 10.0))
    assert out.max_jump_residual <= 1e-9
    assert out.max_ac_residual <= 1e-9
    expected = _brute_force_comb(s, 0.0, [1.0, 0.0], 12)
    for k in range(-10, 11):
        got = out.at(float(k)).value.u_plus
        assert_allclose(got, expected[k], rtol=1e-9, atol=1e-12)


def test_resolvent_decays(example):
    s = example("dirac-comb-full", b=1.0)
    out = resolvent_apply(s, 0.0, [(0.0, [0.3, -1.0])], extent=(-10.0, 10.0))
    norms = {int(round(smp.x)): np.linalg.norm(smp.value.u_balanced) for smp in out.samples}
    for k in range(1, 9):
        assert norms[k + 1] / norms[k] == pytest.approx(1.0 / 3.0, rel=1e-9)
        assert norms[-k - 1] / norms[-k] == pytest.approx(1.0 / 3.0, rel=1e-9)


def test_resolvent_of_zero_source(example):
    s = example("dirac-comb-full", b=1.0)
    out = resolvent_apply(s, 0.5, [(0.0, [0.0, 0.0])], sample_points=[0.25], extent=(-2.0, 2.0))
    for smp in out.samples:
        assert_allclose(smp.value.u_balanced, [0.0, 0.0])
    assert out.max_jump_residual == 0.0


def test_resolvent_source_off_atom(example):
    with pytest.raises(UsageError):
        resolvent_apply(example("dirac-comb-full", b=1.0), 0.0, [(0.5, [1.0, 0.0])])
