import numpy as np
import pytest

from FloqSpec.example_registry import get_example
from FloqSpec.measure_model import CanonicalSystem, MatrixMeasureSpec, validate_system


def _sym(rng, scale):
    a = rng.normal(size=(2, 2)) * scale
    return 0.5 * (a + a.T)


def _psd(rng, scale):
    a = rng.normal(size=(2, 2)) * scale
    return a @ a.T


def _measure(rng, omega, draw, scale):
    n_atoms = int(rng.integers(0, 3))
    atoms = [(p, draw(rng, scale)) for p in np.sort(rng.uniform(0.0, omega, size=n_atoms))]
    cuts = np.sort(rng.uniform(0.0, omega, size=int(rng.integers(0, 3))))
    edges = [0.0, *cuts, omega]
    segments = [(a, b, draw(rng, scale)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    return MatrixMeasureSpec(omega, 2, tuple(atoms), tuple(segments))


def make_random_system(seed):
    """A valid n=2 system: period in [0.5, 2], random atoms and densities."""
    rng = np.random.default_rng(seed)
    while True:
        omega = float(rng.uniform(0.5, 2.0))
        r = float(rng.uniform(1.0, 2.0))
        q = _measure(rng, omega, _sym, 0.5)
        w = _measure(rng, omega, _psd, 0.4)
        system = CanonicalSystem.from_scale(r, q, w)
        if validate_system(system).ok:
            return system


@pytest.fixture
def random_system():
    return make_random_system


@pytest.fixture
def example():
    """example('dirac-comb-full', b=1) -> CanonicalSystem"""
    def build(name, base_point=None, **params):
        return get_example(name).system(params, base_point=base_point)
    return build


@pytest.fixture
def scalar_comb():
    """J = i, q = 2 * comb, w = Lebesgue."""
    q = MatrixMeasureSpec.comb(1.0, [[2.0]])
    w = MatrixMeasureSpec.lebesgue(1.0, [[1.0]])
    return CanonicalSystem.scalar(1.0, q, w)
