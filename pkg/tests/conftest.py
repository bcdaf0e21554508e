import random
from pathlib import Path

import pytest
from sympy.polys.domains import QQ

from triolex.utils.config import DEFAULTS
from triolex.utils.symkernel import PolyDiffOp, monomials_up_to, poly_ring
from triolex.utils.triolecore import TrioleAlgebra

FIXTURES = Path(__file__).parent / 'fixtures'


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def random_poly(rng):
    """Random polynomial with a few rational terms of bounded degree."""
    def make(ring, degree=3, terms=3):
        exponents = monomials_up_to(ring.ngens, degree)
        coeffs = {}
        for _ in range(terms):
            mu = rng.choice(exponents)
            coeffs[mu] = coeffs.get(mu, QQ.zero) + QQ(rng.randint(-4, 4), rng.randint(1, 3))
        return ring.from_dict(coeffs) if coeffs else ring.zero
    return make


@pytest.fixture
def random_op(rng, random_poly):
    """Random scalar operator of order at most ``order``."""
    def make(ring, order=3, degree=3, terms=3):
        sigmas = monomials_up_to(ring.ngens, order)
        return PolyDiffOp(ring, {rng.choice(sigmas): random_poly(ring, degree, 2) for _ in range(terms)})
    return make


@pytest.fixture
def random_unimodular(rng, random_poly):
    """Random 2x2 polynomial matrix with a nonzero constant determinant."""
    def make(ring, degree=1):
        r, s = random_poly(ring, degree, 2), random_poly(ring, degree, 2)
        c1, c2 = ring(rng.choice([1, 2, -3])), ring(rng.choice([1, -1, 2]))
        return ((c1 * (1 + r * s), c2 * r), (c1 * s, c2))
    return make


@pytest.fixture
def plane():
    """n = 2, m_P = 2, m_Q = 1 with the identity metric."""
    return TrioleAlgebra.identity_metric(2, 2)


@pytest.fixture
def line():
    return TrioleAlgebra.identity_metric(1, 1)


@pytest.fixture
def symplectic_plane():
    """n = 2 with the alternating metric g(e1, e2) = 1 = −g(e2, e1)."""
    R = poly_ring(2)
    return TrioleAlgebra(2, 2, 1, (((R.zero, R.one), (-R.one, R.zero)),), "koszul")


@pytest.fixture
def default_config():
    return dict(DEFAULTS)


@pytest.fixture
def workspace_path():
    return FIXTURES / 'workspace.json'
