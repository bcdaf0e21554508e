import pytest
from sympy.polys.domains import QQ

from triolex.utils.errors import AxisError, OrderError, RingMismatchError
from triolex.utils.symkernel import (
    MatDiffOp,
    PolyDiffOp,
    ScalarDerivation,
    SymbolTensor,
    commutator,
    delta_a,
    delta_tuple,
    derive,
    embed,
    evaluate_on_differential,
    hamiltonian_derivation,
    partial_derivative,
    poly_ring,
    principal_symbol,
    restrict,
    star,
    substitute,
    symbol_normalization_holds,
    symbol_poisson,
    symbol_ring,
    symbol_to_operator,
)


class TestRings:
    def test_generators_are_named(self):
        R = poly_ring(3)
        assert [str(s) for s in R.symbols] == ['x1', 'x2', 'x3']

    def test_rings_are_cached(self):
        assert poly_ring(2) is poly_ring(2)

    def test_empty_ring_rejected(self):
        with pytest.raises(AxisError):
            poly_ring(0)

    def test_partial_derivative_is_one_based(self):
        R = poly_ring(2)
        x1, x2 = R.gens
        assert partial_derivative(x1**2 * x2, 1) == 2 * x1 * x2
        with pytest.raises(AxisError):
            partial_derivative(x1, 3)

    def test_embed_and_restrict(self):
        R, S = poly_ring(2), symbol_ring(2)
        f = R.gens[0] * R.gens[1] + 3
        assert restrict(embed(f, S), R) == f
        with pytest.raises(RingMismatchError):
            restrict(S.gens[2], R)

    def test_substitute(self):
        R = poly_ring(2)
        x1, x2 = R.gens
        assert substitute(x1**2 + x2, [x2, x1 + 1], R) == x2**2 + x1 + 1


class TestScalarDerivation:
    def test_application(self):
        R = poly_ring(2)
        x1, x2 = R.gens
        X = ScalarDerivation(R, (x2, -x1))
        assert X(x1**2 + x2**2) == 0
        assert X(x1) == x2

    def test_bracket_matches_operator_commutator(self, random_poly):
        R = poly_ring(2)
        for _ in range(20):
            X = ScalarDerivation(R, (random_poly(R, 2), random_poly(R, 2)))
            Y = ScalarDerivation(R, (random_poly(R, 2), random_poly(R, 2)))
            assert X.bracket(Y).to_operator() == commutator(X.to_operator(), Y.to_operator())

    def test_round_trip_through_operator(self):
        R = poly_ring(2)
        X = ScalarDerivation(R, (R.gens[1], R(QQ(1, 2))))
        assert X.to_operator().to_derivation() == X

    def test_operator_with_constant_is_not_a_derivation(self):
        R = poly_ring(1)
        with pytest.raises(OrderError):
            (PolyDiffOp.partial(R, 0) + PolyDiffOp.identity(R)).to_derivation()


class TestPolyDiffOp:
    def test_weyl_relation(self):
        R = poly_ring(1)
        d = PolyDiffOp.partial(R, 0)
        x = PolyDiffOp.multiplication(R.gens[0])
        assert commutator(d, x) == PolyDiffOp.identity(R)

    def test_composition_acts_like_sequential_application(self, random_op, random_poly, rng):
        for _ in range(200):
            R = poly_ring(rng.randint(1, 3))
            D, N = random_op(R), random_op(R)
            f = random_poly(R, 4, 4)
            assert (D @ N).apply(f) == D.apply(N.apply(f))

    def test_commutator_drops_order(self, random_op, rng):
        for _ in range(200):
            R = poly_ring(rng.randint(1, 3))
            D, N = random_op(R, order=rng.randint(1, 3)), random_op(R, order=rng.randint(1, 3))
            assert commutator(D, N).order <= max(D.order + N.order - 1, 0)

    def test_iterated_delta_annihilates(self, random_op, random_poly, rng):
        for _ in range(200):
            R = poly_ring(rng.randint(1, 3))
            D = random_op(R)
            fs = [random_poly(R, 2, 2) for _ in range(D.order + 1)]
            assert delta_tuple(D, fs).is_zero

    def test_delta_lowers_order_by_one(self):
        R = poly_ring(2)
        x1, _ = R.gens
        laplacian = PolyDiffOp.partial(R, 0, 2) + PolyDiffOp.partial(R, 1, 2)
        once = delta_a(laplacian, x1)
        assert once.order == 1
        # δ_x1(∂1²) = −2∂1
        assert once == PolyDiffOp.partial(R, 0).left_multiply(-2)

    def test_mixed_rings_rejected(self):
        with pytest.raises(RingMismatchError):
            PolyDiffOp.identity(poly_ring(1)) + PolyDiffOp.identity(poly_ring(2))

    def test_derive_multi_index(self):
        R = poly_ring(2)
        x1, x2 = R.gens
        assert derive(x1**3 * x2**2, (2, 1)) == 12 * x1 * x2


class TestMatDiffOp:
    def test_apply_and_compose(self, random_op, random_poly):
        R = poly_ring(2)
        A = MatDiffOp(R, tuple(tuple(random_op(R, 2, 2, 2) for _ in range(2)) for _ in range(2)))
        B = MatDiffOp(R, tuple(tuple(random_op(R, 2, 2, 2) for _ in range(2)) for _ in range(2)))
        v = (random_poly(R), random_poly(R))
        assert A.compose(B).apply(v) == A.apply(B.apply(v))

    def test_blocks_round_trip(self):
        R = poly_ring(1)
        d = PolyDiffOp.partial(R, 0)
        op = MatDiffOp.from_blocks(R, (1, 2), (1, 2), {(1, 0): MatDiffOp.column([d, d])})
        assert op.shape == (3, 3)
        assert op.block(1, 0, (1, 2), (1, 2)) == MatDiffOp.column([d, d])
        assert op.block(0, 1, (1, 2), (1, 2)).is_zero

    def test_order_zero_part(self):
        R = poly_ring(1)
        x = R.gens[0]
        op = MatDiffOp.scalar(PolyDiffOp.partial(R, 0) + PolyDiffOp.multiplication(x), 2)
        assert op.order_zero_part() == ((x, R.zero), (R.zero, x))


class TestSymbols:
    def test_principal_symbol_of_laplacian(self):
        R, S = poly_ring(2), symbol_ring(2)
        laplacian = PolyDiffOp.partial(R, 0, 2) + PolyDiffOp.partial(R, 1, 2)
        xi1, xi2 = S.gens[2], S.gens[3]
        assert principal_symbol(laplacian, 2).body == xi1**2 + xi2**2

    def test_symbol_below_order_rejected(self):
        R = poly_ring(1)
        with pytest.raises(OrderError):
            principal_symbol(PolyDiffOp.partial(R, 0, 2), 1)

    def test_symbol_of_lower_order_operator_is_zero(self):
        R = poly_ring(1)
        assert principal_symbol(PolyDiffOp.partial(R, 0), 2).is_zero

    def test_non_homogeneous_entry_rejected(self):
        S = symbol_ring(1)
        with pytest.raises(OrderError):
            SymbolTensor.scalar(1, 1, S.gens[1] + S.one)

    def test_symbol_to_operator_recovers_top_part(self, random_op, rng):
        for _ in range(100):
            R = poly_ring(rng.randint(1, 3))
            D = random_op(R)
            k = D.order
            assert symbol_to_operator(principal_symbol(D, k)) == D.homogeneous_part(k)

    def test_star_is_commutative_on_scalars(self, random_op, rng):
        for _ in range(100):
            R = poly_ring(rng.randint(1, 3))
            D, N = random_op(R), random_op(R)
            s, t = principal_symbol(D, D.order), principal_symbol(N, N.order)
            assert star(s, t) == star(t, s)

    def test_star_is_symbol_of_composition(self, random_op, rng):
        for _ in range(100):
            R = poly_ring(rng.randint(1, 3))
            D, N = random_op(R), random_op(R)
            k, l = D.order, N.order
            assert principal_symbol(D @ N, k + l) == star(principal_symbol(D, k), principal_symbol(N, l))

    def test_poisson_bracket_is_symbol_of_commutator(self, random_op, rng):
        for _ in range(100):
            R = poly_ring(rng.randint(1, 3))
            D = random_op(R, order=rng.randint(1, 3))
            N = random_op(R, order=rng.randint(1, 3))
            k, l = max(D.order, 1), max(N.order, 1)
            expected = symbol_poisson(principal_symbol(D, k), principal_symbol(N, l))
            assert principal_symbol(commutator(D, N), k + l - 1) == expected

    def test_hamiltonian_derivation_is_a_derivation_of_star(self):
        S = symbol_ring(1)
        x, xi = S.gens
        h = hamiltonian_derivation(SymbolTensor.scalar(1, 2, xi**2))
        s = SymbolTensor.scalar(1, 1, x * xi)
        t = SymbolTensor.scalar(1, 0, x**2)
        assert h(star(s, t)) == star(h(s), t) + star(s, h(t))

    def test_normalization(self, random_op, random_poly, rng):
        for _ in range(100):
            R = poly_ring(rng.randint(1, 3))
            D = random_op(R)
            assert symbol_normalization_holds(D, random_poly(R, 2, 2), D.order)

    def test_evaluation_on_differential(self):
        R = poly_ring(1)
        x = R.gens[0]
        symbol = principal_symbol(PolyDiffOp.partial(R, 0, 2), 2)
        assert evaluate_on_differential(symbol, x**2) == ((4 * x**2,),)
