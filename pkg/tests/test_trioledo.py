import pytest

from triolex.utils.errors import DegenerateFormError, DegreeError, InvalidOperatorError, OrderError, ShapeError
from triolex.utils.symkernel import MatDiffOp, PolyDiffOp, ScalarDerivation, SymbolTensor, principal_symbol, symbol_ring
from triolex.utils.trioleconn import TriConnection
from triolex.utils.triolecore import TrioleAlgebra, TrioleElement
from triolex.utils.triolederiv import GradedDerivation, TruncatedTriModule
from triolex.utils.trioledo import (
    ModuleDiffOp,
    TriDiffOp,
    atiyah_k_decompose,
    check_symbol_normalization,
    compose,
    composition_report,
    scalar_lift,
    symbol_deg0_tensor,
    symbol_deg1_tensor,
    symbol_deg2_tensor,
    symmetrized_operator,
    tensor_to_operator,
    validate_diffop,
    validate_module_diffop,
)


def d(ring, *powers):
    """∂1^a ∂2^b … as a scalar operator."""
    return PolyDiffOp(ring, {tuple(powers): ring.one})


@pytest.fixture
def laplacian(plane):
    R = plane.ring
    return TriDiffOp.degree0(plane, d(R, 2, 0) + d(R, 0, 2))


@pytest.fixture
def curved(plane):
    x2 = plane.ring.gens[1]
    return TriConnection.build(plane, [((0, x2), (-x2, 0)), ((0, 0), (0, 0))])


class TestTriDiffOp:
    def test_componentwise_defaults(self, laplacian, plane):
        R = plane.ring
        assert laplacian.D_P == MatDiffOp.scalar(laplacian.D_A, 2)
        assert laplacian.order == 2
        x1, x2 = R.gens
        t = TrioleElement.build(plane, x1**2, [x2**2, x1 * x2], [x1**2 * x2])
        assert laplacian.apply(t) == TrioleElement.build(plane, 2, [2, 0], [2 * x2])

    def test_block_pattern_is_enforced(self, plane):
        with pytest.raises(ShapeError):
            TriDiffOp(plane, 1, MatDiffOp.identity(plane.ring, plane.size))
        with pytest.raises(DegreeError):
            TriDiffOp(plane, 3, MatDiffOp.zero(plane.ring, plane.size, plane.size))

    def test_components(self, laplacian, plane):
        assert set(laplacian.components()) == {"D_A", "D_P", "D_Q"}
        op = TriDiffOp.degree1(plane, [d(plane.ring, 1, 0), PolyDiffOp.zero(plane.ring)])
        assert set(op.components()) == {"D_A1", "D_P1"}
        assert set(TriDiffOp.zero(plane, 2).components()) == {"D_A2"}

    def test_composition_degrees(self, plane):
        R = plane.ring
        one = TriDiffOp.degree1(plane, [d(R, 1, 0), PolyDiffOp.zero(R)])
        two = TriDiffOp.degree2(plane, [d(R, 0, 1)])
        assert compose(one, one).degree == 2
        with pytest.raises(DegreeError):
            compose(one, two)

    def test_derivations_are_operators(self, plane):
        X = GradedDerivation.degree1(plane, [ScalarDerivation.partial(plane.ring, 0), ScalarDerivation.zero(plane.ring)])
        op = TriDiffOp.from_derivation(X)
        assert op.degree == 1
        assert validate_diffop(op, plane).valid
        with pytest.raises(DegreeError):
            TriDiffOp.from_derivation(GradedDerivation.zero(plane, -1))


class TestValidation:
    def test_laplacian(self, laplacian, plane):
        assert validate_diffop(laplacian, plane, 2).valid
        assert validate_diffop(laplacian, plane).valid

    def test_order_below_operator(self, laplacian, plane):
        report = validate_diffop(laplacian, plane, 1)
        assert not report.valid
        assert report.witness == {"condition": "order", "delta": []}

    def test_order_zero_rejected(self, laplacian, plane):
        with pytest.raises(OrderError):
            validate_diffop(laplacian, plane, 0)

    def test_mismatched_principal_parts(self, plane):
        R = plane.ring
        op = TriDiffOp.degree0(plane, d(R, 2, 0) + d(R, 0, 2), MatDiffOp.scalar(d(R, 2, 0), 2))
        report = validate_diffop(op, plane, 2)
        assert not report.valid
        assert report.witness == {"condition": "1", "delta": ["x2", "x2"]}

    def test_first_order_part_must_preserve_metric(self, plane):
        R = plane.ring
        lap = d(R, 2, 0) + d(R, 0, 2)
        D_P = MatDiffOp.scalar(lap, 2) + MatDiffOp(R, ((d(R, 1, 0), PolyDiffOp.zero(R)), (PolyDiffOp.zero(R),) * 2))
        report = validate_diffop(TriDiffOp.degree0(plane, lap, D_P), plane, 2)
        assert not report.valid
        assert report.witness["condition"] == "4"

    def test_connection_derivatives(self, curved, plane):
        for i in range(2):
            assert validate_diffop(TriDiffOp.from_derivation(curved.splitting(i, plane)), plane).valid

    def test_twisted_degree_one(self, plane):
        R = plane.ring
        op = TriDiffOp.degree1(plane, [d(R, 2, 0), d(R, 1, 1)])
        assert validate_diffop(op, plane, 2).valid

    def test_missing_twist(self, plane):
        R = plane.ring
        column = MatDiffOp.column([d(R, 2, 0), PolyDiffOp.zero(R)])
        op = TriDiffOp(plane, 1, MatDiffOp.from_blocks(R, plane.blocks, plane.blocks, {(1, 0): column}))
        report = validate_diffop(op, plane, 2)
        assert not report.valid
        assert report.witness == {"condition": "twist", "delta": ["x1", "x1"]}

    def test_composition(self, curved, plane):
        first = TriDiffOp.from_derivation(curved.splitting(0, plane))
        second = TriDiffOp.from_derivation(curved.splitting(1, plane))
        report = composition_report(first, second, plane)
        assert report.valid
        assert report.details['checks'] == {'left': True, 'right': True, 'composite': True}


class TestAtiyah:
    @pytest.mark.parametrize("powers", [(1, 0), (2, 0), (1, 1), (2, 1), (0, 3)])
    def test_zero_connection_splits(self, plane, powers):
        R = plane.ring
        x1 = R.gens[0]
        op = TriDiffOp.degree0(plane, d(R, *powers).left_multiply(x1) + d(R, 0, 1))
        decomposition = atiyah_k_decompose(op, plane)
        assert decomposition.order == max(sum(powers), 1)
        assert decomposition.kernel_P.is_zero and decomposition.kernel_Q.is_zero
        assert decomposition.relation.valid
        assert decomposition.reassemble() == op

    def test_curved_lift(self, laplacian, curved, plane):
        decomposition = atiyah_k_decompose(laplacian, plane, 2, curved)
        assert decomposition.scalar == laplacian.D_A
        assert decomposition.lift == scalar_lift(laplacian.D_A, plane, curved)
        assert decomposition.kernel_P.order == 1
        assert decomposition.kernel_Q.is_zero
        assert decomposition.relation.valid
        assert decomposition.reassemble() == laplacian

    def test_invalid_operator(self, plane):
        R = plane.ring
        op = TriDiffOp.degree0(plane, d(R, 2, 0) + d(R, 0, 2), MatDiffOp.scalar(d(R, 2, 0), 2))
        with pytest.raises(InvalidOperatorError):
            atiyah_k_decompose(op, plane, 2)

    def test_degree_zero_only(self, plane):
        with pytest.raises(DegreeError):
            atiyah_k_decompose(TriDiffOp.zero(plane, 1), plane)


class TestSymbols:
    def test_degree_zero_symbol_drops_constant_part(self, laplacian, plane):
        R = plane.ring
        x1 = R.gens[0]
        symbol = symbol_deg0_tensor(laplacian, plane)
        assert symbol(x1) == GradedDerivation.degree0(plane, ScalarDerivation(R, (-2, 0)))
        assert symbol(x1**2) == GradedDerivation.degree0(plane, ScalarDerivation(R, (-4 * x1, 0)))
        assert not symbol.is_zero()
        with pytest.raises(ShapeError):
            symbol(x1, x1)

    def test_first_order_symbol_is_the_derivation(self, plane):
        R = plane.ring
        x1, x2 = R.gens
        X = GradedDerivation.degree0(plane, ScalarDerivation(R, (x2, -x1)), ((0, 1), (-1, 0)))
        assert symbol_deg0_tensor(TriDiffOp.from_derivation(X), plane)() == X

    def test_degree_one_symbol(self, plane):
        R = plane.ring
        op = TriDiffOp.degree1(plane, [d(R, 2, 0), PolyDiffOp.zero(R)])
        symbol = symbol_deg1_tensor(op, plane, 2)
        expected = GradedDerivation.degree1(plane, [ScalarDerivation(R, (-2, 0)), ScalarDerivation.zero(R)])
        assert symbol(R.gens[0]) == expected
        assert symbol(R.gens[1]) == GradedDerivation.zero(plane, 1)

    def test_degree_one_symbol_is_symmetric(self, plane):
        R = plane.ring
        x1, x2 = R.gens
        op = TriDiffOp.degree1(plane, [d(R, 2, 1), d(R, 0, 3).left_multiply(x1)])
        symbol = symbol_deg1_tensor(op, plane, 3)
        assert symbol(x1, x2) == symbol(x2, x1)
        assert symbol(x1 * x2, x2) == symbol(x2, x1 * x2)

    def test_degree_one_symbol_needs_nondegenerate_metric(self):
        alg = TrioleAlgebra(1, 2, 1, (((1, 0), (0, 0)),))
        R = alg.ring
        op = TriDiffOp.degree1(alg, [d(R, 1), PolyDiffOp.zero(R)])
        with pytest.raises(DegenerateFormError):
            symbol_deg1_tensor(op, alg)

    def test_degree_two_symbol(self, plane):
        R = plane.ring
        op = TriDiffOp.degree2(plane, [d(R, 1, 1) + d(R, 1, 0)])
        symbol = symbol_deg2_tensor(op, plane)
        S = symbol_ring(2)
        assert symbol == SymbolTensor(2, 2, ((S.gens[2] * S.gens[3],),))
        assert tensor_to_operator(symbol) == MatDiffOp.column([d(R, 1, 1)])
        with pytest.raises(DegreeError):
            symbol_deg2_tensor(TriDiffOp.zero(plane, 0), plane)

    def test_symmetrized_operator(self, plane):
        R = plane.ring
        x1 = R.gens[0]
        fields = [ScalarDerivation.partial(R, 0), ScalarDerivation(R, (0, x1))]
        op = symmetrized_operator(fields, (1,))
        S = symbol_ring(2)
        assert principal_symbol(op, 2) == SymbolTensor(2, 2, ((S.gens[0] * S.gens[2] * S.gens[3],),))

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_normalization(self, plane, random_op, k):
        R = plane.ring
        x1, x2 = R.gens
        op = TriDiffOp.degree0(plane, random_op(R, order=k))
        for f in (x1, x1 + x2, x1 * x2 - 2 * x2):
            assert check_symbol_normalization(op, f, k)


class TestModuleOperators:
    def test_operator_on_self(self, laplacian, plane):
        module = TruncatedTriModule.from_algebra(plane)
        op = ModuleDiffOp.from_diffop(laplacian, module)
        assert validate_module_diffop(op, module, plane, 2).valid

    def test_twisted_pair(self, plane):
        R = plane.ring
        module = TruncatedTriModule.from_algebra(plane)
        op = ModuleDiffOp.twisted_pair(module, [d(R, 2, 0), d(R, 0, 1)])
        assert op.degree == 1
        assert validate_module_diffop(op, module, plane, 2).valid

    def test_broken_module_operator(self, plane):
        R = plane.ring
        module = TruncatedTriModule.from_algebra(plane)
        lap = d(R, 2, 0) + d(R, 0, 2)
        broken = TriDiffOp.degree0(plane, lap, MatDiffOp.scalar(lap, 2), MatDiffOp.scalar(d(R, 2, 0), 1))
        report = validate_module_diffop(ModuleDiffOp.from_diffop(broken, module), module, plane, 2)
        assert not report.valid
        assert report.witness["condition"] == "2"

    def test_module_mismatch(self, laplacian, line):
        with pytest.raises(ShapeError):
            ModuleDiffOp.from_diffop(laplacian, TruncatedTriModule.from_algebra(line))
