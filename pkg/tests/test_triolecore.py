import pytest

from triolex.utils.errors import (
    NonUnitDeterminantError,
    RankCapError,
    SchemaError,
    ShapeError,
    SubstitutionError,
)
from triolex.utils.linalg import identity, mat_mul
from triolex.utils.symkernel import poly_ring
from triolex.utils.triolecore import (
    TrioleAlgebra,
    TrioleElement,
    TrioleMorphism,
    base_change,
    base_change_morphism,
    basis_elements,
    convention_for,
    determinant_morphism,
    determinant_triole,
    free_symmetric_triole,
    gauge_act,
    is_nondegenerate,
    lagrangian_classify,
    monomial_elements,
    multiply,
    orthogonal_complement,
    orthogonal_sum,
    restrict_metric,
    sign,
    submodule,
    symmetry_classes,
    triolic_product,
    validate_algebra,
    validate_morphism,
)


def hyperbolic(n_vars, planes):
    """Split metric on 2·planes generators: g(e_2i−1, e_2i) = 1."""
    R = poly_ring(n_vars)
    m = 2 * planes
    block = [[R.zero] * m for _ in range(m)]
    for i in range(planes):
        block[2 * i][2 * i + 1] = block[2 * i + 1][2 * i] = R.one
    return TrioleAlgebra(n_vars, m, 1, (block,), "plain")


class TestSign:
    @pytest.mark.parametrize("convention,i,j,expected", [
        ("plain", 1, 1, 1),
        ("koszul", 1, 1, -1),
        ("koszul", 1, 2, 1),
        ("none", 1, 1, -1),
        ("koszul", 0, 1, 1),
    ])
    def test_sign(self, convention, i, j, expected):
        assert sign(convention, i, j) == expected


class TestTrioleAlgebra:
    def test_identity_metric_is_valid(self, plane):
        report = validate_algebra(plane)
        assert report.valid
        assert report.details['checks'] == {'symmetry': True, 'products': True}

    def test_alternating_metric_is_valid(self, symplectic_plane):
        assert validate_algebra(symplectic_plane).valid

    def test_symmetry_violation_has_witness(self):
        R = poly_ring(1)
        alg = TrioleAlgebra(1, 2, 1, (((R.zero, R.one), (R.zero, R.zero)),), "plain")
        report = validate_algebra(alg)
        assert not report.valid
        assert report.witness == {'check': 'symmetry', 'witness': [1, 2]}

    def test_unknown_convention(self):
        R = poly_ring(1)
        with pytest.raises(SchemaError):
            TrioleAlgebra(1, 1, 1, (((R.one,),),), "weird")

    def test_metric_shape_checked(self):
        R = poly_ring(1)
        with pytest.raises(ShapeError):
            TrioleAlgebra(1, 2, 1, (((R.one,),),))

    def test_products(self, plane):
        R = plane.ring
        x1, x2 = R.gens
        p1 = TrioleElement.build(plane, 0, [x1, 0])
        p2 = TrioleElement.build(plane, 0, [x2, 1])
        q = TrioleElement.build(plane, 0, None, [1])
        assert multiply(p1, p2, plane) == TrioleElement.build(plane, 0, None, [x1 * x2])
        assert multiply(q, q, plane).is_zero
        assert multiply(TrioleElement.build(plane, x2), p1, plane) == p1.scale(x2)

    def test_vector_round_trip(self, plane):
        t = TrioleElement.build(plane, 1, [2, 3], [4])
        assert TrioleElement.from_vector(plane, t.as_vector()) == t

    def test_basis_and_monomials(self, plane):
        assert [label for label, _, _ in basis_elements(plane)] == ['1', 'p1', 'p2', 'q1']
        assert len(monomial_elements(plane, 1)) == 12

    def test_nondegenerate(self, plane):
        R = plane.ring
        assert is_nondegenerate(plane)
        flat = TrioleAlgebra(2, 2, 1, (((R.one, R.zero), (R.zero, R.zero)),))
        assert not is_nondegenerate(flat)


class TestConstructions:
    def test_free_symmetric(self):
        alg = free_symmetric_triole(2, 1)
        assert alg.m_Q == 3
        assert validate_algebra(alg).valid

    def test_orthogonal_sum(self, plane, symplectic_plane):
        total = orthogonal_sum(plane, plane)
        assert total.m_P == 4 and total.convention == 'plain'
        assert validate_algebra(total).valid
        mixed = orthogonal_sum(plane, symplectic_plane)
        assert mixed.convention == 'none'
        assert validate_algebra(mixed).valid

    @pytest.mark.parametrize("left,right,expected", [
        ("plain", "plain", "plain"),
        ("plain", "koszul", "koszul"),
        ("koszul", "plain", "koszul"),
        ("koszul", "koszul", "plain"),
    ])
    def test_product_closure(self, plane, symplectic_plane, left, right, expected):
        pick = {"plain": plane, "koszul": symplectic_plane}
        product = triolic_product(pick[left], pick[right])
        assert product.convention == expected
        assert expected in symmetry_classes(product.g)
        assert validate_algebra(product).valid

    def test_alternating_square_is_symmetric(self, symplectic_plane):
        product = triolic_product(symplectic_plane, symplectic_plane)
        assert convention_for(product.g) == 'plain'

    def test_determinant(self, plane, symplectic_plane):
        for alg in (plane, symplectic_plane):
            det = determinant_triole(alg)
            assert det.m_P == 1
            assert det.g[0][0][0] == alg.ring.one
            assert validate_algebra(det).valid

    def test_determinant_cap(self):
        alg = TrioleAlgebra.identity_metric(1, 3)
        with pytest.raises(RankCapError):
            determinant_triole(alg, cap=2)

    def test_base_change(self):
        R1, R2 = poly_ring(1), poly_ring(2)
        alg = TrioleAlgebra(1, 1, 1, (((R1.gens[0],),),))
        moved = base_change(alg, [R2.gens[1] ** 2])
        assert moved.n_vars == 2
        assert moved.g[0][0][0] == R2.gens[1] ** 2

    def test_base_change_morphism(self):
        R1, R2 = poly_ring(1), poly_ring(2)
        x1, y2 = R1.gens[0], R2.gens[1]
        alg = TrioleAlgebra(1, 1, 1, (((R1.one,),),))
        psi = base_change_morphism(TrioleMorphism(((x1,),), ((x1**2,),)), alg, [y2**2])
        assert psi.psi1 == ((y2**2,),)
        assert psi.psi2 == ((y2**4,),)

    def test_base_change_needs_one_image_per_variable(self, plane):
        R = poly_ring(1)
        with pytest.raises(SubstitutionError):
            base_change(plane, [R.gens[0]])
        with pytest.raises(SubstitutionError):
            base_change(plane, [1, 2])


class TestMorphisms:
    def test_identity_is_isometry(self, plane):
        report = validate_morphism(TrioleMorphism.identity(plane), plane, plane)
        assert report.valid
        assert report.details['classification'] == 'isometry'

    def test_similarity(self, plane):
        psi = TrioleMorphism(((1, 1), (-1, 1)), ((2,),))
        report = validate_morphism(psi, plane, plane)
        assert report.details['classification'] == 'similarity'

    def test_invalid(self, plane):
        psi = TrioleMorphism(((2, 0), (0, 2)), ((1,),))
        report = validate_morphism(psi, plane, plane)
        assert not report.valid
        assert report.witness == [1, 1, 1]

    def test_determinant_functoriality(self, plane):
        psi = TrioleMorphism(((1, 1), (-1, 1)), ((2,),))
        det = determinant_triole(plane)
        det_psi = determinant_morphism(psi, 2, plane.ring)
        assert det_psi.psi1 == ((plane.ring(2),),)
        assert validate_morphism(det_psi, det, det).valid

    def test_gauge_keeps_algebra_valid(self, plane):
        x1 = plane.ring.gens[0]
        moved = gauge_act(((1, x1), (0, 1)), ((1,),), plane)
        assert validate_algebra(moved).valid
        assert moved.g[0][0][1] == -x1

    def test_gauge_needs_unit_determinant(self, plane):
        x1 = plane.ring.gens[0]
        with pytest.raises(NonUnitDeterminantError):
            gauge_act(((x1, 0), (0, 1)), ((1,),), plane)


class TestSubmodules:
    def test_lagrangian(self):
        alg = hyperbolic(1, 1)
        assert lagrangian_classify(submodule(alg, [(1, 0)]), alg) == 'lagrangian'

    def test_sub_lagrangian(self):
        alg = hyperbolic(1, 2)
        assert lagrangian_classify(submodule(alg, [(1, 0, 0, 0)]), alg) == 'sub_lagrangian'

    def test_not_isotropic(self, plane):
        assert lagrangian_classify(submodule(plane, [(1, 0)]), plane) == 'none'

    def test_restrict_metric(self, plane):
        sub = restrict_metric(submodule(plane, [(1, 1)]), plane)
        assert sub.m_P == 1
        assert sub.g[0][0][0] == plane.ring(2)

    def test_orthogonal_complement(self, plane):
        perp = orthogonal_complement(submodule(plane, [(1, 1)]), plane)
        assert perp.rank(plane) == 1
        assert perp.contains((1, -1), plane)
        assert not perp.contains((1, 1), plane)

    def test_complement_of_everything(self, plane):
        perp = orthogonal_complement(submodule(plane, [(1, 0), (0, 1)]), plane)
        assert perp.rank(plane) == 0

    def test_generator_length(self, plane):
        with pytest.raises(ShapeError):
            submodule(plane, [(1, 0, 0)])


@pytest.fixture
def random_algebra(random_poly):
    """Polynomial symmetric metric on m_P generators, m_Q = 1."""
    def make(m=2, n_vars=2):
        R = poly_ring(n_vars)
        block = [[R.zero] * m for _ in range(m)]
        for a in range(m):
            for b in range(a, m):
                block[a][b] = block[b][a] = random_poly(R, 1, 2)
        return TrioleAlgebra(n_vars, m, 1, (block,), "plain")
    return make


@pytest.fixture
def random_element(random_poly):
    def make(alg):
        R = alg.ring
        return TrioleElement.build(
            alg,
            random_poly(R, 2, 2),
            [random_poly(R, 2, 2) for _ in range(alg.m_P)],
            [random_poly(R, 2, 2) for _ in range(alg.m_Q)],
        )
    return make


class TestRandomAlgebras:
    def test_product_is_commutative_and_associative(self, random_algebra, random_element):
        for _ in range(20):
            alg = random_algebra()
            t1, t2, t3 = (random_element(alg) for _ in range(3))
            assert multiply(t1, t2, alg) == multiply(t2, t1, alg)
            assert multiply(multiply(t1, t2, alg), t3, alg) == multiply(t1, multiply(t2, t3, alg), alg)

    def test_gauge_act_is_a_group_action(self, rng, random_algebra, random_unimodular):
        for _ in range(10):
            alg = random_algebra()
            R = alg.ring
            r1, r2 = random_unimodular(R), random_unimodular(R)
            s1, s2 = ((R(rng.choice([1, 2, -3])),),), ((R(rng.choice([1, -1, 3])),),)
            twice = gauge_act(r2, s2, gauge_act(r1, s1, alg))
            assert twice == gauge_act(mat_mul(r2, r1, R), mat_mul(s2, s1, R), alg)
            assert gauge_act(identity(R, 2), identity(R, 1), alg) == alg

    def test_submodule_lies_in_double_complement(self, random_algebra, random_poly):
        for _ in range(10):
            alg = random_algebra(m=3)
            R = alg.ring
            S = submodule(alg, [[random_poly(R, 1, 2) for _ in range(3)]])
            double = orthogonal_complement(orthogonal_complement(S, alg), alg)
            assert S.is_subset(double, alg)
