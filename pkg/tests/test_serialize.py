import json

import pytest
from sympy.polys.domains import QQ

from triolex.utils.errors import SchemaError, ShapeError
from triolex.utils.serialize import (
    decode_algebra,
    decode_biderivation,
    decode_connection,
    decode_derivation,
    decode_diffop,
    decode_matrix,
    decode_module,
    decode_morphism,
    decode_op,
    decode_poly,
    dumps,
    encode_algebra,
    encode_biderivation,
    encode_derivation,
    encode_diffop,
    encode_op,
    encode_poly,
    jsonable,
    loads,
    wrap_errors,
)
from triolex.utils.symkernel import PolyDiffOp, ScalarDerivation, poly_ring
from triolex.utils.triolecore import TrioleAlgebra
from triolex.utils.triolederiv import GradedDerivation, TruncatedTriModule
from triolex.utils.triolepoisson import hamiltonian_lift
from triolex.utils.trioledo import TriDiffOp


@pytest.fixture
def R():
    return poly_ring(2)


class TestPolynomials:
    def test_canonical_term_order(self, R):
        x1, x2 = R.gens
        f = x2**2 + QQ(1, 2) * x1 - 3
        assert encode_poly(f) == [
            {"exp": [0, 0], "num": -3, "den": 1},
            {"exp": [1, 0], "num": 1, "den": 2},
            {"exp": [0, 2], "num": 1, "den": 1},
        ]

    def test_zero_is_empty(self, R):
        assert encode_poly(R.zero) == []
        assert decode_poly([], R) == R.zero

    @pytest.mark.parametrize("text, expected", [
        ("x1^2 + 2*x2", lambda x1, x2: x1**2 + 2 * x2),
        ("(x1 - x2)*(x1 + x2)", lambda x1, x2: x1**2 - x2**2),
        ("1/3*x1", lambda x1, x2: QQ(1, 3) * x1),
        ("7", lambda x1, x2: 7),
    ])
    def test_expression_strings(self, R, text, expected):
        assert decode_poly(text, R) == R(expected(*R.gens))

    def test_integer_input(self, R):
        assert decode_poly(-4, R) == R(-4)

    @pytest.mark.parametrize("text", ["y1 + 1", "x1.real", "__import__('os')", "x1 +* 2", "x3"])
    def test_rejected_strings(self, R, text):
        with pytest.raises(SchemaError):
            decode_poly(text, R)

    def test_rejected_terms(self, R):
        with pytest.raises(SchemaError):
            decode_poly([{"exp": [1], "num": 1, "den": 1}], R)
        with pytest.raises(SchemaError):
            decode_poly([{"exp": [1, 0], "num": 1, "den": 0}], R)
        with pytest.raises(SchemaError):
            decode_poly(True, R)

    @pytest.mark.parametrize("term", [
        {"exp": [True, 0], "num": 1, "den": 1},
        {"exp": [0, False], "num": 1, "den": 1},
        {"exp": [1, 0], "num": True, "den": 1},
        {"exp": [1, 0], "num": 1, "den": True},
        {"exp": 1, "num": 1, "den": 1},
    ])
    def test_booleans_are_not_integers(self, R, term):
        with pytest.raises(SchemaError):
            decode_poly([term], R)

    def test_terms_accumulate(self, R):
        data = [{"exp": [1, 0], "num": 1, "den": 2}, {"exp": [1, 0], "num": 1, "den": 2}]
        assert decode_poly(data, R) == R.gens[0]

    def test_matrix_shape(self, R):
        with pytest.raises(SchemaError):
            decode_matrix([[1, 0]], R, 2, 2)
        assert decode_matrix([["x1", 0]], R, 1, 2) == ((R.gens[0], R.zero),)


class TestOperators:
    def test_operator_terms(self, R):
        x1 = R.gens[0]
        op = PolyDiffOp(R, {(2, 0): x1, (0, 0): 1})
        assert encode_op(op) == [
            {"dexp": [0, 0], "coeff": [{"exp": [0, 0], "num": 1, "den": 1}]},
            {"dexp": [2, 0], "coeff": [{"exp": [1, 0], "num": 1, "den": 1}]},
        ]
        assert decode_op([{"dexp": [2, 0], "coeff": "x1"}, {"dexp": [0, 0], "coeff": 1}], R) == op

    def test_bad_derivative_index(self, R):
        with pytest.raises(SchemaError):
            decode_op([{"dexp": [1], "coeff": 1}], R)
        with pytest.raises(SchemaError):
            decode_op([{"dexp": [True, 0], "coeff": 1}], R)

    def test_diffop_defaults(self, plane):
        op = decode_diffop({"degree": 0, "D_A": [{"dexp": [2, 0], "coeff": 1}, {"dexp": [0, 2], "coeff": 1}]}, plane)
        assert op.D_P == op.D_P.scalar(op.D_A, 2)
        assert decode_diffop(encode_diffop(op), plane) == op

    def test_degree_one_diffop(self, plane):
        op = decode_diffop({"degree": 1, "D_A1": [[[{"dexp": [1, 0], "coeff": 1}]], [[]]]}, plane)
        assert op.degree == 1
        assert set(encode_diffop(op)) == {"degree", "D_A1", "D_P1"}

    def test_unsupported_degree(self, plane):
        with pytest.raises(SchemaError):
            decode_diffop({"degree": 3}, plane)


class TestAlgebraObjects:
    def test_identity_metric_default(self):
        alg = decode_algebra({"n_vars": 2, "m_P": 3})
        assert alg == TrioleAlgebra.identity_metric(2, 3)

    def test_identity_default_needs_single_q(self):
        with pytest.raises(SchemaError):
            decode_algebra({"n_vars": 2, "m_P": 3, "m_Q": 2})

    def test_explicit_metric(self, symplectic_plane):
        data = {"n_vars": 2, "m_P": 2, "convention": "koszul", "g": [[[0, 1], [-1, 0]]]}
        assert decode_algebra(data) == symplectic_plane
        assert decode_algebra(encode_algebra(symplectic_plane)) == symplectic_plane

    def test_bad_ranks(self):
        with pytest.raises(SchemaError):
            decode_algebra({"n_vars": 0, "m_P": 1})
        with pytest.raises(SchemaError):
            decode_algebra({"n_vars": 1, "m_P": 1, "m_Q": 2, "g": [[[1]]]})
        with pytest.raises(SchemaError):
            decode_algebra({"n_vars": True, "m_P": 1})

    @pytest.mark.parametrize("data", [
        {"degree": 0, "X_A": ["x2", "-x1"], "G": [[0, 1], [-1, 0]]},
        {"degree": 1, "X_A1": [[1, 0], [0, 1]]},
        {"degree": 1, "X_A1": [[1, 0], [0, 1]], "H": [["x1", 0]]},
        {"degree": 2, "X_A2": [["x1", 0]]},
        {"degree": -1, "phi": [0, 0], "psi": [[0], [0]]},
    ])
    def test_derivations_survive_encoding(self, plane, data):
        X = decode_derivation(data, plane)
        assert X.degree == data["degree"]
        assert decode_derivation(encode_derivation(X), plane) == X

    def test_derivation_degree(self, plane):
        with pytest.raises(SchemaError):
            decode_derivation({"degree": 5}, plane)

    def test_connection_defaults(self, plane):
        C = decode_connection({"Gamma": [[[0, "x2"], ["-x2", 0]], [[0, 0], [0, 0]]]}, plane)
        assert not any(x for m in C.Upsilon for row in m for x in row)
        assert C.Gamma[0][0][1] == plane.ring.gens[1]

    def test_hamiltonian_lift(self, plane):
        Pi = decode_biderivation({"kind": "hamiltonian_lift", "pi": [[0, 1], [-1, 0]]}, plane)
        assert Pi == hamiltonian_lift(plane, ((0, 1), (-1, 0)))
        terms = encode_biderivation(Pi)
        assert terms["degree"] == 0
        assert decode_biderivation(terms, plane) == Pi

    def test_biderivation_axes_are_one_based(self, plane):
        Pi = decode_biderivation({"degree": 2, "terms": [
            {"out": 3, "left": 0, "right": 0, "dl": 1, "dr": 2, "coeff": 1},
        ]}, plane)
        assert list(Pi.terms) == [(3, 0, 0, 0, 1)]
        assert encode_biderivation(Pi)["terms"][0]["dl"] == 1
        with pytest.raises(SchemaError):
            decode_biderivation({"degree": 2, "terms": [
                {"out": 3, "left": 0, "right": 0, "dl": 3, "dr": None, "coeff": 1},
            ]}, plane)

    def test_algebroid_kinds(self, line):
        Pi = decode_biderivation({
            "kind": "degree_minus1",
            "algebroid": {"rank": 1, "anchors": [[1]]},
            "f": [[[2]]],
        }, line)
        assert Pi.degree == -1
        with pytest.raises(SchemaError):
            decode_biderivation({"kind": "degree7"}, line)

    def test_module_self(self, plane):
        assert decode_module({"kind": "self"}, plane) == TruncatedTriModule.from_algebra(plane)

    def test_morphism_target(self, plane):
        psi, target = decode_morphism({"psi1": [[1, 1], [-1, 1]], "psi2": [[2]]}, plane)
        assert target == plane
        assert psi.psi2 == ((plane.ring(2),),)


class TestOutput:
    def test_jsonable(self, R):
        x1 = R.gens[0]
        assert jsonable({"f": x1**2, "r": QQ(1, 2), "t": (1, None)}) == {"f": "x1**2", "r": "1/2", "t": [1, None]}

    def test_dumps_is_canonical(self):
        report = {"valid": True, "b": [1, 2], "a": {"z": 0, "y": "x"}}
        assert dumps(report) == '{"a":{"y":"x","z":0},"b":[1,2],"valid":true}'
        assert json.loads(dumps(report, pretty=True, indent=4)) == report
        assert "\n    " in dumps(report, pretty=True, indent=4)

    def test_loads(self):
        assert loads('{"a": 1}') == {"a": 1}
        with pytest.raises(SchemaError):
            loads("{")
        with pytest.raises(SchemaError):
            loads("[1, 2]")

    def test_wrap_errors(self, plane):
        with pytest.raises(SchemaError):
            wrap_errors(decode_connection, {"Gamma": [[[0, 0], [0, 0]]]}, plane)
        with pytest.raises(SchemaError):
            wrap_errors(decode_derivation, {"degree": 0, "X_A": [0, 0], "G": [[0, 1]]}, plane)
        with pytest.raises(SchemaError):
            wrap_errors(decode_module, {"lam0": []}, plane)
        assert wrap_errors(decode_poly, "x1", plane.ring) == plane.ring.gens[0]

    def test_shape_error_is_not_schema_error(self):
        assert not issubclass(ShapeError, SchemaError)
