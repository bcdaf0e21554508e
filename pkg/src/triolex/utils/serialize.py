# Copyright 2025 Lucas Zampieri
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Canonical JSON codecs for workspace objects.

Polynomials are term lists ``[{"exp": [...], "num": n, "den": d}]`` in grlex order; on input a
plain integer or an expression string in x1..xn is accepted as well. Operators are term lists
``[{"dexp": [...], "coeff": <poly>}]``.
"""

from __future__ import annotations

import json
import logging
import re
from typing import Any, Dict, List, Optional, Sequence

from sympy import Rational, Symbol
from sympy.parsing.sympy_parser import parse_expr
from sympy.polys.domains import QQ
from sympy.polys.polyerrors import CoercionFailed
from sympy.polys.rings import PolyElement

from triolex.utils.errors import SchemaError, TriolexError
from triolex.utils.symkernel import (
    MatDiffOp,
    PolyDiffOp,
    ScalarDerivation,
    SymbolTensor,
    grlex_key,
    poly_ring,
)
from triolex.utils.triolecore import TrioleAlgebra, TrioleMorphism
from triolex.utils.triolederiv import GradedDerivation, TruncatedTriModule
from triolex.utils.trioleconn import TriConnection
from triolex.utils.triolepoisson import (
    BiDerivation,
    LieAlgebroid,
    degree0,
    degree1,
    degree2,
    degree_minus1,
    degree_minus2,
    hamiltonian_lift,
)
from triolex.utils.trioledo import TriDiffOp

logger = logging.getLogger(__name__)

_EXPRESSION = re.compile(r"^[0-9x+\-*/^() ]*$")


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _require(condition: bool, message: str):
    if not condition:
        raise SchemaError(message)


def encode_poly(f: PolyElement) -> List[Dict[str, Any]]:
    terms = sorted(f.terms(), key=lambda item: grlex_key(item[0]))
    return [
        {"exp": list(m), "num": int(QQ.numer(c)), "den": int(QQ.denom(c))}
        for m, c in terms
    ]


def _parse_expression(text: str, ring):
    _require(bool(_EXPRESSION.match(text)), f"unsupported characters in polynomial {text!r}")
    names = {str(s): Symbol(str(s)) for s in ring.symbols}
    try:
        expr = parse_expr(text.replace("^", "**"), local_dict=names, evaluate=True)
        return ring.from_expr(expr)
    except (SyntaxError, TypeError, ValueError, CoercionFailed) as e:
        raise SchemaError(f"cannot read polynomial {text!r}: {e}") from e


def decode_poly(data: Any, ring) -> PolyElement:
    if isinstance(data, bool):
        raise SchemaError("booleans are not polynomials")
    if isinstance(data, int):
        return ring(data)
    if isinstance(data, str):
        return _parse_expression(data, ring)
    _require(isinstance(data, list), f"polynomial must be a term list, got {type(data).__name__}")
    terms = {}
    for term in data:
        _require(isinstance(term, dict) and {"exp", "num", "den"} <= set(term), f"malformed term {term!r}")
        _require(isinstance(term["exp"], list), f"exponent must be a list in {term!r}")
        exp = tuple(term["exp"])
        _require(len(exp) == ring.ngens and all(_is_int(e) and e >= 0 for e in exp),
                 f"exponent {list(exp)} does not fit {ring.ngens} variables")
        _require(_is_int(term["num"]) and _is_int(term["den"]) and term["den"] > 0,
                 f"malformed coefficient in {term!r}")
        terms[exp] = terms.get(exp, QQ.zero) + QQ(term["num"], term["den"])
    return ring.from_dict(terms) if terms else ring.zero


def encode_matrix(matrix) -> List[List]:
    return [[encode_poly(x) for x in row] for row in matrix]


def decode_matrix(data: Any, ring, rows: Optional[int] = None, cols: Optional[int] = None):
    _require(isinstance(data, list) and all(isinstance(row, list) for row in data), "matrix must be a list of rows")
    if rows is not None:
        _require(len(data) == rows, f"expected {rows} rows, got {len(data)}")
    if cols is not None:
        _require(all(len(row) == cols for row in data), f"expected {cols} columns")
    return tuple(tuple(decode_poly(x, ring) for x in row) for row in data)


def encode_op(op: PolyDiffOp) -> List[Dict[str, Any]]:
    return [{"dexp": list(sigma), "coeff": encode_poly(c)} for sigma, c in op.sorted_terms()]


def decode_op(data: Any, ring) -> PolyDiffOp:
    _require(isinstance(data, list), "operator must be a term list")
    terms = {}
    for term in data:
        _require(isinstance(term, dict) and {"dexp", "coeff"} <= set(term), f"malformed operator term {term!r}")
        _require(isinstance(term["dexp"], list), f"derivative exponent must be a list in {term!r}")
        sigma = tuple(term["dexp"])
        _require(len(sigma) == ring.ngens and all(_is_int(e) and e >= 0 for e in sigma),
                 f"derivative exponent {list(sigma)} does not fit {ring.ngens} variables")
        terms[sigma] = terms.get(sigma, ring.zero) + decode_poly(term["coeff"], ring)
    return PolyDiffOp(ring, terms)


def encode_matop(op: MatDiffOp) -> List[List]:
    return [[encode_op(x) for x in row] for row in op.entries]


def decode_matop(data: Any, ring, rows: Optional[int] = None, cols: Optional[int] = None) -> MatDiffOp:
    _require(isinstance(data, list) and all(isinstance(row, list) for row in data),
             "matrix operator must be a list of rows")
    if rows is not None:
        _require(len(data) == rows, f"expected {rows} operator rows, got {len(data)}")
    if cols is not None:
        _require(all(len(row) == cols for row in data), f"expected {cols} operator columns")
    return MatDiffOp(ring, tuple(tuple(decode_op(x, ring) for x in row) for row in data))


def encode_vectorfield(X: ScalarDerivation) -> List:
    return [encode_poly(c) for c in X.coeffs]


def decode_vectorfield(data: Any, ring) -> ScalarDerivation:
    _require(isinstance(data, list) and len(data) == ring.ngens,
             f"vector field needs {ring.ngens} coefficients")
    return ScalarDerivation(ring, tuple(decode_poly(x, ring) for x in data))


def encode_symbol(s: SymbolTensor) -> Dict[str, Any]:
    return {"k": s.degree_k, "entries": [[encode_poly(x) for x in row] for row in s.entries]}


def encode_algebra(alg: TrioleAlgebra) -> Dict[str, Any]:
    return {
        "n_vars": alg.n_vars,
        "m_P": alg.m_P,
        "m_Q": alg.m_Q,
        "convention": alg.convention,
        "g": [encode_matrix(block) for block in alg.g],
    }


def decode_algebra(data: Any) -> TrioleAlgebra:
    _require(isinstance(data, dict), "algebra must be an object")
    for key in ("n_vars", "m_P"):
        _require(_is_int(data.get(key)) and data[key] >= 1, f"algebra needs a positive integer {key}")
    n, m = data["n_vars"], data["m_P"]
    convention = data.get("convention", "plain")
    if "g" not in data:
        _require(data.get("m_Q", 1) == 1, "the default identity metric needs m_Q = 1")
        return TrioleAlgebra.identity_metric(n, m, convention)
    R = poly_ring(n)
    _require(isinstance(data["g"], list), "g must be a list of matrices")
    mq = data.get("m_Q", len(data["g"]))
    _require(len(data["g"]) == mq, f"g needs {mq} matrices")
    g = tuple(decode_matrix(block, R, m, m) for block in data["g"])
    return TrioleAlgebra(n, m, mq, g, convention)


def encode_derivation(X: GradedDerivation) -> Dict[str, Any]:
    d = X.degree
    if d == 0:
        return {"degree": 0, "X_A": encode_vectorfield(X.X_A), "G": encode_matrix(X.G), "H": encode_matrix(X.H)}
    if d == 1:
        return {"degree": 1, "X_A1": [encode_vectorfield(Y) for Y in X.X_A1], "Xp": encode_matop(X.Xp)}
    if d == 2:
        return {"degree": 2, "X_A2": [encode_vectorfield(Y) for Y in X.X_A2]}
    return {"degree": -1, "phi": [encode_poly(x) for x in X.phi], "psi": encode_matrix(X.psi)}


def decode_derivation(data: Any, alg: TrioleAlgebra) -> GradedDerivation:
    _require(isinstance(data, dict) and "degree" in data, "derivation needs a degree")
    R, d = alg.ring, data["degree"]
    if d == 0:
        G = decode_matrix(data["G"], R, alg.m_P, alg.m_P) if "G" in data else None
        H = decode_matrix(data["H"], R, alg.m_Q, alg.m_Q) if "H" in data else None
        return GradedDerivation.degree0(alg, decode_vectorfield(data.get("X_A"), R), G, H)
    if d == 1:
        fields = [decode_vectorfield(Y, R) for Y in data.get("X_A1", [])]
        if "Xp" in data:
            return GradedDerivation(alg, 1, X_A1=tuple(fields),
                                    Xp=decode_matop(data["Xp"], R, alg.m_Q, alg.m_P))
        H = decode_matrix(data["H"], R, alg.m_Q, alg.m_P) if "H" in data else None
        return GradedDerivation.degree1(alg, fields, H)
    if d == 2:
        return GradedDerivation.degree2(alg, [decode_vectorfield(Y, R) for Y in data.get("X_A2", [])])
    if d == -1:
        _require(isinstance(data.get("phi"), list), "degree −1 derivation needs phi")
        phi = [decode_poly(x, R) for x in data["phi"]]
        return GradedDerivation.degree_minus1(alg, phi, decode_matrix(data.get("psi"), R, alg.m_P, alg.m_Q))
    raise SchemaError(f"unsupported derivation degree {d!r}")


def encode_connection(C: TriConnection) -> Dict[str, Any]:
    return {"Gamma": [encode_matrix(m) for m in C.Gamma], "Upsilon": [encode_matrix(m) for m in C.Upsilon]}


def decode_connection(data: Any, alg: TrioleAlgebra) -> TriConnection:
    _require(isinstance(data, dict), "connection must be an object")
    R = alg.ring
    Gamma = [decode_matrix(m, R, alg.m_P, alg.m_P) for m in data["Gamma"]] if "Gamma" in data else None
    Upsilon = [decode_matrix(m, R, alg.m_Q, alg.m_Q) for m in data["Upsilon"]] if "Upsilon" in data else None
    return TriConnection.build(alg, Gamma, Upsilon)


def _axis_out(x: Optional[int]) -> Optional[int]:
    return None if x is None else x + 1


def _axis_in(x: Any, n: int) -> Optional[int]:
    if x is None:
        return None
    _require(_is_int(x) and 1 <= x <= n, f"derivative axis {x!r} out of range")
    return x - 1


def encode_biderivation(Pi: BiDerivation) -> Dict[str, Any]:
    return {
        "degree": Pi.degree,
        "terms": [
            {"out": o, "left": c1, "right": c2, "dl": _axis_out(s), "dr": _axis_out(t), "coeff": encode_poly(k)}
            for (o, c1, c2, s, t), k in Pi.sorted_terms()
        ],
    }


def encode_algebroid(L: LieAlgebroid) -> Dict[str, Any]:
    return {
        "rank": L.rank,
        "c": [encode_matrix(m) for m in L.c],
        "anchors": [encode_vectorfield(X) for X in L.anchors],
    }


def decode_algebroid(data: Any, n_vars: int) -> LieAlgebroid:
    _require(isinstance(data, dict), "algebroid must be an object")
    R = poly_ring(n_vars)
    if data.get("kind") == "tangent":
        return LieAlgebroid.tangent(n_vars)
    rank = data.get("rank")
    _require(_is_int(rank) and rank >= 1, "algebroid needs a positive rank")
    if "c" in data:
        c = [decode_matrix(m, R, rank, rank) for m in data["c"]]
    else:
        c = [[[0] * rank for _ in range(rank)] for _ in range(rank)]
    anchors = [decode_vectorfield(X, R) for X in data.get("anchors", [[0] * n_vars] * rank)]
    return LieAlgebroid(n_vars, rank, c, tuple(anchors))


def decode_biderivation(data: Any, alg: TrioleAlgebra) -> BiDerivation:
    _require(isinstance(data, dict), "bi-derivation must be an object")
    R, n = alg.ring, alg.n_vars
    kind = data.get("kind", "terms")
    if kind == "hamiltonian_lift":
        return hamiltonian_lift(alg, decode_matrix(data["pi"], R, n, n))
    if kind == "degree0":
        ap = [decode_matrix(m, R, alg.m_P, alg.m_P) for m in data["ap"]] if "ap" in data else None
        aq = [decode_matrix(m, R, alg.m_Q, alg.m_Q) for m in data["aq"]] if "aq" in data else None
        pp = {}
        for term in data.get("pp", []):
            key = (term["C"] - 1, term["alpha"] - 1, term["beta"] - 1,
                   _axis_in(term.get("dl"), n), _axis_in(term.get("dr"), n))
            pp[key] = decode_poly(term["coeff"], R)
        return degree0(alg, decode_matrix(data["pi"], R, n, n), ap, aq, pp)
    if kind == "degree1":
        H = [decode_matrix(m, R, alg.m_Q, alg.m_P) for m in data["H"]] if "H" in data else None
        return degree1(alg, [decode_matrix(m, R, n, n) for m in data["pis"]], H)
    if kind == "degree2":
        return degree2(alg, [decode_matrix(m, R, n, n) for m in data["pis"]])
    if kind == "degree_minus1":
        f = [decode_matrix(m, R, alg.m_P, alg.m_Q) for m in data["f"]] if "f" in data else None
        N = [decode_matrix(m, R, alg.m_Q, alg.m_Q) for m in data["N"]] if "N" in data else None
        return degree_minus1(alg, decode_algebroid(data["algebroid"], n), f, N)
    if kind == "degree_minus2":
        return degree_minus2(alg, decode_algebroid(data["algebroid"], n))
    _require(kind == "terms", f"unknown bi-derivation kind {kind!r}")
    _require(_is_int(data.get("degree")), "bi-derivation needs an integer degree")
    terms = {}
    for term in data.get("terms", []):
        _require(isinstance(term, dict), f"malformed bi-derivation term {term!r}")
        key = (term["out"], term["left"], term["right"], _axis_in(term.get("dl"), n), _axis_in(term.get("dr"), n))
        terms[key] = terms.get(key, R.zero) + decode_poly(term["coeff"], R)
    return BiDerivation(alg, data["degree"], terms)


def encode_diffop(op: TriDiffOp) -> Dict[str, Any]:
    out: Dict[str, Any] = {"degree": op.degree}
    for name, part in op.components().items():
        out[name] = encode_op(part) if isinstance(part, PolyDiffOp) else encode_matop(part)
    return out


def decode_diffop(data: Any, alg: TrioleAlgebra) -> TriDiffOp:
    _require(isinstance(data, dict) and "degree" in data, "operator needs a degree")
    R, d = alg.ring, data["degree"]
    if d == 0:
        D_A = decode_op(data["D_A"], R)
        D_P = decode_matop(data["D_P"], R, alg.m_P, alg.m_P) if "D_P" in data else None
        D_Q = decode_matop(data["D_Q"], R, alg.m_Q, alg.m_Q) if "D_Q" in data else None
        return TriDiffOp.degree0(alg, D_A, D_P, D_Q)
    if d == 1:
        column = decode_matop(data["D_A1"], R, alg.m_P, 1)
        D_P1 = decode_matop(data["D_P1"], R, alg.m_Q, alg.m_P) if "D_P1" in data else None
        return TriDiffOp.degree1(alg, [row[0] for row in column.entries], D_P1)
    if d == 2:
        column = decode_matop(data["D_A2"], R, alg.m_Q, 1)
        return TriDiffOp.degree2(alg, [row[0] for row in column.entries])
    raise SchemaError(f"unsupported operator degree {d!r}")


def encode_module(module: TruncatedTriModule) -> Dict[str, Any]:
    return {
        "r0": module.r0,
        "r1": module.r1,
        "r2": module.r2,
        "lam0": [encode_matrix(m) for m in module.lam0],
        "lam1": [encode_matrix(m) for m in module.lam1],
        "nu": [encode_matrix(m) for m in module.nu],
    }


def decode_module(data: Any, alg: TrioleAlgebra) -> TruncatedTriModule:
    _require(isinstance(data, dict), "module must be an object")
    if data.get("kind") == "self":
        return TruncatedTriModule.from_algebra(alg)
    R = alg.ring
    arrays = {name: [decode_matrix(m, R) for m in data[name]] for name in ("lam0", "lam1", "nu")}
    return TruncatedTriModule(alg, data["r0"], data["r1"], data["r2"], arrays["lam0"], arrays["lam1"], arrays["nu"])


def decode_morphism(data: Any, alg: TrioleAlgebra):
    """(morphism, target algebra); the target defaults to the source."""
    _require(isinstance(data, dict) and {"psi1", "psi2"} <= set(data), "morphism needs psi1 and psi2")
    target = decode_algebra(data["target"]) if "target" in data else alg
    R = alg.ring
    psi = TrioleMorphism(decode_matrix(data["psi1"], R, target.m_P, alg.m_P),
                         decode_matrix(data["psi2"], R, target.m_Q, alg.m_Q))
    return psi, target


def encode_morphism(psi: TrioleMorphism, target: Optional[TrioleAlgebra] = None) -> Dict[str, Any]:
    out = {"psi1": encode_matrix(psi.psi1), "psi2": encode_matrix(psi.psi2)}
    if target is not None:
        out["target"] = encode_algebra(target)
    return out


def jsonable(value: Any) -> Any:
    """Reports may carry ring elements; render those as expression strings."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, PolyElement):
        return str(value.as_expr())
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    if isinstance(value, Rational):
        return str(value)
    try:
        return str(QQ.to_sympy(QQ.convert(value)))
    except (CoercionFailed, TypeError, ValueError):
        return str(value)


def dumps(report: Dict[str, Any], pretty: bool = False, indent: int = 2) -> str:
    """Canonical JSON: sorted keys, compact separators unless ``pretty``."""
    if pretty:
        return json.dumps(jsonable(report), sort_keys=True, indent=indent, ensure_ascii=False)
    return json.dumps(jsonable(report), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def loads(text: str) -> Dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"malformed JSON: {e}") from e
    _require(isinstance(data, dict), "workspace must be a JSON object")
    return data


def wrap_errors(fn, *args):
    """Run a decoder, reporting structural mistakes as schema errors."""
    try:
        return fn(*args)
    except SchemaError:
        raise
    except (KeyError, IndexError, TypeError) as e:
        raise SchemaError(f"malformed object: {e}") from e
    except TriolexError as e:
        raise SchemaError(str(e)) from e
