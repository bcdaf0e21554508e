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

"""Graded differential operators of a triole algebra, their Atiyah decomposition and symbols.

An operator of degree 0, 1 or 2 is stored as its N×N block operator on (a, p, q):
degree 0 fills the diagonal blocks, degree 1 the blocks A → P and P → Q, degree 2 the block A → Q.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations, product
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ

from triolex.utils.errors import DegenerateFormError, DegreeError, InvalidOperatorError, OrderError, ShapeError
from triolex.utils.report import Report, combine
from triolex.utils.symkernel import (
    MatDiffOp,
    PolyDiffOp,
    ScalarDerivation,
    SymbolTensor,
    delta_tuple,
    monomial,
    monomials_up_to,
    principal_symbol,
    symbol_normalization_holds,
    symbol_to_operator,
)
from triolex.utils.triolecore import TrioleAlgebra, TrioleElement, is_nondegenerate, sign
from triolex.utils.triolederiv import (
    GradedDerivation,
    ModuleElement,
    TruncatedTriModule,
    metric_twist,
)
from triolex.utils.trioleconn import TriConnection

logger = logging.getLogger(__name__)

DO_DEGREES = (0, 1, 2)
ALLOWED_BLOCKS = {0: {(0, 0), (1, 1), (2, 2)}, 1: {(1, 0), (2, 1)}, 2: {(2, 0)}}


def _check_pattern(op: MatDiffOp, degree: int, row_sizes, col_sizes):
    for bi, bj in product(range(3), repeat=2):
        if (bi, bj) not in ALLOWED_BLOCKS[degree] and not op.block(bi, bj, row_sizes, col_sizes).is_zero:
            raise ShapeError(f"degree {degree} operator has a nonzero block {(bi, bj)}")


@dataclass(frozen=True, eq=False)
class TriDiffOp:
    alg: TrioleAlgebra
    degree: int
    block: MatDiffOp

    def __post_init__(self):
        if self.degree not in DO_DEGREES:
            raise DegreeError(f"no triolic differential operators of degree {self.degree}")
        size = self.alg.size
        if self.block.shape != (size, size):
            raise ShapeError(f"block operator must be {size}x{size}, got {self.block.shape}")
        _check_pattern(self.block, self.degree, self.alg.blocks, self.alg.blocks)

    @classmethod
    def degree0(cls, alg: TrioleAlgebra, D_A: PolyDiffOp, D_P: Optional[MatDiffOp] = None,
                D_Q: Optional[MatDiffOp] = None) -> "TriDiffOp":
        """Missing module components default to D_A acting componentwise."""
        D_P = D_P if D_P is not None else MatDiffOp.scalar(D_A, alg.m_P)
        D_Q = D_Q if D_Q is not None else MatDiffOp.scalar(D_A, alg.m_Q)
        blocks = {(0, 0): MatDiffOp(alg.ring, ((D_A,),)), (1, 1): D_P, (2, 2): D_Q}
        return cls(alg, 0, MatDiffOp.from_blocks(alg.ring, alg.blocks, alg.blocks, blocks))

    @classmethod
    def degree1(cls, alg: TrioleAlgebra, D_A1: Sequence[PolyDiffOp], D_P1: Optional[MatDiffOp] = None) -> "TriDiffOp":
        """D_P1 defaults to the metric twist D_P1(p)^C = Σ g^C_{αβ} D_A1^α(p^β)."""
        R = alg.ring
        if len(D_A1) != alg.m_P:
            raise ShapeError(f"D_A1 needs {alg.m_P} entries")
        if D_P1 is None:
            D_P1 = MatDiffOp(R, tuple(
                tuple(
                    sum((D_A1[a].left_multiply(block[a][b]) for a in range(alg.m_P) if block[a][b]),
                        PolyDiffOp.zero(R))
                    for b in range(alg.m_P)
                )
                for block in alg.g
            ))
        blocks = {(1, 0): MatDiffOp.column(list(D_A1)), (2, 1): D_P1}
        return cls(alg, 1, MatDiffOp.from_blocks(R, alg.blocks, alg.blocks, blocks))

    @classmethod
    def degree2(cls, alg: TrioleAlgebra, D_A2: Sequence[PolyDiffOp]) -> "TriDiffOp":
        if len(D_A2) != alg.m_Q:
            raise ShapeError(f"D_A2 needs {alg.m_Q} entries")
        blocks = {(2, 0): MatDiffOp.column(list(D_A2))}
        return cls(alg, 2, MatDiffOp.from_blocks(alg.ring, alg.blocks, alg.blocks, blocks))

    @classmethod
    def from_derivation(cls, X: GradedDerivation) -> "TriDiffOp":
        """A graded derivation of degree 0, 1 or 2 as a first-order operator."""
        if X.degree not in DO_DEGREES:
            raise DegreeError(f"degree {X.degree} derivations are not differential operators of degree ≥ 0")
        return cls(X.alg, X.degree, X.block)

    @classmethod
    def zero(cls, alg: TrioleAlgebra, degree: int = 0) -> "TriDiffOp":
        return cls(alg, degree, MatDiffOp.zero(alg.ring, alg.size, alg.size))

    def part(self, bi: int, bj: int) -> MatDiffOp:
        return self.block.block(bi, bj, self.alg.blocks, self.alg.blocks)

    @property
    def D_A(self) -> PolyDiffOp:
        return self.part(0, 0).entry(0, 0)

    @property
    def D_P(self) -> MatDiffOp:
        return self.part(1, 1)

    @property
    def D_Q(self) -> MatDiffOp:
        return self.part(2, 2)

    @property
    def D_A1(self) -> MatDiffOp:
        return self.part(1, 0)

    @property
    def D_P1(self) -> MatDiffOp:
        return self.part(2, 1)

    @property
    def D_A2(self) -> MatDiffOp:
        return self.part(2, 0)

    def components(self) -> Dict[str, object]:
        if self.degree == 0:
            return {"D_A": self.D_A, "D_P": self.D_P, "D_Q": self.D_Q}
        if self.degree == 1:
            return {"D_A1": self.D_A1, "D_P1": self.D_P1}
        return {"D_A2": self.D_A2}

    @property
    def order(self) -> int:
        return self.block.order

    def apply(self, t: TrioleElement) -> TrioleElement:
        return TrioleElement.from_vector(self.alg, self.block.apply(t.as_vector()))

    def __add__(self, other: "TriDiffOp") -> "TriDiffOp":
        if other.degree != self.degree:
            raise DegreeError("can only add operators of the same degree")
        return TriDiffOp(self.alg, self.degree, self.block + other.block)

    def __sub__(self, other: "TriDiffOp") -> "TriDiffOp":
        if other.degree != self.degree:
            raise DegreeError("can only subtract operators of the same degree")
        return TriDiffOp(self.alg, self.degree, self.block - other.block)

    def __eq__(self, other):
        if not isinstance(other, TriDiffOp):
            return NotImplemented
        return (self.alg, self.degree, self.block) == (other.alg, other.degree, other.block)

    def __hash__(self):
        return hash((self.degree, self.block))

    def __repr__(self):
        return f"TriDiffOp(degree={self.degree}, order={self.order})"


def compose(delta: TriDiffOp, nabla: TriDiffOp) -> TriDiffOp:
    """Δ ∘ ∇ of degree |Δ| + |∇| ≤ 2."""
    d = delta.degree + nabla.degree
    if d > 2:
        raise DegreeError(f"composition of degrees {delta.degree} and {nabla.degree} leaves the grading")
    if delta.alg != nabla.alg:
        raise ShapeError("operators belong to different algebras")
    return TriDiffOp(delta.alg, d, delta.block.compose(nabla.block))


def _label(f) -> str:
    return str(f.as_expr())


def coordinate_tuples(ring, size: int) -> List[tuple]:
    """Multisets of coordinate functions; they polarize δ_a^k for top-order identities."""
    return list(combinations_with_replacement(ring.gens, size))


def monomial_tuples(ring, size: int) -> List[tuple]:
    """Multisets of monomials of degree 1 and 2.

    After k−1 commutators with functions an order-k operator differentiates each function at most
    twice, so these tuples polarize the lower-order identities.
    """
    pool = [monomial(ring, mu) for mu in monomials_up_to(ring.ngens, 2) if any(mu)]
    return list(combinations_with_replacement(pool, size))


def _p_tests(alg: TrioleAlgebra) -> List[Tuple[str, tuple]]:
    R = alg.ring
    out = []
    for mu in monomials_up_to(alg.n_vars, 1):
        m = monomial(R, mu)
        prefix = "" if not any(mu) else f"{_label(m)}*"
        for a in range(alg.m_P):
            out.append((f"{prefix}p{a + 1}", tuple(m if b == a else R.zero for b in range(alg.m_P))))
    return out


def _fail(condition: str, fs, message: str, args=None) -> Report:
    witness = {"condition": condition, "delta": [_label(f) for f in fs]}
    if args:
        witness["args"] = list(args)
    return Report.fail(witness, message)


def _default_order(op: TriDiffOp, k: Optional[int]) -> int:
    return max(op.order, 1) if k is None else k


def _compat_failure(E_A: PolyDiffOp, E_P: MatDiffOp, E_Q: MatDiffOp, alg: TrioleAlgebra):
    """First (p0, p1) where E_Q g(p0, p1) ≠ g(E_P p0, p1) + g(p0, E_P p1) − g(p0, p1)·E_A(1)."""
    one = E_A.apply(alg.ring.one)
    for (l0, p0), (l1, p1) in product(_p_tests(alg), repeat=2):
        q = alg.pair(p0, p1)
        lhs = E_Q.apply(q)
        first, second = alg.pair(E_P.apply(p0), p1), alg.pair(p0, E_P.apply(p1))
        rhs = tuple(x + y - one * z for x, y, z in zip(first, second, q))
        if lhs != rhs:
            return [l0, l1]
    return None


def _degree0_report(op: TriDiffOp, alg: TrioleAlgebra, k: int) -> Report:
    R = alg.ring
    D_A, D_P, D_Q = op.D_A, op.D_P, op.D_Q
    for fs in coordinate_tuples(R, k):
        E_A = delta_tuple(D_A, fs)
        E_P, E_Q = delta_tuple(D_P, fs), delta_tuple(D_Q, fs)
        if E_P != MatDiffOp.scalar(E_A, alg.m_P):
            return _fail("1", fs, "δ^k(D_P) ≠ δ^k(D_A)·1_P")
        if E_Q != MatDiffOp.scalar(E_A, alg.m_Q):
            return _fail("2", fs, "δ^k(D_Q) ≠ δ^k(D_A)·1_Q")
        MP, MQ = E_P.order_zero_part(), E_Q.order_zero_part()
        for C, a, b in product(range(alg.m_Q), range(alg.m_P), range(alg.m_P)):
            lhs = sum((alg.g[C][a][c] * MP[c][b] for c in range(alg.m_P)), R.zero)
            rhs = sum((MQ[C][B] * alg.g[B][a][b] for B in range(alg.m_Q)), R.zero)
            if lhs != rhs:
                return _fail("3", fs, "g(p0, δ^k(D_P)p1) ≠ δ^k(D_Q)g(p0, p1)", [C + 1, a + 1, b + 1])
    for fs in monomial_tuples(R, k - 1):
        args = _compat_failure(delta_tuple(D_A, fs), delta_tuple(D_P, fs), delta_tuple(D_Q, fs), alg)
        if args:
            return _fail("4", fs, "metric compatibility of δ^{k−1}Δ fails", args)
    return Report.ok()


def _degree1_report(op: TriDiffOp, alg: TrioleAlgebra, k: int) -> Report:
    R = alg.ring
    for fs in coordinate_tuples(R, k):
        s = [row[0] for row in delta_tuple(op.D_A1, fs).order_zero_part()]
        if delta_tuple(op.D_P1, fs) != MatDiffOp.from_matrix(R, metric_twist(alg, s)):
            return _fail("twist", fs, "g♯∘smbl_k(D_A1) ≠ smbl_k(D_P1)")
    return Report.ok()


def validate_diffop(op: TriDiffOp, alg: TrioleAlgebra, k: Optional[int] = None) -> Report:
    """Relations of a triolic differential operator of order ``k`` (default: its order, at least 1)."""
    if op.alg != alg:
        raise ShapeError("operator belongs to a different algebra")
    k = _default_order(op, k)
    if k < 1:
        raise OrderError("triolic operators are validated at order 1 or above")
    if op.order > k:
        return Report.fail({"condition": "order", "delta": []}, f"operator has order {op.order} > {k}")
    if op.degree == 0:
        return _degree0_report(op, alg, k)
    if op.degree == 1:
        return _degree1_report(op, alg, k)
    return Report.ok()


def scalar_lift(D_A: PolyDiffOp, alg: TrioleAlgebra, connection: Optional[TriConnection] = None) -> TriDiffOp:
    """Σ c_σ ∂^σ ↦ Σ c_σ ∇^σ with ∇_i the splitting derivations of ``connection`` (zero by default)."""
    connection = connection if connection is not None else TriConnection.build(alg)
    R = alg.ring
    splits = [TriDiffOp.from_derivation(connection.splitting(i, alg)).block for i in range(alg.n_vars)]
    total = MatDiffOp.zero(R, alg.size, alg.size)
    for sigma, c in D_A.sorted_terms():
        term = MatDiffOp.identity(R, alg.size)
        for i, e in enumerate(sigma):
            for _ in range(e):
                term = term.compose(splits[i])
        total = total + term.left_multiply(c)
    return TriDiffOp(alg, 0, total)


@dataclass(frozen=True)
class AtiyahDecomposition:
    """Δ = lift(scalar) + (0, kernel_P, kernel_Q)."""

    order: int
    scalar: PolyDiffOp
    lift: TriDiffOp
    kernel_P: MatDiffOp
    kernel_Q: MatDiffOp
    relation: Report

    def kernel(self) -> TriDiffOp:
        return TriDiffOp.degree0(self.lift.alg, PolyDiffOp.zero(self.lift.alg.ring), self.kernel_P, self.kernel_Q)

    def reassemble(self) -> TriDiffOp:
        return self.lift + self.kernel()


def atiyah_k_decompose(op: TriDiffOp, alg: TrioleAlgebra, k: Optional[int] = None,
                       connection: Optional[TriConnection] = None) -> AtiyahDecomposition:
    """Split a degree-0 operator into its scalar part and an element of the kernel of the projection.

    The lift of the scalar part uses ``connection``; the zero connection splits the sequence when g
    is constant.
    """
    if op.degree != 0:
        raise DegreeError("the Atiyah sequence is stated for degree 0 operators")
    k = _default_order(op, k)
    report = validate_diffop(op, alg, k)
    if not report.valid:
        raise InvalidOperatorError(f"not a triolic operator of order {k}: {report.message}")
    lift = scalar_lift(op.D_A, alg, connection)
    rest = op - lift
    kernel_P, kernel_Q = rest.D_P, rest.D_Q
    if kernel_P.order > k - 1 or kernel_Q.order > k - 1:
        relation = Report.fail({"condition": "order", "delta": []}, "kernel part is not of order k−1")
    else:
        relation = Report.ok()
        for fs in monomial_tuples(alg.ring, k - 1):
            args = _compat_failure(PolyDiffOp.zero(alg.ring), delta_tuple(kernel_P, fs), delta_tuple(kernel_Q, fs), alg)
            if args:
                relation = _fail("g-relation", fs, "kernel pair does not preserve g", args)
                break
    logger.debug(f"Atiyah decomposition at order {k}: kernel orders {kernel_P.order}, {kernel_Q.order}")
    return AtiyahDecomposition(k, op.D_A, lift, kernel_P, kernel_Q, relation)


@dataclass(frozen=True)
class DegreeZeroSymbol:
    """(f_1..f_{k−1}) ↦ the Der-pair (δ_{f..}D_P, δ_{f..}D_Q) with the constant term of δ_{f..}D_A removed."""

    op: TriDiffOp
    order: int

    def __call__(self, *functions) -> GradedDerivation:
        alg = self.op.alg
        if len(functions) != self.order - 1:
            raise ShapeError(f"the order-{self.order} symbol takes {self.order - 1} functions")
        fs = [alg.ring(f) for f in functions]
        E_A = delta_tuple(self.op.D_A, fs)
        c = E_A.constant_term()
        X = E_A.without_constant_term().to_derivation()
        lift = X.to_operator() + PolyDiffOp.multiplication(c) if c else X.to_operator()
        G = (delta_tuple(self.op.D_P, fs) - MatDiffOp.scalar(lift, alg.m_P))
        H = (delta_tuple(self.op.D_Q, fs) - MatDiffOp.scalar(lift, alg.m_Q))
        if G.order or H.order:
            raise InvalidOperatorError("components do not share their scalar symbol")
        return GradedDerivation.degree0(alg, X, G.order_zero_part(), H.order_zero_part())

    def is_zero(self) -> bool:
        alg = self.op.alg
        zero = GradedDerivation.zero(alg, 0)
        return all(self(*fs) == zero for fs in monomial_tuples(alg.ring, self.order - 1))


def symbol_deg0_tensor(op: TriDiffOp, alg: TrioleAlgebra, k: Optional[int] = None) -> DegreeZeroSymbol:
    if op.degree != 0:
        raise DegreeError("degree 0 operator required")
    k = _default_order(op, k)
    report = validate_diffop(op, alg, k)
    if not report.valid:
        raise InvalidOperatorError(f"not a triolic operator of order {k}: {report.message}")
    return DegreeZeroSymbol(op, k)


@dataclass(frozen=True)
class DegreeOneSymbol:
    """(a_1..a_{k−1}) ↦ δ_{a..}D_P1 as a degree-1 derivation (twisted Der-operator P → Q)."""

    op: TriDiffOp
    order: int

    def __call__(self, *functions) -> GradedDerivation:
        alg = self.op.alg
        R = alg.ring
        if len(functions) != self.order - 1:
            raise ShapeError(f"the order-{self.order} symbol takes {self.order - 1} functions")
        fs = [R(f) for f in functions]
        E_A = delta_tuple(self.op.D_A1, fs)
        fields = [E_A.entry(a, 0).without_constant_term().to_derivation() for a in range(alg.m_P)]
        c = [E_A.entry(a, 0).constant_term() for a in range(alg.m_P)]
        twisted = GradedDerivation.degree1(alg, fields)
        rest = delta_tuple(self.op.D_P1, fs) - twisted.Xp - MatDiffOp.from_matrix(R, metric_twist(alg, c))
        if rest.order:
            raise InvalidOperatorError("D_P1 does not carry the twisted symbol of D_A1")
        return GradedDerivation.degree1(alg, fields, rest.order_zero_part())

    def is_zero(self) -> bool:
        alg = self.op.alg
        zero = GradedDerivation.zero(alg, 1)
        return all(self(*fs) == zero for fs in monomial_tuples(alg.ring, self.order - 1))


def symbol_deg1_tensor(op: TriDiffOp, alg: TrioleAlgebra, k: Optional[int] = None) -> DegreeOneSymbol:
    """Symmetric in its arguments, as δ's with functions commute."""
    if op.degree != 1:
        raise DegreeError("degree 1 operator required")
    if not is_nondegenerate(alg):
        raise DegenerateFormError("degree 1 symbols need a nondegenerate metric")
    k = _default_order(op, k)
    report = validate_diffop(op, alg, k)
    if not report.valid:
        raise InvalidOperatorError(f"not a triolic operator of order {k}: {report.message}")
    return DegreeOneSymbol(op, k)


def symbol_deg2_tensor(op: TriDiffOp, alg: TrioleAlgebra, k: Optional[int] = None) -> SymbolTensor:
    """The Q-valued symmetric tensor of D_A2 as an m_Q×1 symbol."""
    if op.degree != 2:
        raise DegreeError("degree 2 operator required")
    return principal_symbol(op.D_A2, _default_order(op, k))


def tensor_to_operator(symbol: SymbolTensor) -> MatDiffOp:
    """Normal-ordered representative of a Q-valued symbol."""
    out = symbol_to_operator(symbol)
    if isinstance(out, PolyDiffOp):
        return MatDiffOp(out.ring, ((out,),))
    return out


def symmetrized_operator(fields: Sequence[ScalarDerivation], q: Sequence) -> MatDiffOp:
    """(1/k!) Σ_π X_π(1)∘…∘X_π(k), valued along the constant Q-vector ``q``.

    Its order-k symbol is the rank-one tensor X_1⊙…⊙X_k ⊗ q.
    """
    R = fields[0].ring
    k = len(fields)
    total = PolyDiffOp.zero(R)
    for perm in permutations(fields):
        term = PolyDiffOp.identity(R)
        for X in perm:
            term = term.compose(X.to_operator())
        total = total + term
    total = total.left_multiply(R(QQ(1, factorial(k))))
    return MatDiffOp.column([total.left_multiply(R(x)) for x in q])


def check_symbol_normalization(op: TriDiffOp, f, k: Optional[int] = None) -> bool:
    """smbl_k(Δ)(df^k) = ((−1)^k/k!)·δ_f^k(Δ)(1) on the whole block operator."""
    k = _default_order(op, k)
    return symbol_normalization_holds(op.block, op.alg.ring(f), k)


@dataclass(frozen=True, eq=False)
class ModuleDiffOp:
    """A graded operator 𝒯 → ℛ given by its block operator (rows: module, columns: 𝒯)."""

    module: TruncatedTriModule
    degree: int
    block: MatDiffOp

    def __post_init__(self):
        if self.degree not in DO_DEGREES:
            raise DegreeError(f"no module-valued operators of degree {self.degree}")
        alg = self.module.alg
        if self.block.shape != (sum(self.module.sizes), alg.size):
            raise ShapeError(f"module operator has shape {self.block.shape}")
        _check_pattern(self.block, self.degree, self.module.sizes, alg.blocks)

    @classmethod
    def from_diffop(cls, op: TriDiffOp, module: TruncatedTriModule) -> "ModuleDiffOp":
        """An operator of 𝒯 valued in 𝒯 viewed as a module over itself."""
        if module.sizes != op.alg.blocks:
            raise ShapeError("module ranks do not match the algebra")
        return cls(module, op.degree, op.block)

    @classmethod
    def twisted_pair(cls, module: TruncatedTriModule, box_A: Sequence[PolyDiffOp]) -> "ModuleDiffOp":
        """Degree 1 pair (□^A, □^P) with □^P(f e_α)^k = ε Σ_j λ1[k][α][j] □^A_j(f)."""
        alg = module.alg
        R = alg.ring
        if len(box_A) != module.r1:
            raise ShapeError(f"□^A needs {module.r1} entries")
        eps = sign(alg.convention, 1, 1)
        rows = []
        for k in range(module.r2):
            row = []
            for a in range(alg.m_P):
                op = PolyDiffOp.zero(R)
                for j in range(module.r1):
                    if module.lam1[k][a][j]:
                        op = op + box_A[j].left_multiply(eps * module.lam1[k][a][j])
                row.append(op)
            rows.append(tuple(row))
        blocks = {(1, 0): MatDiffOp.column(list(box_A)), (2, 1): MatDiffOp(R, tuple(rows))}
        return cls(module, 1, MatDiffOp.from_blocks(R, module.sizes, alg.blocks, blocks))

    def part(self, bi: int, bj: int) -> MatDiffOp:
        return self.block.block(bi, bj, self.module.sizes, self.module.alg.blocks)

    @property
    def order(self) -> int:
        return self.block.order

    def apply(self, t: TrioleElement) -> ModuleElement:
        return self.module.element(self.block.apply(t.as_vector()))


def _lam1(module: TruncatedTriModule, p, r1) -> tuple:
    alg = module.alg
    zero0, zero2 = (alg.ring.zero,) * module.r0, (alg.ring.zero,) * module.r2
    return module.act(TrioleElement.build(alg, 0, p), ModuleElement(zero0, tuple(r1), zero2)).r2


def _nu(module: TruncatedTriModule, q, r0) -> tuple:
    alg = module.alg
    zero1, zero2 = (alg.ring.zero,) * module.r1, (alg.ring.zero,) * module.r2
    return module.act(TrioleElement.build(alg, 0, None, q), ModuleElement(tuple(r0), zero1, zero2)).r2


def _contract_matrix(array, s, outer: int, middle: int, R) -> tuple:
    """M[o][m] = Σ_i array[o][m][i] s_i."""
    return tuple(
        tuple(sum((array[o][m][i] * s[i] for i in range(len(s))), R.zero) for m in range(middle))
        for o in range(outer)
    )


def _module_degree0_report(op: ModuleDiffOp, alg: TrioleAlgebra, k: int) -> Report:
    module, R = op.module, alg.ring
    eps = sign(alg.convention, 1, 1)
    D_A, D_P, D_Q = op.part(0, 0), op.part(1, 1), op.part(2, 2)
    one = (R.one,)
    for fs in coordinate_tuples(R, k):
        s = delta_tuple(D_A, fs).apply(one)
        E_P, E_Q = delta_tuple(D_P, fs), delta_tuple(D_Q, fs)
        if E_P != MatDiffOp.from_matrix(R, _contract_matrix(module.lam0, s, module.r1, alg.m_P, R)):
            return _fail("1", fs, "λ0(p, δ^k□^A) ≠ δ^k□^P(p)")
        if E_Q != MatDiffOp.from_matrix(R, _contract_matrix(module.nu, s, module.r2, alg.m_Q, R)):
            return _fail("2", fs, "ν(q, δ^k□^A) ≠ δ^k□^Q(q)")
        MP, MQ = E_P.order_zero_part(), E_Q.order_zero_part()
        for r, a, b in product(range(module.r2), range(alg.m_P), range(alg.m_P)):
            lhs = sum((module.lam1[r][a][j] * MP[j][b] for j in range(module.r1)), R.zero)
            rhs = sum((MQ[r][B] * alg.g[B][a][b] for B in range(alg.m_Q)), R.zero)
            if lhs != rhs:
                return _fail("3", fs, "λ1(p0, δ^k□^P p1) ≠ δ^k□^Q g(p0, p1)", [r + 1, a + 1, b + 1])
    for fs in monomial_tuples(R, k - 1):
        E_A, E_P, E_Q = delta_tuple(D_A, fs), delta_tuple(D_P, fs), delta_tuple(D_Q, fs)
        s = E_A.apply(one)
        for (l0, p0), (l1, p1) in product(_p_tests(alg), repeat=2):
            q = alg.pair(p0, p1)
            lhs = E_Q.apply(q)
            first = _lam1(module, p1, E_P.apply(p0))
            second = _lam1(module, p0, E_P.apply(p1))
            third = _nu(module, q, s)
            rhs = tuple(eps * x + y - z for x, y, z in zip(first, second, third))
            if lhs != rhs:
                return _fail("4", fs, "λ1/ν compatibility of δ^{k−1}□ fails", [l0, l1])
    return Report.ok()


def _module_degree1_report(op: ModuleDiffOp, alg: TrioleAlgebra, k: int) -> Report:
    module, R = op.module, alg.ring
    eps = sign(alg.convention, 1, 1)
    for fs in coordinate_tuples(R, k):
        s = delta_tuple(op.part(1, 0), fs).apply((R.one,))
        M = _contract_matrix(module.lam1, s, module.r2, alg.m_P, R)
        expected = MatDiffOp.from_matrix(R, tuple(tuple(eps * x for x in row) for row in M))
        if delta_tuple(op.part(2, 1), fs) != expected:
            return _fail("twist", fs, "δ^k□^P(p) ≠ ±λ1(p, δ^k□^A)")
    return Report.ok()


def validate_module_diffop(op: ModuleDiffOp, module: TruncatedTriModule, alg: TrioleAlgebra,
                           k: Optional[int] = None) -> Report:
    """λ/ν-twisted relations of a module-valued operator of order ``k``."""
    if op.module != module or module.alg != alg:
        raise ShapeError("operator belongs to a different module")
    k = max(op.order, 1) if k is None else k
    if k < 1:
        raise OrderError("module operators are validated at order 1 or above")
    if op.order > k:
        return Report.fail({"condition": "order", "delta": []}, f"operator has order {op.order} > {k}")
    if op.degree == 0:
        return _module_degree0_report(op, alg, k)
    if op.degree == 1:
        return _module_degree1_report(op, alg, k)
    return Report.ok()


def composition_report(delta: TriDiffOp, nabla: TriDiffOp, alg: TrioleAlgebra) -> Report:
    """Both factors and their composite validate at orders k, ℓ and k + ℓ."""
    k, l = max(delta.order, 1), max(nabla.order, 1)
    composite = compose(delta, nabla)
    return combine({
        "left": validate_diffop(delta, alg, k),
        "right": validate_diffop(nabla, alg, l),
        "composite": validate_diffop(composite, alg, k + l),
    })
