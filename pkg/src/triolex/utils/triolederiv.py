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

"""Graded derivations of a triole algebra in degrees −1..2, truncated modules and Lie data.

A derivation of degree d is stored by its components and evaluated through its block operator,
an N×N matrix of differential operators on (a, p, q) with N = 1 + m_P + m_Q. Brackets are graded
commutators of block operators, read back into components.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ

from triolex.utils.errors import (
    ClosureError,
    DegenerateFormError,
    DegreeError,
    ShapeError,
)
from triolex.utils.linalg import (
    Matrix,
    as_matrix,
    as_polynomial,
    field_solve,
    first_nonzero,
    kernel,
    qq_solve,
    zeros,
)
from triolex.utils.report import Report, combine
from triolex.utils.symkernel import (
    MatDiffOp,
    PolyDiffOp,
    ScalarDerivation,
    delta_a,
    monomial,
    monomials_up_to,
)
from triolex.utils.triolecore import (
    TrioleAlgebra,
    TrioleElement,
    is_nondegenerate,
    monomial_elements,
    multiply,
    sign,
)

logger = logging.getLogger(__name__)

DEGREES = (-1, 0, 1, 2)


@dataclass(frozen=True, eq=False)
class GradedDerivation:
    """Components of a derivation of degree −1, 0, 1 or 2.

    degree 0:  X_A, G (m_P×m_P), H (m_Q×m_Q) with X^P = X_A + G and X^Q = X_A + H
    degree 1:  X_A1 (m_P derivations A → P), Xp (first-order operator P → Q)
    degree 2:  X_A2 (m_Q derivations A → Q)
    degree −1: phi (P → A row), psi (Q → P, m_P×m_Q)
    """

    alg: TrioleAlgebra
    degree: int
    X_A: Optional[ScalarDerivation] = None
    G: Optional[Matrix] = None
    H: Optional[Matrix] = None
    X_A1: Optional[Tuple[ScalarDerivation, ...]] = None
    Xp: Optional[MatDiffOp] = None
    X_A2: Optional[Tuple[ScalarDerivation, ...]] = None
    phi: Optional[Tuple] = None
    psi: Optional[Matrix] = None

    def __post_init__(self):
        alg, d = self.alg, self.degree
        if d not in DEGREES:
            raise DegreeError(f"no triolic derivations of degree {d}")
        R = alg.ring

        def need(name, ok):
            if not ok:
                raise ShapeError(f"degree {d} derivation has a malformed {name}")

        if d == 0:
            need("X_A", isinstance(self.X_A, ScalarDerivation) and self.X_A.ring == R)
            object.__setattr__(self, "G", as_matrix(R, self.G))
            object.__setattr__(self, "H", as_matrix(R, self.H))
            need("G", len(self.G) == alg.m_P and all(len(r) == alg.m_P for r in self.G))
            need("H", len(self.H) == alg.m_Q and all(len(r) == alg.m_Q for r in self.H))
        elif d == 1:
            object.__setattr__(self, "X_A1", tuple(self.X_A1))
            need("X_A1", len(self.X_A1) == alg.m_P)
            need("Xp", isinstance(self.Xp, MatDiffOp) and self.Xp.shape == (alg.m_Q, alg.m_P))
            need("Xp order", self.Xp.order <= 1)
        elif d == 2:
            object.__setattr__(self, "X_A2", tuple(self.X_A2))
            need("X_A2", len(self.X_A2) == alg.m_Q)
        else:
            object.__setattr__(self, "phi", tuple(R(x) for x in self.phi))
            object.__setattr__(self, "psi", as_matrix(R, self.psi))
            need("phi", len(self.phi) == alg.m_P)
            need("psi", len(self.psi) == alg.m_P and all(len(r) == alg.m_Q for r in self.psi))

    @classmethod
    def degree0(cls, alg: TrioleAlgebra, X_A: ScalarDerivation, G=None, H=None) -> "GradedDerivation":
        R = alg.ring
        return cls(alg, 0, X_A=X_A,
                   G=G if G is not None else zeros(R, alg.m_P, alg.m_P),
                   H=H if H is not None else zeros(R, alg.m_Q, alg.m_Q))

    @classmethod
    def degree1(cls, alg: TrioleAlgebra, X_A1: Sequence[ScalarDerivation], H=None) -> "GradedDerivation":
        """X_A1 with Xp = X_g + H, where X_g(p)^C = Σ g^C_{αβ} X^α(p^β) and H is order zero."""
        R = alg.ring
        rows = []
        for block in alg.g:
            row = []
            for beta in range(alg.m_P):
                op = PolyDiffOp.zero(R)
                for alpha, X in enumerate(X_A1):
                    if block[alpha][beta]:
                        op = op + X.to_operator().left_multiply(block[alpha][beta])
                row.append(op)
            rows.append(tuple(row))
        Xp = MatDiffOp(R, tuple(rows))
        if H is not None:
            Xp = Xp + MatDiffOp.from_matrix(R, H)
        return cls(alg, 1, X_A1=tuple(X_A1), Xp=Xp)

    @classmethod
    def degree2(cls, alg: TrioleAlgebra, X_A2: Sequence[ScalarDerivation]) -> "GradedDerivation":
        return cls(alg, 2, X_A2=tuple(X_A2))

    @classmethod
    def degree_minus1(cls, alg: TrioleAlgebra, phi: Sequence, psi: Matrix) -> "GradedDerivation":
        return cls(alg, -1, phi=tuple(phi), psi=psi)

    @classmethod
    def zero(cls, alg: TrioleAlgebra, degree: int = 0) -> "GradedDerivation":
        R = alg.ring
        if degree == 0:
            return cls.degree0(alg, ScalarDerivation.zero(R))
        if degree == 1:
            return cls.degree1(alg, [ScalarDerivation.zero(R)] * alg.m_P)
        if degree == 2:
            return cls.degree2(alg, [ScalarDerivation.zero(R)] * alg.m_Q)
        return cls.degree_minus1(alg, [R.zero] * alg.m_P, zeros(R, alg.m_P, alg.m_Q))

    @cached_property
    def block(self) -> MatDiffOp:
        """The N×N block operator on (a, p, q)."""
        alg, d = self.alg, self.degree
        R = alg.ring
        sizes = alg.blocks
        blocks = {}
        if d == 0:
            XA = self.X_A.to_operator()
            blocks[(0, 0)] = MatDiffOp(R, ((XA,),))
            blocks[(1, 1)] = MatDiffOp.scalar(XA, alg.m_P) + MatDiffOp.from_matrix(R, self.G)
            blocks[(2, 2)] = MatDiffOp.scalar(XA, alg.m_Q) + MatDiffOp.from_matrix(R, self.H)
        elif d == 1:
            blocks[(1, 0)] = MatDiffOp.column([X.to_operator() for X in self.X_A1])
            blocks[(2, 1)] = self.Xp
        elif d == 2:
            blocks[(2, 0)] = MatDiffOp.column([X.to_operator() for X in self.X_A2])
        else:
            blocks[(0, 1)] = MatDiffOp.from_matrix(R, (self.phi,))
            blocks[(1, 2)] = MatDiffOp.from_matrix(R, self.psi)
        return MatDiffOp.from_blocks(R, sizes, sizes, blocks)

    def as_block(self) -> MatDiffOp:
        return self.block

    @classmethod
    def from_block(cls, alg: TrioleAlgebra, degree: int, op: MatDiffOp) -> "GradedDerivation":
        """Read components back from a block operator of the given degree."""
        sizes = alg.blocks

        def part(i, j):
            return op.block(i, j, sizes, sizes)

        if degree == 0:
            X_A = part(0, 0).entry(0, 0).to_derivation()
            scalar_P = MatDiffOp.scalar(X_A.to_operator(), alg.m_P)
            scalar_Q = MatDiffOp.scalar(X_A.to_operator(), alg.m_Q)
            rest_P = part(1, 1) - scalar_P
            rest_Q = part(2, 2) - scalar_Q
            if rest_P.order or rest_Q.order:
                raise DegreeError("degree 0 block has non-scalar first-order part")
            return cls.degree0(alg, X_A, rest_P.order_zero_part(), rest_Q.order_zero_part())
        if degree == 1:
            column = part(1, 0)
            X_A1 = tuple(column.entry(i, 0).to_derivation() for i in range(alg.m_P))
            return cls(alg, 1, X_A1=X_A1, Xp=part(2, 1))
        if degree == 2:
            column = part(2, 0)
            return cls.degree2(alg, [column.entry(k, 0).to_derivation() for k in range(alg.m_Q)])
        if degree == -1:
            phi, psi = part(0, 1), part(1, 2)
            if phi.order or psi.order:
                raise DegreeError("degree −1 components must be A-linear")
            return cls.degree_minus1(alg, phi.order_zero_part()[0], psi.order_zero_part())
        raise DegreeError(f"no triolic derivations of degree {degree}")

    def __eq__(self, other):
        if not isinstance(other, GradedDerivation):
            return NotImplemented
        return self.alg == other.alg and self.degree == other.degree and self.block == other.block

    def __hash__(self):
        return hash((self.degree, self.block))

    def __repr__(self):
        return f"GradedDerivation(degree={self.degree}, {self.alg!r})"


def apply_derivation(X: GradedDerivation, t: TrioleElement, alg: TrioleAlgebra) -> TrioleElement:
    return TrioleElement.from_vector(alg, X.block.apply(t.as_vector()))


def graded_leibniz_report(X: GradedDerivation, alg: TrioleAlgebra, degree_bound: int = 1) -> Report:
    """X(t1t2) = X(t1)t2 + ε(|X|,|t1|) t1X(t2) on monomial multiples of the generators."""
    elements = monomial_elements(alg, degree_bound)
    images = {label: apply_derivation(X, t, alg) for label, t, _ in elements}
    for (l1, t1, d1), (l2, t2, _) in product(elements, repeat=2):
        lhs = apply_derivation(X, multiply(t1, t2, alg), alg)
        rhs = multiply(images[l1], t2, alg) + multiply(t1, images[l2], alg).scale(
            sign(alg.convention, X.degree, d1)
        )
        if lhs != rhs:
            return Report.fail([l1, l2], "graded Leibniz rule fails")
    return Report.ok()


def degree0_residual(X: GradedDerivation, alg: TrioleAlgebra):
    """r[C][α][β] = X_A(g^C_{αβ}) + Σ_B H[C][B] g^B_{αβ} − Σ_γ (g^C_{γβ} G[γ][α] + g^C_{αγ} G[γ][β])."""
    m, R = alg.m_P, alg.ring
    out = []
    for C in range(alg.m_Q):
        gC = alg.g[C]
        rows = []
        for a in range(m):
            row = []
            for b in range(m):
                r = X.X_A(gC[a][b]) if X.X_A is not None else R.zero
                for B in range(alg.m_Q):
                    r += X.H[C][B] * alg.g[B][a][b]
                for c in range(m):
                    r -= gC[c][b] * X.G[c][a] + gC[a][c] * X.G[c][b]
                row.append(r)
            rows.append(tuple(row))
        out.append(tuple(rows))
    return tuple(out)


def _first_nonzero3(array) -> Optional[List[int]]:
    for i, block in enumerate(array):
        hit = first_nonzero(block)
        if hit is not None:
            return [i + 1, hit[0] + 1, hit[1] + 1]
    return None


def _degree0_report(X: GradedDerivation, alg: TrioleAlgebra) -> Report:
    witness = _first_nonzero3(degree0_residual(X, alg))
    if witness:
        return Report.fail(witness, "X^Q(g) ≠ g(X^P ·, ·) + g(·, X^P ·)")
    return Report.ok()


def metric_twist(alg: TrioleAlgebra, vector) -> Matrix:
    """The m_Q×m_P matrix g(v, ·)."""
    R = alg.ring
    return tuple(
        tuple(sum((vector[a] * block[a][b] for a in range(alg.m_P)), R.zero) for b in range(alg.m_P))
        for block in alg.g
    )


def _degree1_report(X: GradedDerivation, alg: TrioleAlgebra) -> Report:
    R = alg.ring
    if X.Xp.order > 1:
        return Report.fail(["order"], "X^P has order above one")
    for i, x in enumerate(R.gens):
        expected = MatDiffOp.from_matrix(R, metric_twist(alg, [D(x) for D in X.X_A1]))
        if delta_a(X.Xp, x) != -expected:
            return Report.fail([i + 1], f"δ_x{i + 1}(X^P) ≠ −g(X^A(x{i + 1}), ·)")
    return Report.ok()


def degree_minus1_rows(alg: TrioleAlgebra, phi: Sequence):
    """Linear system in the unknowns ψ[γ][A] (flattened γ·m_Q + A) for a given φ.

    Rows come from Σ_A ψ[γ][A] g^A_{αβ} = φ_α δ_{βγ} + s φ_β δ_{αγ} and
    φ_α δ_{AC} + s Σ_γ ψ[γ][A] g^C_{αγ} = 0, with s = +1 for plain trioles and −1 otherwise.
    """
    R = alg.ring
    m, mq = alg.m_P, alg.m_Q
    s = sign(alg.convention, 1, 1)
    rows, rhs, labels = [], [], []
    for gamma, a, b in product(range(m), repeat=3):
        row = [R.zero] * (m * mq)
        for A in range(mq):
            row[gamma * mq + A] = alg.g[A][a][b]
        rows.append(row)
        rhs.append(phi[a] * int(b == gamma) + s * phi[b] * int(a == gamma))
        labels.append(["metric", gamma + 1, a + 1, b + 1])
    for a, A, C in product(range(m), range(mq), range(mq)):
        row = [R.zero] * (m * mq)
        for gamma in range(m):
            row[gamma * mq + A] = s * alg.g[C][a][gamma]
        rows.append(row)
        rhs.append(-phi[a] * int(A == C))
        labels.append(["pq", a + 1, A + 1, C + 1])
    return rows, rhs, labels


def _degree_minus1_report(X: GradedDerivation, alg: TrioleAlgebra) -> Report:
    m, mq = alg.m_P, alg.m_Q
    rows, rhs, labels = degree_minus1_rows(alg, X.phi)
    flat = [X.psi[gamma][A] for gamma in range(m) for A in range(mq)]
    for row, b, label in zip(rows, rhs, labels):
        if sum((c * v for c, v in zip(row, flat)), alg.ring.zero) != b:
            return Report.fail(label, "degree −1 relation fails")
    return Report.ok()


def validate_derivation(X: GradedDerivation, alg: TrioleAlgebra, degree_bound: int = 1) -> Report:
    """Per-degree coefficient identities plus an evaluation-level Leibniz check."""
    if X.alg != alg:
        raise ShapeError("derivation belongs to a different algebra")
    checks = {
        0: _degree0_report,
        1: _degree1_report,
        2: lambda X, alg: Report.ok(),
        -1: _degree_minus1_report,
    }
    return combine({
        "relations": checks[X.degree](X, alg),
        "leibniz": graded_leibniz_report(X, alg, degree_bound),
    })


def solve_degree_minus1(phi: Sequence, alg: TrioleAlgebra) -> Report:
    """Find ψ with (φ, ψ) a degree −1 derivation, over the polynomial ring."""
    R = alg.ring
    phi = tuple(R(x) for x in phi)
    rows, rhs, _ = degree_minus1_rows(alg, phi)
    solution = field_solve(rows, rhs, alg.m_P * alg.m_Q, R)
    if solution is None:
        return Report.fail(None, "no ψ satisfies the degree −1 relations", solvable=False, psi=None)
    values = [as_polynomial(x, R) for x in solution]
    if any(v is None for v in values):
        return Report.fail(None, "ψ exists only with non-constant denominators", solvable=False, psi=None)
    mq = alg.m_Q
    psi = tuple(tuple(values[g * mq + A] for A in range(mq)) for g in range(alg.m_P))
    return Report.ok(solvable=True, psi=psi)


def reject_degree_minus2(alg: TrioleAlgebra) -> Report:
    """Leibniz on Q·Q = 0 and on P·P forces every degree −2 candidate χ: Q → A to vanish.

    Unknowns χ_A = χ(q_A). Rows: χ_A δ_{BC} + χ_B δ_{AC} = 0 and Σ_A χ_A g^A_{αβ} = 0.
    """
    R = alg.ring
    mq = alg.m_Q
    rows = []
    for A, B, C in product(range(mq), repeat=3):
        row = [R.zero] * mq
        if B == C:
            row[A] += 1
        if A == C:
            row[B] += 1
        rows.append(tuple(row))
    for a, b in product(range(alg.m_P), repeat=2):
        rows.append(tuple(alg.g[A][a][b] for A in range(mq)))
    system = []
    for row in rows:
        if not any(row):
            continue
        lhs = " + ".join(f"{c.as_expr()}*chi{A + 1}" for A, c in enumerate(row) if c)
        equation = f"{lhs} = 0"
        if equation not in system:
            system.append(equation)
    solutions = kernel(rows, mq, R)
    return Report(
        valid=not solutions,
        witness=None if not solutions else [str(x.as_expr()) for x in solutions[0]],
        message="" if not solutions else "nonzero degree −2 candidate",
        details={"system": system, "solution": ["0"] * mq, "nonexistence": not solutions},
    )


ADMISSIBLE = {(a, b) for a in DEGREES for b in DEGREES if -1 <= a + b <= 2 and (a, b) != (-1, -1)}


def bracket(X: GradedDerivation, Y: GradedDerivation, alg: TrioleAlgebra) -> GradedDerivation:
    """[X, Y] = X∘Y − ε(|X|,|Y|) Y∘X, computed on the block operators.

    On components this reproduces, with ε = sign(convention, |X|, |Y|):
      0, 0:  X_A = [X_A, Y_A], G = X_A(G_Y) − Y_A(G_X) + [G_X, G_Y], H likewise with H
      0, 1:  X_A1^α = [X_A, Y_A1^α] + Σ_β G_X[α][β] Y_A1^β, Xp = [X_A, Yp] + H_X Yp − Yp G_X
      0, 2:  X_A2^C = [X_A, Y_A2^C] + Σ_D H_X[C][D] Y_A2^D
      0, −1: φ = X_A(φ_Y) − φ_Y G_X, ψ = X_A(ψ_Y) + G_X ψ_Y − ψ_Y H_X
      1, 1:  X_A2 = Xp_X∘X_A1,Y − ε Xp_Y∘X_A1,X
      1, −1: Z(a) = −ε φ_Y·X_A1(a), Z(p) = X_A1(φ_Y·p) − ε ψ_Y Xp(p), Z(q) = Xp(ψ_Y q)
      2, −1: X_A1 = −ψ_Y X_A2, Z(p) = X_A2(φ_Y·p)
    The swapped pairs follow from [Y, X] = −ε(|X|,|Y|) [X, Y].
    """
    if (X.degree, Y.degree) not in ADMISSIBLE:
        raise DegreeError(f"bracket of degrees {X.degree} and {Y.degree} leaves the admissible range")
    eps = sign(alg.convention, X.degree, Y.degree)
    xy, yx = X.block.compose(Y.block), Y.block.compose(X.block)
    Z = xy - yx if eps > 0 else xy + yx
    return GradedDerivation.from_block(alg, X.degree + Y.degree, Z)


def symbol_deg0(X: GradedDerivation) -> ScalarDerivation:
    if X.degree != 0:
        raise DegreeError("degree 0 symbol of a derivation of another degree")
    return X.X_A


def is_end_pair(G: Matrix, H: Matrix, alg: TrioleAlgebra) -> bool:
    """(G, H) lies in the kernel of the degree-0 symbol: g(G·, ·) + g(·, G·) = H∘g."""
    zero = GradedDerivation.degree0(alg, ScalarDerivation.zero(alg.ring), G, H)
    return _first_nonzero3(degree0_residual(zero, alg)) is None


def symbol_deg1(X: GradedDerivation, alg: TrioleAlgebra) -> Tuple[Matrix, ...]:
    """g♯∘X_A1 as n matrices M_i[C][β] = Σ_α X_A1[α]^i g^C_{αβ}."""
    if X.degree != 1:
        raise DegreeError("degree 1 symbol of a derivation of another degree")
    if not is_nondegenerate(alg):
        raise DegenerateFormError("the degree 1 symbol needs a nondegenerate metric")
    return tuple(
        metric_twist(alg, [D.coeffs[i] for D in X.X_A1]) for i in range(alg.n_vars)
    )


def symbol_deg1_kernel(X: GradedDerivation) -> Matrix:
    """Order-zero part of X^P, the Hom(P, Q) component."""
    return X.Xp.order_zero_part()


def _homogeneous_degree(s: TrioleElement) -> int:
    if not s.a and not any(s.q) and any(s.p):
        return 1
    if not s.a and not any(s.p) and any(s.q):
        return 2
    raise DegreeError("module action needs a nonzero homogeneous element of degree 1 or 2")


def module_action(s: TrioleElement, X: GradedDerivation, alg: TrioleAlgebra) -> GradedDerivation:
    """(s·X)(t) = s·X(t) for s of degree 1 or 2."""
    d = _homogeneous_degree(s)
    R = alg.ring
    if d == 1 and X.degree == 0:
        X_A1 = [X.X_A.scale(x) for x in s.p]
        covector = MatDiffOp.from_matrix(R, metric_twist(alg, s.p))
        X_P = X.block.block(1, 1, alg.blocks, alg.blocks)
        return GradedDerivation(alg, 1, X_A1=tuple(X_A1), Xp=covector.compose(X_P))
    if d == 1 and X.degree == 1:
        twist = metric_twist(alg, s.p)
        X_A2 = []
        for C in range(alg.m_Q):
            D = ScalarDerivation.zero(R)
            for b in range(alg.m_P):
                if twist[C][b]:
                    D = D + X.X_A1[b].scale(twist[C][b])
            X_A2.append(D)
        return GradedDerivation.degree2(alg, X_A2)
    if d == 2 and X.degree == 0:
        return GradedDerivation.degree2(alg, [X.X_A.scale(x) for x in s.q])
    raise DegreeError(f"element of degree {d} acting on a degree {X.degree} derivation overflows")


@dataclass(frozen=True)
class ModuleElement:
    r0: Tuple
    r1: Tuple
    r2: Tuple

    def as_vector(self) -> tuple:
        return tuple(self.r0) + tuple(self.r1) + tuple(self.r2)

    def __add__(self, other: "ModuleElement") -> "ModuleElement":
        return ModuleElement(
            tuple(x + y for x, y in zip(self.r0, other.r0)),
            tuple(x + y for x, y in zip(self.r1, other.r1)),
            tuple(x + y for x, y in zip(self.r2, other.r2)),
        )

    def scale(self, c) -> "ModuleElement":
        return ModuleElement(
            tuple(c * x for x in self.r0), tuple(c * x for x in self.r1), tuple(c * x for x in self.r2)
        )


@dataclass(frozen=True)
class TruncatedTriModule:
    """R0 ⊕ R1 ⊕ R2 with λ0: P⊗R0→R1, λ1: P⊗R1→R2, ν: Q⊗R0→R2.

    Arrays are indexed lam0[j][α][i], lam1[k][α][j] and nu[k][A][i].
    """

    alg: TrioleAlgebra
    r0: int
    r1: int
    r2: int
    lam0: Tuple
    lam1: Tuple
    nu: Tuple

    def __post_init__(self):
        alg, R = self.alg, self.alg.ring
        for name, outer, middle, inner in (
            ("lam0", self.r1, alg.m_P, self.r0),
            ("lam1", self.r2, alg.m_P, self.r1),
            ("nu", self.r2, alg.m_Q, self.r0),
        ):
            array = getattr(self, name)
            if len(array) != outer or any(
                len(mid) != middle or any(len(row) != inner for row in mid) for mid in array
            ):
                raise ShapeError(f"{name} must have shape {outer}x{middle}x{inner}")
            object.__setattr__(self, name, tuple(as_matrix(R, mid) for mid in array))

    @classmethod
    def from_algebra(cls, alg: TrioleAlgebra) -> "TruncatedTriModule":
        """𝒯 as a module over itself: R0 = A, R1 = P, R2 = Q."""
        m, mq = alg.m_P, alg.m_Q
        lam0 = [[[int(j == a)] for a in range(m)] for j in range(m)]
        lam1 = [[[alg.g[k][a][j] for j in range(m)] for a in range(m)] for k in range(mq)]
        nu = [[[int(k == A)] for A in range(mq)] for k in range(mq)]
        return cls(alg, 1, m, mq, lam0, lam1, nu)

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return self.r0, self.r1, self.r2

    def element(self, vector: Sequence) -> ModuleElement:
        R = self.alg.ring
        v = [R(x) for x in vector]
        if len(v) != sum(self.sizes):
            raise ShapeError(f"module vector of length {len(v)}")
        return ModuleElement(tuple(v[:self.r0]), tuple(v[self.r0:self.r0 + self.r1]), tuple(v[self.r0 + self.r1:]))

    def _contract(self, array, left, right) -> tuple:
        R = self.alg.ring
        return tuple(
            sum((mid[x][y] * left[x] * right[y]
                 for x in range(len(left)) for y in range(len(right)) if left[x] and right[y]), R.zero)
            for mid in array
        )

    def act(self, t: TrioleElement, r: ModuleElement) -> ModuleElement:
        """t·r = (a r0, a r1 + λ0(p, r0), a r2 + λ1(p, r1) + ν(q, r0))."""
        a = t.a
        l0 = self._contract(self.lam0, t.p, r.r0)
        l1 = self._contract(self.lam1, t.p, r.r1)
        nu = self._contract(self.nu, t.q, r.r0)
        return ModuleElement(
            tuple(a * x for x in r.r0),
            tuple(a * x + y for x, y in zip(r.r1, l0)),
            tuple(a * x + y + z for x, y, z in zip(r.r2, l1, nu)),
        )

    def basis(self, degree_bound: int = 1) -> List[Tuple[str, ModuleElement, int]]:
        """Monomial multiples of the module generators f0_i, f1_j, f2_k."""
        R = self.alg.ring
        total = sum(self.sizes)
        out = []
        for mu in monomials_up_to(self.alg.n_vars, degree_bound):
            m = monomial(R, mu)
            prefix = "" if not any(mu) else f"{m.as_expr()}*"
            position = 0
            for degree, size in enumerate(self.sizes):
                for i in range(size):
                    v = [R.zero] * total
                    v[position] = m
                    out.append((f"{prefix}f{degree}_{i + 1}", self.element(v), degree))
                    position += 1
        return out


def validate_truncated_module(module: TruncatedTriModule, alg: TrioleAlgebra) -> Report:
    """Σ_j lam1[k][α][j] lam0[j][β][i] = Σ_A g^A_{αβ} nu[k][A][i]."""
    R = alg.ring
    for k, a, b, i in product(range(module.r2), range(alg.m_P), range(alg.m_P), range(module.r0)):
        lhs = sum((module.lam1[k][a][j] * module.lam0[j][b][i] for j in range(module.r1)), R.zero)
        rhs = sum((alg.g[A][a][b] * module.nu[k][A][i] for A in range(alg.m_Q)), R.zero)
        if lhs != rhs:
            return Report.fail([k + 1, a + 1, b + 1, i + 1], "λ1(p, λ0(p', r)) ≠ ν(g(p, p'), r)")
    return Report.ok()


@dataclass(frozen=True)
class ModuleDerivation:
    """A degree-d derivation 𝒯 → ℛ given by its block operator (rows: module, columns: 𝒯)."""

    module: TruncatedTriModule
    degree: int
    op: MatDiffOp

    def __post_init__(self):
        alg = self.module.alg
        if self.op.shape != (sum(self.module.sizes), alg.size):
            raise ShapeError(f"module derivation operator has shape {self.op.shape}")

    @classmethod
    def from_derivation(cls, X: GradedDerivation, module: TruncatedTriModule) -> "ModuleDerivation":
        """A derivation of 𝒯 viewed as valued in 𝒯 itself."""
        return cls(module, X.degree, X.block)

    @classmethod
    def nu_twisted(cls, X: GradedDerivation, s: Sequence, module: TruncatedTriModule) -> "ModuleDerivation":
        """a ↦ ν(X_A2(a), s) for a Q-valued derivation X_A2 and a fixed s ∈ R0."""
        if X.degree != 2:
            raise DegreeError("the ν-twist needs a Q-valued derivation")
        alg, R = module.alg, module.alg.ring
        ops = []
        for k in range(module.r2):
            op = PolyDiffOp.zero(R)
            for A in range(alg.m_Q):
                coeff = sum((module.nu[k][A][i] * R(s[i]) for i in range(module.r0)), R.zero)
                if coeff:
                    op = op + X.X_A2[A].to_operator().left_multiply(coeff)
            ops.append(op)
        rows = (module.r0, module.r1, module.r2)
        blocks = {(2, 0): MatDiffOp.column(ops)}
        return cls(module, 2, MatDiffOp.from_blocks(R, rows, alg.blocks, blocks))

    def apply(self, t: TrioleElement) -> ModuleElement:
        return self.module.element(self.op.apply(t.as_vector()))


@dataclass(frozen=True)
class DerOperator:
    """A pair (X, Δ) with Δ(t·r) = X(t)·r + ε(|X|,|t|) t·Δ(r)."""

    X: GradedDerivation
    module: TruncatedTriModule
    delta: MatDiffOp

    def __post_init__(self):
        size = sum(self.module.sizes)
        if self.delta.shape != (size, size):
            raise ShapeError(f"Der-operator on a module of rank {size} has shape {self.delta.shape}")

    @classmethod
    def from_derivation(cls, X: GradedDerivation, module: TruncatedTriModule) -> "DerOperator":
        return cls(X, module, X.block)

    def apply(self, r: ModuleElement) -> ModuleElement:
        return self.module.element(self.delta.apply(r.as_vector()))


def validate_module_derivation(D, module: TruncatedTriModule, alg: TrioleAlgebra, degree_bound: int = 1) -> Report:
    """Leibniz rules of module-valued derivations and Der-operators on monomial bases."""
    conv = alg.convention
    elements = monomial_elements(alg, degree_bound)
    if isinstance(D, ModuleDerivation):
        images = {label: D.apply(t) for label, t, _ in elements}
        if D.apply(TrioleElement.build(alg, 1)).as_vector() != (alg.ring.zero,) * sum(module.sizes):
            return Report.fail(["1"], "derivation does not kill the unit")
        for (l1, t1, d1), (l2, t2, d2) in product(elements, repeat=2):
            lhs = D.apply(multiply(t1, t2, alg))
            rhs = module.act(t2, images[l1]).scale(sign(conv, D.degree + d1, d2)) + module.act(
                t1, images[l2]
            ).scale(sign(conv, D.degree, d1))
            if lhs != rhs:
                return Report.fail([l1, l2], "module-valued Leibniz rule fails")
        return Report.ok()
    if isinstance(D, DerOperator):
        for (lt, t, dt), (lr, r, _) in product(elements, module.basis(degree_bound)):
            lhs = D.apply(module.act(t, r))
            Xt = apply_derivation(D.X, t, alg)
            rhs = module.act(Xt, r) + module.act(t, D.apply(r)).scale(sign(conv, D.X.degree, dt))
            if lhs != rhs:
                return Report.fail([lt, lr], "Der-operator Leibniz rule fails")
        return Report.ok()
    raise ShapeError(f"cannot validate {type(D).__name__} as a module derivation")


def _qq(x):
    return QQ.convert(x)


@dataclass(frozen=True)
class TriolicLieAlgebraData:
    """𝔤0 ⊕ 𝔤1 ⊕ 𝔤2 with rational structure constants.

    bracket[k][i][j]: [e_i, e_j] in 𝔤0; rho1[i], rho2[i]: matrices of e_i on 𝔤1, 𝔤2;
    form[k][a][b]: ⟨ξ_a, ξ_b⟩ in 𝔤2.
    """

    bracket: Tuple
    rho1: Tuple
    rho2: Tuple
    form: Tuple
    form_symmetry: str = "antisymmetric"


def _apply(matrix, vector):
    return [sum((_qq(matrix[i][j]) * vector[j] for j in range(len(vector))), QQ.zero) for i in range(len(matrix))]


def _matmul(a, b):
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    return [[sum((_qq(a[i][t]) * _qq(b[t][j]) for t in range(k)), QQ.zero) for j in range(m)] for i in range(n)]


def _unit(n, i):
    return [QQ.one if j == i else QQ.zero for j in range(n)]


def _lie(L, u, v):
    d0 = len(L.bracket)
    return [sum((_qq(L.bracket[k][i][j]) * u[i] * v[j] for i in range(d0) for j in range(d0)), QQ.zero)
            for k in range(d0)]


def _pairing(L, u, v):
    d1 = len(u)
    return [sum((_qq(L.form[k][a][b]) * u[a] * v[b] for a in range(d1) for b in range(d1)), QQ.zero)
            for k in range(len(L.form))]


def _rho(rhos, u):
    size = len(rhos[0]) if rhos else 0
    return [[sum((u[i] * _qq(rhos[i][r][c]) for i in range(len(u))), QQ.zero) for c in range(size)]
            for r in range(size)]


def validate_triolic_lie_algebra(L: TriolicLieAlgebraData) -> Report:
    """Skewness and Jacobi on 𝔤0, ρ1 and ρ2 representations, form symmetry and ρ-compatibility."""
    d0 = len(L.bracket)
    d1 = len(L.form[0]) if L.form else len(L.rho1[0]) if L.rho1 else 0
    d2 = len(L.form)
    e = [_unit(d0, i) for i in range(d0)]
    for i, j in product(range(d0), repeat=2):
        if _lie(L, e[i], e[j]) != [-x for x in _lie(L, e[j], e[i])]:
            return Report.fail(["skew", i + 1, j + 1], "bracket is not antisymmetric")
    for i, j, k in product(range(d0), repeat=3):
        total = [
            x + y + z
            for x, y, z in zip(
                _lie(L, e[i], _lie(L, e[j], e[k])),
                _lie(L, e[j], _lie(L, e[k], e[i])),
                _lie(L, e[k], _lie(L, e[i], e[j])),
            )
        ]
        if any(total):
            return Report.fail(["jacobi", i + 1, j + 1, k + 1], "Jacobi identity fails on g0")
    for name, rhos in (("rho1", L.rho1), ("rho2", L.rho2)):
        for i, j in product(range(d0), repeat=2):
            lhs = _rho(rhos, _lie(L, e[i], e[j]))
            a, b = _rho(rhos, e[i]), _rho(rhos, e[j])
            rhs = [[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(_matmul(a, b), _matmul(b, a))]
            if lhs != rhs:
                return Report.fail([name, i + 1, j + 1], f"{name} is not a representation")
    s = -1 if L.form_symmetry == "antisymmetric" else 1
    xi = [_unit(d1, a) for a in range(d1)]
    for a, b in product(range(d1), repeat=2):
        if _pairing(L, xi[a], xi[b]) != [s * x for x in _pairing(L, xi[b], xi[a])]:
            return Report.fail(["form", a + 1, b + 1], f"form is not {L.form_symmetry}")
    for i, a, b in product(range(d0), range(d1), range(d1)):
        r1 = _rho(L.rho1, e[i])
        lhs = _apply(_rho(L.rho2, e[i]), _pairing(L, xi[a], xi[b])) if d2 else []
        rhs = [x + y for x, y in zip(_pairing(L, _apply(r1, xi[a]), xi[b]), _pairing(L, xi[a], _apply(r1, xi[b])))]
        if lhs != rhs:
            return Report.fail(["compat", i + 1, a + 1, b + 1], "ρ2⟨ξ, ξ'⟩ ≠ ⟨ρ1 ξ, ξ'⟩ + ⟨ξ, ρ1 ξ'⟩")
    return Report.ok()


def _coordinates(X: GradedDerivation) -> Dict[tuple, object]:
    out = {}
    for i, row in enumerate(X.block.entries):
        for j, op in enumerate(row):
            for sigma, c in op.terms.items():
                for mono, q in c.items():
                    out[(i, j, sigma, mono)] = q
    return out


def _express(target: GradedDerivation, family: Sequence[GradedDerivation], label: str) -> List:
    """Rational coefficients of ``target`` in the span of ``family``."""
    coords = [_coordinates(Y) for Y in family]
    t = _coordinates(target)
    keys = sorted(set(t).union(*coords), key=repr)
    rows = [[c.get(key, QQ.zero) for c in coords] for key in keys]
    rhs = [t.get(key, QQ.zero) for key in keys]
    if not family:
        if any(rhs):
            raise ClosureError(f"{label} is nonzero but the target family is empty")
        return []
    solution = qq_solve(rows, rhs, len(family))
    if solution is None:
        raise ClosureError(f"{label} is not in the span of the given family")
    return solution


def assemble_lie_algebra_data(
    g0: Sequence[GradedDerivation],
    g1: Sequence[GradedDerivation],
    g2: Sequence[GradedDerivation],
    alg: TrioleAlgebra,
) -> TriolicLieAlgebraData:
    """Structure constants of finite families of derivations of degrees 0, 1, 2 closed under bracket."""
    d0, d1, d2 = len(g0), len(g1), len(g2)
    c = [[[QQ.zero] * d0 for _ in range(d0)] for _ in range(d0)]
    for i, j in product(range(d0), repeat=2):
        coeffs = _express(bracket(g0[i], g0[j], alg), g0, f"[X{i + 1}, X{j + 1}]")
        for k in range(d0):
            c[k][i][j] = coeffs[k]

    def representation(family, label):
        size = len(family)
        mats = []
        for i in range(d0):
            m = [[QQ.zero] * size for _ in range(size)]
            for a in range(size):
                coeffs = _express(bracket(g0[i], family[a], alg), family, f"[X{i + 1}, {label}{a + 1}]")
                for b in range(size):
                    m[b][a] = coeffs[b]
            mats.append(m)
        return mats

    rho1 = representation(g1, "Y")
    rho2 = representation(g2, "Z")
    form = [[[QQ.zero] * d1 for _ in range(d1)] for _ in range(d2)]
    for a, b in product(range(d1), repeat=2):
        coeffs = _express(bracket(g1[a], g1[b], alg), g2, f"[Y{a + 1}, Y{b + 1}]")
        for k in range(d2):
            form[k][a][b] = coeffs[k]
    symmetry = "antisymmetric" if sign(alg.convention, 1, 1) > 0 else "symmetric"
    logger.debug(f"assembled triolic Lie data with dimensions {(d0, d1, d2)}")
    return TriolicLieAlgebraData(c, rho1, rho2, form, symmetry)
