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

"""Triole algebras A ⊕ P ⊕ Q with a Q-valued metric on P, their morphisms and constructions."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import permutations, product
from typing import List, Optional, Sequence, Tuple

from sympy.combinatorics import Permutation
from sympy.polys.rings import PolyElement, PolyRing

from triolex.utils.errors import (
    NonUnitDeterminantError,
    RankCapError,
    RingMismatchError,
    SchemaError,
    ShapeError,
    SubstitutionError,
)
from triolex.utils.linalg import (
    Matrix,
    as_matrix,
    determinant,
    identity,
    in_span,
    inverse,
    is_unit,
    kernel,
    kron,
    mat_apply,
    rank,
    zeros,
)
from triolex.utils.report import Report, combine
from triolex.utils.symkernel import MatDiffOp, monomial, monomials_up_to, poly_ring, substitute

logger = logging.getLogger(__name__)

CONVENTIONS = ("plain", "koszul", "none")


def sign(convention: str, i: int, j: int) -> int:
    """Commutation sign for homogeneous degrees i, j.

    ``plain`` trioles are commutative; the other conventions use the Koszul rule.
    """
    if convention == "plain":
        return 1
    return -1 if (i * j) % 2 else 1


@dataclass(frozen=True, eq=False)
class TrioleAlgebra:
    """A ⊕ (P, g) ⊕ Q over QQ[x1..xn]; ``g[A][α][β]`` is the A-th component of g(e_α, e_β)."""

    n_vars: int
    m_P: int
    m_Q: int
    g: Tuple[Matrix, ...]
    convention: str = "plain"

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise SchemaError(f"unknown convention {self.convention!r}")
        if self.m_P < 1 or self.m_Q < 1:
            raise ShapeError(f"ranks must be positive, got m_P={self.m_P}, m_Q={self.m_Q}")
        ring = poly_ring(self.n_vars)
        if len(self.g) != self.m_Q or any(
            len(block) != self.m_P or any(len(row) != self.m_P for row in block) for block in self.g
        ):
            raise ShapeError(f"metric must have shape {self.m_Q}x{self.m_P}x{self.m_P}")
        object.__setattr__(self, "g", tuple(as_matrix(ring, block) for block in self.g))

    @classmethod
    def identity_metric(cls, n_vars: int, m_P: int, convention: str = "plain") -> "TrioleAlgebra":
        """m_Q = 1 with g(e_α, e_β) = δ_αβ."""
        return cls(n_vars, m_P, 1, (identity(poly_ring(n_vars), m_P),), convention)

    @property
    def ring(self) -> PolyRing:
        return poly_ring(self.n_vars)

    @property
    def blocks(self) -> Tuple[int, int, int]:
        return 1, self.m_P, self.m_Q

    @property
    def size(self) -> int:
        return 1 + self.m_P + self.m_Q

    def pair(self, p1: Sequence, p2: Sequence) -> Tuple[PolyElement, ...]:
        """g(p1, p2) as a Q-vector."""
        if len(p1) != self.m_P or len(p2) != self.m_P:
            raise ShapeError(f"P-vectors must have length {self.m_P}")
        R = self.ring
        out = []
        for block in self.g:
            acc = R.zero
            for a, row in enumerate(block):
                if not p1[a]:
                    continue
                for b, x in enumerate(row):
                    if x and p2[b]:
                        acc += p1[a] * x * p2[b]
            out.append(acc)
        return tuple(out)

    def with_metric(self, g, convention: Optional[str] = None) -> "TrioleAlgebra":
        return TrioleAlgebra(self.n_vars, self.m_P, len(g), g, convention or self.convention)

    def __eq__(self, other):
        if not isinstance(other, TrioleAlgebra):
            return NotImplemented
        return (self.n_vars, self.m_P, self.m_Q, self.g, self.convention) == (
            other.n_vars, other.m_P, other.m_Q, other.g, other.convention
        )

    def __hash__(self):
        return hash((self.n_vars, self.m_P, self.m_Q, self.g, self.convention))

    def __repr__(self):
        return f"TrioleAlgebra(n={self.n_vars}, mP={self.m_P}, mQ={self.m_Q}, {self.convention})"


@dataclass(frozen=True)
class TrioleElement:
    a: PolyElement
    p: Tuple[PolyElement, ...]
    q: Tuple[PolyElement, ...]

    @classmethod
    def build(cls, alg: TrioleAlgebra, a=0, p=None, q=None) -> "TrioleElement":
        R = alg.ring
        p = tuple(R(x) for x in (p if p is not None else [0] * alg.m_P))
        q = tuple(R(x) for x in (q if q is not None else [0] * alg.m_Q))
        if len(p) != alg.m_P or len(q) != alg.m_Q:
            raise ShapeError(f"element parts must have lengths {alg.m_P} and {alg.m_Q}")
        return cls(R(a), p, q)

    @classmethod
    def from_vector(cls, alg: TrioleAlgebra, vector: Sequence) -> "TrioleElement":
        """Inverse of :meth:`as_vector` (block order A, P, Q)."""
        if len(vector) != alg.size:
            raise ShapeError(f"vector of length {len(vector)} for an algebra of size {alg.size}")
        return cls.build(alg, vector[0], vector[1:1 + alg.m_P], vector[1 + alg.m_P:])

    def as_vector(self) -> tuple:
        return (self.a,) + self.p + self.q

    def __add__(self, other: "TrioleElement") -> "TrioleElement":
        return TrioleElement(
            self.a + other.a,
            tuple(x + y for x, y in zip(self.p, other.p)),
            tuple(x + y for x, y in zip(self.q, other.q)),
        )

    def scale(self, c) -> "TrioleElement":
        return TrioleElement(c * self.a, tuple(c * x for x in self.p), tuple(c * x for x in self.q))

    @property
    def is_zero(self) -> bool:
        return not self.a and not any(self.p) and not any(self.q)


def basis_elements(alg: TrioleAlgebra) -> List[Tuple[str, TrioleElement, int]]:
    """Homogeneous generators (label, element, degree): 1, p1.., q1.."""
    R = alg.ring
    out = [("1", TrioleElement.build(alg, R.one), 0)]
    for alpha in range(alg.m_P):
        p = [R.zero] * alg.m_P
        p[alpha] = R.one
        out.append((f"p{alpha + 1}", TrioleElement.build(alg, 0, p), 1))
    for A in range(alg.m_Q):
        q = [R.zero] * alg.m_Q
        q[A] = R.one
        out.append((f"q{A + 1}", TrioleElement.build(alg, 0, None, q), 2))
    return out


def multiply(t1: TrioleElement, t2: TrioleElement, alg: TrioleAlgebra) -> TrioleElement:
    """(a1a2, a1p2 + a2p1, a1q2 + a2q1 + g(p1, p2)); Q·Q = 0."""
    for t in (t1, t2):
        if len(t.p) != alg.m_P or len(t.q) != alg.m_Q:
            raise ShapeError("element ranks do not match the algebra")
    a1, a2 = t1.a, t2.a
    pair = alg.pair(t1.p, t2.p)
    return TrioleElement(
        a1 * a2,
        tuple(a1 * y + a2 * x for x, y in zip(t1.p, t2.p)),
        tuple(a1 * y + a2 * x + g for x, y, g in zip(t1.q, t2.q, pair)),
    )


def symmetry_classes(g: Sequence[Matrix]) -> Tuple[str, ...]:
    """Conventions a metric satisfies: ``plain`` if symmetric, ``koszul`` if alternating."""
    symmetric = alternating = True
    for block in g:
        m = len(block)
        for a in range(m):
            for b in range(a, m):
                if block[a][b] != block[b][a]:
                    symmetric = False
                if block[a][b] != -block[b][a]:
                    alternating = False
    found = [name for name, holds in (("plain", symmetric), ("koszul", alternating)) if holds]
    return tuple(found) + ("none",)


def convention_for(g: Sequence[Matrix]) -> str:
    return symmetry_classes(g)[0]


def _symmetry_report(alg: TrioleAlgebra) -> Report:
    if alg.convention == "none":
        return Report.ok()
    s = 1 if alg.convention == "plain" else -1
    for A, block in enumerate(alg.g):
        for a in range(alg.m_P):
            for b in range(a, alg.m_P):
                if block[a][b] != s * block[b][a]:
                    return Report.fail(
                        [a + 1, b + 1],
                        f"metric component {A + 1} is not {'symmetric' if s > 0 else 'alternating'}",
                        component=A + 1,
                    )
    return Report.ok()


def _product_report(alg: TrioleAlgebra) -> Report:
    basis = basis_elements(alg)
    for (l1, t1, d1), (l2, t2, d2) in product(basis, repeat=2):
        swapped = multiply(t2, t1, alg)
        if alg.convention != "none" and multiply(t1, t2, alg) != swapped.scale(sign(alg.convention, d1, d2)):
            return Report.fail([l1, l2], "graded commutativity fails")
        if d1 == 2 and d2 == 2 and not multiply(t1, t2, alg).is_zero:
            return Report.fail([l1, l2], "Q·Q does not vanish")
    for (l1, t1, _), (l2, t2, _), (l3, t3, _) in product(basis, repeat=3):
        left = multiply(multiply(t1, t2, alg), t3, alg)
        right = multiply(t1, multiply(t2, t3, alg), alg)
        if left != right:
            return Report.fail([l1, l2, l3], "multiplication is not associative")
    return Report.ok()


def validate_algebra(alg: TrioleAlgebra) -> Report:
    """Symmetry per convention, graded commutativity, Q·Q = 0 and associativity on generators."""
    return combine({"symmetry": _symmetry_report(alg), "products": _product_report(alg)})


def adjoint_matrix(alg: TrioleAlgebra) -> Matrix:
    """g♯ as an (m_P·m_Q)×m_P matrix: row A·m_P + β, column α holds g^A_{αβ}."""
    rows = []
    for block in alg.g:
        for beta in range(alg.m_P):
            rows.append(tuple(block[alpha][beta] for alpha in range(alg.m_P)))
    return tuple(rows)


def adjoint_map(alg: TrioleAlgebra) -> MatDiffOp:
    return MatDiffOp.from_matrix(alg.ring, adjoint_matrix(alg))


def is_nondegenerate(alg: TrioleAlgebra) -> bool:
    """g♯ is injective over the fraction field."""
    return rank(adjoint_matrix(alg), alg.m_P, alg.ring) == alg.m_P


def quadratic_from_bilinear(alg: TrioleAlgebra, p: Sequence) -> Tuple[PolyElement, ...]:
    p = tuple(alg.ring(x) for x in p)
    return alg.pair(p, p)


@dataclass(frozen=True)
class TrioleMorphism:
    """(id_A, ψ1: P → P', ψ2: Q → Q')."""

    psi1: Matrix
    psi2: Matrix

    @classmethod
    def identity(cls, alg: TrioleAlgebra) -> "TrioleMorphism":
        return cls(identity(alg.ring, alg.m_P), identity(alg.ring, alg.m_Q))


def _morphism_residual(psi: TrioleMorphism, src: TrioleAlgebra, dst: TrioleAlgebra):
    """First (C, α, β) with g'(ψ1e_α, ψ1e_β)^C ≠ (ψ2 g(e_α, e_β))^C, 0-based."""
    R = src.ring
    psi1 = as_matrix(R, psi.psi1)
    psi2 = as_matrix(R, psi.psi2)
    for alpha in range(src.m_P):
        col_a = [row[alpha] for row in psi1]
        for beta in range(src.m_P):
            col_b = [row[beta] for row in psi1]
            lhs = dst.pair(col_a, col_b)
            rhs = mat_apply(psi2, [block[alpha][beta] for block in src.g], R)
            for C, (x, y) in enumerate(zip(lhs, rhs)):
                if x != y:
                    return C, alpha, beta
    return None


def validate_morphism(psi: TrioleMorphism, src: TrioleAlgebra, dst: TrioleAlgebra) -> Report:
    """Check g'∘(ψ1×ψ1) = ψ2∘g and classify as isometry, similarity, morphism or invalid."""
    if src.n_vars != dst.n_vars:
        raise RingMismatchError("morphisms fix the coordinate ring")
    if len(psi.psi1) != dst.m_P or any(len(row) != src.m_P for row in psi.psi1):
        raise ShapeError(f"psi1 must be {dst.m_P}x{src.m_P}")
    if len(psi.psi2) != dst.m_Q or any(len(row) != src.m_Q for row in psi.psi2):
        raise ShapeError(f"psi2 must be {dst.m_Q}x{src.m_Q}")
    R = src.ring
    witness = _morphism_residual(psi, src, dst)
    if witness is not None:
        C, alpha, beta = witness
        return Report.fail(
            [C + 1, alpha + 1, beta + 1], "metric relation fails", classification="invalid"
        )

    def unit(matrix) -> bool:
        return len(matrix) == len(matrix[0]) and is_unit(determinant(as_matrix(R, matrix), R))

    if unit(psi.psi1) and as_matrix(R, psi.psi2) == identity(R, src.m_Q) and src.m_Q == dst.m_Q:
        kind = "isometry"
    elif unit(psi.psi1) and unit(psi.psi2):
        kind = "similarity"
    else:
        kind = "morphism"
    return Report.ok(classification=kind)


def gauge_act(rho_P: Matrix, rho_Q: Matrix, alg: TrioleAlgebra) -> TrioleAlgebra:
    """(λg)(p1, p2) = ρ_Q g(ρ_P⁻¹p1, ρ_P⁻¹p2)."""
    R = alg.ring
    inv = inverse(as_matrix(R, rho_P), R)
    rho_Q = as_matrix(R, rho_Q)
    if not is_unit(determinant(rho_Q, R)):
        raise NonUnitDeterminantError("rho_Q is not invertible over the coordinate ring")
    m = alg.m_P
    pulled = []
    for block in alg.g:
        pulled.append(tuple(
            tuple(
                sum((inv[c][a] * block[c][d] * inv[d][b] for c in range(m) for d in range(m)), R.zero)
                for b in range(m)
            )
            for a in range(m)
        ))
    g = tuple(
        tuple(
            tuple(sum((rho_Q[A][B] * pulled[B][a][b] for B in range(alg.m_Q)), R.zero) for b in range(m))
            for a in range(m)
        )
        for A in range(alg.m_Q)
    )
    return alg.with_metric(g)


def orthogonal_sum(alg1: TrioleAlgebra, alg2: TrioleAlgebra) -> TrioleAlgebra:
    """Block-diagonal metric on P ⊕ P'."""
    if alg1.n_vars != alg2.n_vars:
        raise RingMismatchError("orthogonal sum needs a common coordinate ring")
    if alg1.m_Q != alg2.m_Q:
        raise ShapeError(f"Q-ranks differ: {alg1.m_Q} vs {alg2.m_Q}")
    R = alg1.ring
    m1, m2 = alg1.m_P, alg2.m_P
    g = []
    for b1, b2 in zip(alg1.g, alg2.g):
        block = [list(row) for row in zeros(R, m1 + m2, m1 + m2)]
        for a in range(m1):
            for b in range(m1):
                block[a][b] = b1[a][b]
        for a in range(m2):
            for b in range(m2):
                block[m1 + a][m1 + b] = b2[a][b]
        g.append(tuple(tuple(row) for row in block))
    convention = alg1.convention if alg1.convention == alg2.convention else "none"
    return TrioleAlgebra(alg1.n_vars, m1 + m2, alg1.m_Q, tuple(g), convention)


def _product_convention(c1: str, c2: str) -> str:
    if "none" in (c1, c2):
        return "none"
    if c1 == c2:
        return "plain"
    return "koszul"


def triolic_product(alg1: TrioleAlgebra, alg2: TrioleAlgebra) -> TrioleAlgebra:
    """Kronecker form on P ⊗ P' with values in Q ⊗ Q'."""
    if alg1.n_vars != alg2.n_vars:
        raise RingMismatchError("triolic product needs a common coordinate ring")
    g = tuple(kron(b1, b2) for b1 in alg1.g for b2 in alg2.g)
    convention = _product_convention(alg1.convention, alg2.convention)
    logger.debug(f"product of {alg1.convention} and {alg2.convention} metrics is {convention}")
    return TrioleAlgebra(alg1.n_vars, alg1.m_P * alg2.m_P, alg1.m_Q * alg2.m_Q, g, convention)


def _kron_power(matrix: Matrix, n: int, ring) -> Matrix:
    out = identity(ring, 1)
    for _ in range(n):
        out = kron(out, matrix)
    return out


def determinant_triole(alg: TrioleAlgebra, cap: int = 4) -> TrioleAlgebra:
    """det P with values in Q^{⊗m_P}; component (A1..An) is Σ_σ sgn σ Π_i g^{A_i}_{i,σ(i)}."""
    n = alg.m_P
    if n > cap:
        raise RankCapError(f"determinant triole of P-rank {n} exceeds cap {cap}")
    R = alg.ring
    signed = [(Permutation(list(perm)).signature(), perm) for perm in permutations(range(n))]
    g = []
    for components in product(range(alg.m_Q), repeat=n):
        acc = R.zero
        for sgn, perm in signed:
            term = R.one
            for i, A in enumerate(components):
                term *= alg.g[A][i][perm[i]]
                if not term:
                    break
            acc += sgn * term
        g.append(((acc,),))
    return TrioleAlgebra(alg.n_vars, 1, alg.m_Q ** n, tuple(g), "plain")


def determinant_morphism(psi: TrioleMorphism, n: int, ring) -> TrioleMorphism:
    """(det ψ1, ψ2^{⊗n}) between determinant trioles."""
    psi1 = as_matrix(ring, psi.psi1)
    if len(psi1) != n or any(len(row) != n for row in psi1):
        raise ShapeError(f"psi1 must be square of size {n}")
    return TrioleMorphism(((determinant(psi1, ring),),), _kron_power(as_matrix(ring, psi.psi2), n, ring))


@dataclass(frozen=True)
class Submodule:
    """Span of generator vectors in P; redundant generators are allowed."""

    generators: Tuple[tuple, ...]

    def contains(self, vector: Sequence, alg: TrioleAlgebra) -> bool:
        return in_span(vector, self.generators, alg.m_P, alg.ring)

    def is_subset(self, other: "Submodule", alg: TrioleAlgebra) -> bool:
        return all(other.contains(v, alg) for v in self.generators)

    def rank(self, alg: TrioleAlgebra) -> int:
        return rank(self.generators, alg.m_P, alg.ring)


def submodule(alg: TrioleAlgebra, vectors: Sequence[Sequence]) -> Submodule:
    vectors = [tuple(alg.ring(x) for x in v) for v in vectors]
    if any(len(v) != alg.m_P for v in vectors):
        raise ShapeError(f"submodule generators must have length {alg.m_P}")
    return Submodule(tuple(vectors))


def orthogonal_complement(S: Submodule, alg: TrioleAlgebra) -> Submodule:
    """Kernel of v ↦ (g(v, s))_s over the fraction field, as polynomial generators."""
    rows = []
    for s in S.generators:
        for block in alg.g:
            rows.append(tuple(
                sum((block[a][b] * s[b] for b in range(alg.m_P)), alg.ring.zero) for a in range(alg.m_P)
            ))
    return Submodule(tuple(kernel(rows, alg.m_P, alg.ring)))


def lagrangian_classify(S: Submodule, alg: TrioleAlgebra) -> str:
    perp = orthogonal_complement(S, alg)
    if not S.is_subset(perp, alg):
        return "none"
    if perp.is_subset(S, alg):
        return "lagrangian"
    return "sub_lagrangian"


def restrict_metric(S: Submodule, alg: TrioleAlgebra) -> TrioleAlgebra:
    """The sub-triole on the generators of S, with g|_S in the generator basis."""
    gens = S.generators
    if not gens:
        raise ShapeError("cannot restrict to an empty generator list")
    k = len(gens)
    pairs = [[alg.pair(gens[i], gens[j]) for j in range(k)] for i in range(k)]
    g = tuple(tuple(tuple(pairs[i][j][A] for j in range(k)) for i in range(k)) for A in range(alg.m_Q))
    return TrioleAlgebra(alg.n_vars, k, alg.m_Q, g, alg.convention)


def free_symmetric_triole(m: int, n_vars: int) -> TrioleAlgebra:
    """P of rank m, Q = Sym²P with basis e_i⊙e_j (i ≤ j), g the symmetrizer."""
    R = poly_ring(n_vars)
    pairs = [(i, j) for i in range(m) for j in range(i, m)]
    g = []
    for i, j in pairs:
        block = [list(row) for row in zeros(R, m, m)]
        block[i][j] = block[j][i] = R.one
        g.append(tuple(tuple(row) for row in block))
    return TrioleAlgebra(n_vars, m, len(pairs), tuple(g), "plain")


def _target_ring(alg: TrioleAlgebra, images: Sequence) -> PolyRing:
    if len(images) != alg.n_vars:
        raise SubstitutionError(f"expected {alg.n_vars} images, got {len(images)}")
    if not all(isinstance(f, PolyElement) for f in images):
        raise SubstitutionError("images must be polynomials")
    rings = {f.ring for f in images}
    if len(rings) != 1:
        raise SubstitutionError("images live in different rings")
    target = rings.pop()
    if target != poly_ring(target.ngens):
        raise SubstitutionError(f"images must live in a coordinate ring, got {target}")
    return target


def base_change(alg: TrioleAlgebra, images: Sequence) -> TrioleAlgebra:
    """Substitute x_i ↦ images[i] in every metric coefficient."""
    target = _target_ring(alg, images)
    g = tuple(
        tuple(tuple(substitute(x, images, target) for x in row) for row in block) for block in alg.g
    )
    return TrioleAlgebra(target.ngens, alg.m_P, alg.m_Q, g, alg.convention)


def base_change_morphism(psi: TrioleMorphism, alg: TrioleAlgebra, images: Sequence) -> TrioleMorphism:
    target = _target_ring(alg, images)
    R = alg.ring

    def sub(matrix):
        return tuple(tuple(substitute(R(x), images, target) for x in row) for row in matrix)

    return TrioleMorphism(sub(psi.psi1), sub(psi.psi2))


def monomial_elements(alg: TrioleAlgebra, degree_bound: int = 1) -> List[Tuple[str, TrioleElement, int]]:
    """x^μ · b for every generator b and monomial of degree ≤ ``degree_bound``."""
    R = alg.ring
    out = []
    for mu in monomials_up_to(alg.n_vars, degree_bound):
        m = monomial(R, mu)
        prefix = "" if not any(mu) else f"{m.as_expr()}*"
        for label, element, degree in basis_elements(alg):
            out.append((prefix + label, element.scale(m), degree))
    return out
