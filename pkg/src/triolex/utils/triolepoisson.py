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

"""Bi-derivations of a triole algebra, the Jacobi identity and Lie algebroids.

A bi-derivation of degree d is a bidifferential kernel on block coordinates (0 = A, then P, then Q):
each term (out, c1, c2, σ, τ) ↦ k contributes k·D_σ(t1[c1])·D_τ(t2[c2]) to coordinate ``out``,
where D_None is the identity and D_i = ∂/∂x_i.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from triolex.utils.errors import DegreeError, NotCharacterizedError, ShapeError
from triolex.utils.linalg import as_matrix
from triolex.utils.report import Report, combine
from triolex.utils.symkernel import ScalarDerivation, poly_ring
from triolex.utils.triolecore import TrioleAlgebra, TrioleElement, basis_elements, monomial_elements, multiply, sign

logger = logging.getLogger(__name__)

Key = Tuple[int, int, int, Optional[int], Optional[int]]
UNCHARACTERIZED = (-3, -4)


def coordinate_degree(alg: TrioleAlgebra, c: int) -> int:
    if c == 0:
        return 0
    return 1 if c <= alg.m_P else 2


def _p(alg: TrioleAlgebra, alpha: int) -> int:
    return 1 + alpha


def _q(alg: TrioleAlgebra, A: int) -> int:
    return 1 + alg.m_P + A


@dataclass(frozen=True, eq=False)
class BiDerivation:
    alg: TrioleAlgebra
    degree: int
    terms: Mapping[Key, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.degree in UNCHARACTERIZED:
            raise NotCharacterizedError(f"bi-derivations of degree {self.degree} are not characterized")
        if not -2 <= self.degree <= 2:
            raise DegreeError(f"no bi-derivations of degree {self.degree}")
        R, N, n = self.alg.ring, self.alg.size, self.alg.n_vars
        clean = {}
        for key, k in self.terms.items():
            out, c1, c2, s, t = key
            if not all(0 <= c < N for c in (out, c1, c2)):
                raise ShapeError(f"bi-derivation term {key} has a coordinate out of range")
            if any(x is not None and not 0 <= x < n for x in (s, t)):
                raise ShapeError(f"bi-derivation term {key} differentiates along a missing axis")
            k = R(k)
            if k:
                clean[tuple(key)] = clean.get(tuple(key), R.zero) + k
        object.__setattr__(self, "terms", {key: k for key, k in clean.items() if k})

    def __eq__(self, other):
        if not isinstance(other, BiDerivation):
            return NotImplemented
        return (self.alg, self.degree, self.terms) == (other.alg, other.degree, other.terms)

    def __hash__(self):
        return hash((self.alg, self.degree, frozenset(self.terms.items())))

    def __repr__(self):
        return f"BiDerivation(degree={self.degree}, terms={len(self.terms)})"

    def __call__(self, t1: TrioleElement, t2: TrioleElement) -> TrioleElement:
        R = self.alg.ring
        v1, v2 = t1.as_vector(), t2.as_vector()
        out = [R.zero] * self.alg.size
        for (o, c1, c2, s, t), k in self.terms.items():
            x, y = v1[c1], v2[c2]
            if not x or not y:
                continue
            if s is not None:
                x = x.diff(R.gens[s])
            if t is not None:
                y = y.diff(R.gens[t])
            if x and y:
                out[o] += k * x * y
        return TrioleElement.from_vector(self.alg, out)

    def __add__(self, other: "BiDerivation") -> "BiDerivation":
        if other.degree != self.degree or other.alg != self.alg:
            raise DegreeError("can only add bi-derivations of the same degree and algebra")
        terms = dict(self.terms)
        for key, k in other.terms.items():
            terms[key] = terms.get(key, self.alg.ring.zero) + k
        return BiDerivation(self.alg, self.degree, terms)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda item: tuple(-1 if x is None else x for x in item[0]))


def _mirror(alg: TrioleAlgebra, degree: int, terms: Dict[Key, object]) -> Dict[Key, object]:
    """Add the terms fixed by Π(t1, t2) = −ε(|t1|+d, |t2|+d) Π(t2, t1)."""
    out = dict(terms)
    R = alg.ring
    for (o, c1, c2, s, t), k in terms.items():
        eps = sign(alg.convention, coordinate_degree(alg, c2) + degree, coordinate_degree(alg, c1) + degree)
        key = (o, c2, c1, t, s)
        out[key] = out.get(key, R.zero) - eps * R(k)
    return out


def _bivector_terms(out: int, c1: int, c2: int, pi) -> Dict[Key, object]:
    n = len(pi)
    return {(out, c1, c2, i, j): pi[i][j] for i in range(n) for j in range(n) if pi[i][j]}


def _check_bivector(pi, n: int, ring):
    pi = as_matrix(ring, pi)
    if len(pi) != n or any(len(row) != n for row in pi):
        raise ShapeError(f"bivector must be {n}x{n}")
    return pi


def degree0(alg: TrioleAlgebra, pi, ap_matrices=None, aq_matrices=None, pp_terms=None) -> BiDerivation:
    """Degree-0 bi-derivation from its AA, AP, AQ and PP parts.

    Π(a, b) = π^{ij}∂_ia∂_jb; Π(a, p) = π^{ij}∂_ia∂_jp + ∂_ia·M_i p and likewise on Q;
    ``pp_terms`` maps (C, α, β, σ, τ) to coefficients of Π(p1, p2)^C, given for both orders.
    """
    R, n = alg.ring, alg.n_vars
    pi = _check_bivector(pi, n, R)
    terms: Dict[Key, object] = _bivector_terms(0, 0, 0, pi)
    half: Dict[Key, object] = {}
    for size, index, mats in ((alg.m_P, _p, ap_matrices), (alg.m_Q, _q, aq_matrices)):
        for b in range(size):
            for i, j in product(range(n), repeat=2):
                if pi[i][j]:
                    half[(index(alg, b), 0, index(alg, b), i, j)] = pi[i][j]
        if mats is None:
            continue
        if len(mats) != n:
            raise ShapeError(f"need one matrix per coordinate, got {len(mats)}")
        for i, M in enumerate(mats):
            M = as_matrix(R, M)
            for b, a in product(range(size), repeat=2):
                if M[b][a]:
                    half[(index(alg, b), 0, index(alg, a), i, None)] = M[b][a]
    terms.update(_mirror(alg, 0, half))
    for (C, a, b, s, t), k in (pp_terms or {}).items():
        key = (_q(alg, C), _p(alg, a), _p(alg, b), s, t)
        terms[key] = terms.get(key, R.zero) + R(k)
    return BiDerivation(alg, 0, terms)


def hamiltonian_lift(alg: TrioleAlgebra, pi) -> BiDerivation:
    """Lift of a bivector acting componentwise on P and Q, with Π(p1, p2) = π^{ij} g(∂_ip1, ∂_jp2).

    A bi-derivation for constant metrics.
    """
    R, n = alg.ring, alg.n_vars
    pi = _check_bivector(pi, n, R)
    pp = {}
    for C, a, b in product(range(alg.m_Q), range(alg.m_P), range(alg.m_P)):
        gab = alg.g[C][a][b]
        if not gab:
            continue
        for i, j in product(range(n), repeat=2):
            if pi[i][j]:
                pp[(C, a, b, i, j)] = pi[i][j] * gab
    return degree0(alg, pi, pp_terms=pp)


def perturb_pp(Pi: BiDerivation, L) -> BiDerivation:
    """Add the order-zero term Π(p1, p2)^C += Σ L[C][α][β] p1^α p2^β."""
    alg = Pi.alg
    if Pi.degree != 0:
        raise DegreeError("only degree 0 bi-derivations carry a PP part")
    terms = {}
    for C, block in enumerate(L):
        for a, row in enumerate(block):
            for b, x in enumerate(row):
                terms[(_q(alg, C), _p(alg, a), _p(alg, b), None, None)] = x
    return Pi + BiDerivation(alg, 0, terms)


def degree1(alg: TrioleAlgebra, pis, H=None) -> BiDerivation:
    """P-valued bivector Π(a, b)^α = π_α^{ij}∂_ia∂_jb, extended by Π(a, p) = g(π(∂a, ∂·), p) + ∂_ia·H_i p."""
    R, n = alg.ring, alg.n_vars
    if len(pis) != alg.m_P:
        raise ShapeError(f"need {alg.m_P} bivectors")
    pis = [_check_bivector(pi, n, R) for pi in pis]
    terms: Dict[Key, object] = {}
    for a, pi in enumerate(pis):
        terms.update(_bivector_terms(_p(alg, a), 0, 0, pi))
    half: Dict[Key, object] = {}
    for C, b in product(range(alg.m_Q), range(alg.m_P)):
        for i, j in product(range(n), repeat=2):
            k = sum((pis[a][i][j] * alg.g[C][a][b] for a in range(alg.m_P)), R.zero)
            if k:
                half[(_q(alg, C), 0, _p(alg, b), i, j)] = k
    if H is not None:
        for i, M in enumerate(H):
            M = as_matrix(R, M)
            for C, b in product(range(alg.m_Q), range(alg.m_P)):
                if M[C][b]:
                    half[(_q(alg, C), 0, _p(alg, b), i, None)] = M[C][b]
    terms.update(_mirror(alg, 1, half))
    return BiDerivation(alg, 1, terms)


def degree2(alg: TrioleAlgebra, pis) -> BiDerivation:
    """Q-valued bivector; every other pairing leaves the grading."""
    R, n = alg.ring, alg.n_vars
    if len(pis) != alg.m_Q:
        raise ShapeError(f"need {alg.m_Q} bivectors")
    terms: Dict[Key, object] = {}
    for C, pi in enumerate(pis):
        terms.update(_bivector_terms(_q(alg, C), 0, 0, _check_bivector(pi, n, R)))
    return BiDerivation(alg, 2, terms)


@dataclass(frozen=True)
class LieAlgebroid:
    """Free module of sections with [e_α, e_β] = Σ_γ c[γ][α][β] e_γ and anchors α(e_α)."""

    n_vars: int
    rank: int
    c: Tuple
    anchors: Tuple[ScalarDerivation, ...]

    def __post_init__(self):
        R = poly_ring(self.n_vars)
        if len(self.anchors) != self.rank:
            raise ShapeError(f"algebroid of rank {self.rank} needs {self.rank} anchors")
        if len(self.c) != self.rank or any(
            len(m) != self.rank or any(len(row) != self.rank for row in m) for m in self.c
        ):
            raise ShapeError(f"structure functions must have shape {self.rank}^3")
        object.__setattr__(self, "c", tuple(as_matrix(R, m) for m in self.c))
        object.__setattr__(self, "anchors", tuple(self.anchors))

    @classmethod
    def tangent(cls, n_vars: int) -> "LieAlgebroid":
        R = poly_ring(n_vars)
        c = [[[0] * n_vars for _ in range(n_vars)] for _ in range(n_vars)]
        return cls(n_vars, n_vars, c, tuple(ScalarDerivation.partial(R, i) for i in range(n_vars)))

    @classmethod
    def rank_one(cls, X: ScalarDerivation) -> "LieAlgebroid":
        """[s1 e, s2 e] = (s1X(s2) − s2X(s1))e with anchor X."""
        return cls(X.ring.ngens, 1, [[[0]]], (X,))

    @classmethod
    def abelian(cls, n_vars: int, rank: int) -> "LieAlgebroid":
        R = poly_ring(n_vars)
        c = [[[0] * rank for _ in range(rank)] for _ in range(rank)]
        return cls(n_vars, rank, c, tuple(ScalarDerivation.zero(R) for _ in range(rank)))

    @property
    def ring(self):
        return poly_ring(self.n_vars)

    def anchor(self, s: Sequence) -> ScalarDerivation:
        out = ScalarDerivation.zero(self.ring)
        for x, X in zip(s, self.anchors):
            if x:
                out = out + X.scale(x)
        return out

    def bracket(self, s1: Sequence, s2: Sequence) -> tuple:
        """[s1, s2] = Σ s1^α s2^β c_{αβ} + α(s1)(s2) − α(s2)(s1)."""
        R = self.ring
        a1, a2 = self.anchor(s1), self.anchor(s2)
        out = []
        for g in range(self.rank):
            acc = a1(R(s2[g])) - a2(R(s1[g]))
            for a, b in product(range(self.rank), repeat=2):
                if s1[a] and s2[b] and self.c[g][a][b]:
                    acc += s1[a] * s2[b] * self.c[g][a][b]
            out.append(acc)
        return tuple(out)

    def basis(self) -> List[tuple]:
        R = self.ring
        return [tuple(R.one if i == j else R.zero for j in range(self.rank)) for i in range(self.rank)]


def validate_algebroid(L: LieAlgebroid) -> Report:
    """Antisymmetry, Leibniz, Jacobi and anchor morphism on the basis sections."""
    R = L.ring
    e = L.basis()

    def antisymmetry():
        for a, b in product(range(L.rank), repeat=2):
            if L.bracket(e[a], e[b]) != tuple(-x for x in L.bracket(e[b], e[a])):
                return Report.fail([a + 1, b + 1], "bracket is not antisymmetric")
        return Report.ok()

    def leibniz():
        for a, b, i in product(range(L.rank), range(L.rank), range(L.n_vars)):
            x = R.gens[i]
            lhs = L.bracket(e[a], tuple(x * v for v in e[b]))
            da = L.anchors[a](x)
            rhs = tuple(da * u + x * v for u, v in zip(e[b], L.bracket(e[a], e[b])))
            if lhs != rhs:
                return Report.fail([a + 1, b + 1, i + 1], "Leibniz rule fails")
        return Report.ok()

    def jacobi():
        for a, b, c in product(range(L.rank), repeat=3):
            total = [R.zero] * L.rank
            for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
                for g, v in enumerate(L.bracket(e[x], L.bracket(e[y], e[z]))):
                    total[g] += v
            if any(total):
                return Report.fail([a + 1, b + 1, c + 1], "Jacobi identity fails")
        return Report.ok()

    def anchor():
        for a, b in product(range(L.rank), repeat=2):
            lhs = L.anchor(L.bracket(e[a], e[b]))
            rhs = L.anchors[a].bracket(L.anchors[b])
            if lhs != rhs:
                return Report.fail([a + 1, b + 1], "anchor is not a bracket morphism")
        return Report.ok()

    return combine({"antisymmetry": antisymmetry(), "leibniz": leibniz(), "jacobi": jacobi(), "anchor": anchor()})


def degree_minus1(alg: TrioleAlgebra, algebroid: LieAlgebroid, f=None, N=None) -> BiDerivation:
    """Degree −1 bi-derivation from a Lie algebroid on P.

    {p1, p2} = [p1, p2]_P, {p, a} = α(p)(a), {q, a} = f(q)(a) with f(q)(a)^γ = Σ_i ∂_ia F[i][γ][A] q^A,
    and {p, q} = α(p)(q) + Σ_α p^α N[α] q − g(f(q)(∂_i ·), ∂_i p).
    """
    R, n, m, mq = alg.ring, alg.n_vars, alg.m_P, alg.m_Q
    if algebroid.rank != m or algebroid.n_vars != n:
        raise ShapeError("the algebroid must live on P")
    terms: Dict[Key, object] = {}
    for g, a, b in product(range(m), repeat=3):
        if algebroid.c[g][a][b]:
            terms[(_p(alg, g), _p(alg, a), _p(alg, b), None, None)] = algebroid.c[g][a][b]
    for a, X in enumerate(algebroid.anchors):
        for i, k in enumerate(X.coeffs):
            if not k:
                continue
            for g in range(m):
                terms[(_p(alg, g), _p(alg, a), _p(alg, g), None, i)] = k
                key = (_p(alg, g), _p(alg, g), _p(alg, a), i, None)
                terms[key] = terms.get(key, R.zero) - k
    half: Dict[Key, object] = {}
    for a, X in enumerate(algebroid.anchors):
        for i, k in enumerate(X.coeffs):
            if k:
                half[(0, _p(alg, a), 0, None, i)] = k
                for C in range(mq):
                    half[(_q(alg, C), _p(alg, a), _q(alg, C), None, i)] = k
    if N is not None:
        for a, M in enumerate(N):
            M = as_matrix(R, M)
            for C, B in product(range(mq), repeat=2):
                if M[C][B]:
                    half[(_q(alg, C), _p(alg, a), _q(alg, B), None, None)] = M[C][B]
    if f is not None:
        if len(f) != n:
            raise ShapeError(f"f needs one {m}x{mq} matrix per coordinate")
        for i, F in enumerate(f):
            F = as_matrix(R, F)
            for g, A in product(range(m), range(mq)):
                if F[g][A]:
                    half[(_p(alg, g), _q(alg, A), 0, None, i)] = F[g][A]
            for C, b, A in product(range(mq), range(m), range(mq)):
                k = sum((F[g][A] * alg.g[C][g][b] for g in range(m)), R.zero)
                if k:
                    key = (_q(alg, C), _p(alg, b), _q(alg, A), i, None)
                    half[key] = half.get(key, R.zero) - k
    terms.update(_mirror(alg, -1, half))
    return BiDerivation(alg, -1, terms)


def degree_minus2(alg: TrioleAlgebra, algebroid: LieAlgebroid) -> BiDerivation:
    """{q1, q2} = [q1, q2]_Q, {q, a} = α(q)(a) and {q, p} = α(q) applied to each component of p.

    Leibniz on P·P additionally needs the anchor to vanish on the image of g; validation reports it.
    """
    R, mq = alg.ring, alg.m_Q
    if algebroid.rank != mq or algebroid.n_vars != alg.n_vars:
        raise ShapeError("the algebroid must live on Q")
    terms: Dict[Key, object] = {}
    for g, a, b in product(range(mq), repeat=3):
        if algebroid.c[g][a][b]:
            terms[(_q(alg, g), _q(alg, a), _q(alg, b), None, None)] = algebroid.c[g][a][b]
    half: Dict[Key, object] = {}
    for a, X in enumerate(algebroid.anchors):
        for i, k in enumerate(X.coeffs):
            if not k:
                continue
            half[(0, _q(alg, a), 0, None, i)] = k
            for g in range(alg.m_P):
                half[(_p(alg, g), _q(alg, a), _p(alg, g), None, i)] = k
            for g in range(mq):
                terms[(_q(alg, g), _q(alg, a), _q(alg, g), None, i)] = k
                key = (_q(alg, g), _q(alg, g), _q(alg, a), i, None)
                terms[key] = terms.get(key, R.zero) - k
    terms.update(_mirror(alg, -2, half))
    return BiDerivation(alg, -2, terms)


def _skew_report(Pi: BiDerivation, elements) -> Report:
    alg, d = Pi.alg, Pi.degree
    for (l1, t1, d1), (l2, t2, d2) in product(elements, repeat=2):
        eps = sign(alg.convention, d1 + d, d2 + d)
        if Pi(t1, t2) != Pi(t2, t1).scale(-eps):
            return Report.fail([l1, l2], "graded skew-symmetry fails")
    return Report.ok()


def _grading_report(Pi: BiDerivation) -> Report:
    alg = Pi.alg
    for (o, c1, c2, s, t), _ in Pi.sorted_terms():
        expected = coordinate_degree(alg, c1) + coordinate_degree(alg, c2) + Pi.degree
        if coordinate_degree(alg, o) != expected:
            return Report.fail([o, c1, c2], f"term lands in degree {coordinate_degree(alg, o)}, expected {expected}")
    return Report.ok()


def _leibniz_report(Pi: BiDerivation, elements) -> Report:
    alg, d = Pi.alg, Pi.degree
    for (l1, t1, d1), (l2, t2, d2), (l3, t3, _) in product(elements, repeat=3):
        lhs = Pi(t1, multiply(t2, t3, alg))
        rhs = multiply(Pi(t1, t2), t3, alg) + multiply(t2, Pi(t1, t3), alg).scale(
            sign(alg.convention, d1 + d, d2)
        )
        if lhs != rhs:
            return Report.fail([l1, l2, l3], "Leibniz rule fails in the second slot")
    return Report.ok()


def validate_biderivation(Pi: BiDerivation, alg: TrioleAlgebra, degree_bound: int = 1) -> Report:
    """Grading, graded skew-symmetry and Leibniz in the second slot on monomial test elements."""
    if Pi.alg != alg:
        raise ShapeError("bi-derivation belongs to a different algebra")
    elements = monomial_elements(alg, degree_bound)
    return combine({
        "grading": _grading_report(Pi),
        "skew": _skew_report(Pi, elements),
        "leibniz": _leibniz_report(Pi, elements),
    })


def jacobiator(Pi: BiDerivation, t1, d1: int, t2, d2: int, t3) -> TrioleElement:
    """{t1,{t2,t3}} − {{t1,t2},t3} − ε(|t1|+d, |t2|+d){t2,{t1,t3}}."""
    eps = sign(Pi.alg.convention, d1 + Pi.degree, d2 + Pi.degree)
    return Pi(t1, Pi(t2, t3)) + Pi(Pi(t1, t2), t3).scale(-1) + Pi(t2, Pi(t1, t3)).scale(-eps)


def schouten_square(Pi: BiDerivation, alg: TrioleAlgebra, degree_bound: int = 1, types=None) -> Report:
    """[[Π, Π]] = 0, evaluated as the Jacobiator on monomial test triples.

    The Jacobiator of a bi-derivation is a derivation in each slot, so triples of degree ≤ 1
    determine it. ``types`` restricts to triples whose sorted degrees are listed.
    """
    elements = monomial_elements(alg, degree_bound)
    checked = 0
    for (l1, t1, d1), (l2, t2, d2), (l3, t3, d3) in product(elements, repeat=3):
        if types is not None and tuple(sorted((d1, d2, d3))) not in types:
            continue
        checked += 1
        if not jacobiator(Pi, t1, d1, t2, d2, t3).is_zero:
            return Report.fail([l1, l2, l3], "Jacobi identity fails", checked=checked)
    return Report.ok(checked=checked)


POISSON_CONDITIONS = {
    "cond1": (0, 0, 0),
    "cond2": (0, 0, 1),
    "cond3": (0, 0, 2),
    "cond4": (0, 1, 1),
}


def poisson_check_deg0(Pi: BiDerivation, alg: TrioleAlgebra, degree_bound: int = 1) -> Report:
    """The four Jacobi families of a degree-0 bracket: AAA, AAP, AAQ and APP."""
    if Pi.degree != 0:
        raise DegreeError("the Poisson system is stated for degree 0 bi-derivations")
    results = {
        name: schouten_square(Pi, alg, degree_bound, types={kind})
        for name, kind in POISSON_CONDITIONS.items()
    }
    flags = {name: r.valid for name, r in results.items()}
    schouten = schouten_square(Pi, alg, degree_bound)
    details = dict(flags, schouten_zero=schouten.valid)
    if all(flags.values()):
        return Report.ok(**details)
    name = next(name for name, ok in flags.items() if not ok)
    return Report.fail(results[name].witness, f"{name} fails", **details)


def extract_algebroid_minus1(Pi: BiDerivation) -> LieAlgebroid:
    """Read (P, [,]_P, α) off a degree −1 bi-derivation."""
    alg = Pi.alg
    R, m = alg.ring, alg.m_P
    e = [TrioleElement.build(alg, 0, [int(i == a) for i in range(m)]) for a in range(m)]
    c = [[[R.zero] * m for _ in range(m)] for _ in range(m)]
    for a, b in product(range(m), repeat=2):
        for g, v in enumerate(Pi(e[a], e[b]).p):
            c[g][a][b] = v
    anchors = []
    for a in range(m):
        anchors.append(ScalarDerivation(R, tuple(Pi(e[a], TrioleElement.build(alg, x)).a for x in R.gens)))
    return LieAlgebroid(alg.n_vars, m, c, tuple(anchors))


def extract_algebroid_minus2(Pi: BiDerivation) -> LieAlgebroid:
    alg = Pi.alg
    R, mq = alg.ring, alg.m_Q
    e = [TrioleElement.build(alg, 0, None, [int(i == a) for i in range(mq)]) for a in range(mq)]
    c = [[[R.zero] * mq for _ in range(mq)] for _ in range(mq)]
    for a, b in product(range(mq), repeat=2):
        for g, v in enumerate(Pi(e[a], e[b]).q):
            c[g][a][b] = v
    anchors = [
        ScalarDerivation(R, tuple(Pi(e[a], TrioleElement.build(alg, x)).a for x in R.gens)) for a in range(mq)
    ]
    return LieAlgebroid(alg.n_vars, mq, c, tuple(anchors))


def _strings(values) -> List[str]:
    return [str(x.as_expr()) for x in values]


def _der_pair_residuals(Pi: BiDerivation, alg: TrioleAlgebra, ps) -> List[Tuple[list, TrioleElement]]:
    """{p, g(p1, p2)} − g({p, p1}, p2) − g(p1, {p, p2}) on every triple of test sections."""
    out = []
    for (l0, p), (l1, p1), (l2, p2) in product(ps, repeat=3):
        rhs = multiply(Pi(p, p1), p2, alg) + multiply(p1, Pi(p, p2), alg)
        r = Pi(p, multiply(p1, p2, alg)) + rhs.scale(-1)
        if not r.is_zero:
            out.append(([l0, l1, l2], r))
    return out


def _f_compat_residuals(Pi: BiDerivation, alg: TrioleAlgebra, degree_bound: int) -> List[Tuple[list, TrioleElement]]:
    """The Jacobiator on (p, q, a) triples; it lands in P."""
    elements = monomial_elements(alg, degree_bound)
    by_degree = {d: [(l, t) for l, t, dd in elements if dd == d] for d in (0, 1, 2)}
    out = []
    for (l1, t1), (l2, t2), (l3, t3) in product(by_degree[1], by_degree[2], by_degree[0]):
        r = jacobiator(Pi, t1, 1, t2, 2, t3)
        if not r.is_zero:
            out.append(([l1, l2, l3], r))
    return out


def z_pair(Pi: BiDerivation, alg: TrioleAlgebra) -> List[Dict[str, list]]:
    """({p_α, −}_P, {p_α, −}_Q) on the generators: row β of "P" is {p_α, p_β}, row B of "Q" is {p_α, q_B}."""
    gens = basis_elements(alg)
    ps = [t for _, t, d in gens if d == 1]
    qs = [t for _, t, d in gens if d == 2]
    return [
        {"P": [_strings(Pi(p, p1).p) for p1 in ps], "Q": [_strings(Pi(p, q).q) for q in qs]}
        for p in ps
    ]


def algebroid_from_deg_minus1(Pi: BiDerivation, alg: TrioleAlgebra, degree_bound: int = 1) -> Report:
    """The Lie algebroid (P, [,]_P, α) carried by a degree −1 bi-derivation.

    ``valid`` is the algebroid verdict. The compatibility of {p, −} with g and the
    f-compatibility Jacobiator are reported next to it under ``checks``, with their
    nonzero residuals under ``residual`` and the Der-pair values under ``z_pair``.
    """
    if Pi.degree != -1:
        raise DegreeError("a degree −1 bi-derivation is required")
    algebroid = extract_algebroid_minus1(Pi)
    ps = [(l, t) for l, t, d in monomial_elements(alg, degree_bound) if d == 1]
    der_pair = _der_pair_residuals(Pi, alg, ps)
    f_compat = _f_compat_residuals(Pi, alg, degree_bound)
    report = validate_algebroid(algebroid)
    checks = {"algebroid": report.valid, "der_pair": not der_pair, "f_compat": not f_compat}
    if not all(checks.values()):
        logger.debug(f"degree −1 compatibility: {checks}")
    details = dict(
        algebroid=_algebroid_dict(algebroid),
        axioms=report.details["checks"],
        checks=checks,
        z_pair=z_pair(Pi, alg),
        residual={
            "der_pair": [{"at": at, "value": _strings(r.q)} for at, r in der_pair],
            "f_compat": [{"at": at, "value": _strings(r.p)} for at, r in f_compat],
        },
    )
    return Report(report.valid, report.witness, report.message, details)


def algebroid_from_deg_minus2(Pi: BiDerivation, alg: TrioleAlgebra) -> Report:
    if Pi.degree != -2:
        raise DegreeError("a degree −2 bi-derivation is required")
    algebroid = extract_algebroid_minus2(Pi)
    report = validate_algebroid(algebroid)
    return Report(report.valid, report.witness, report.message, dict(report.details, algebroid=_algebroid_dict(algebroid)))


def _algebroid_dict(L: LieAlgebroid) -> Dict:
    return {
        "rank": L.rank,
        "c": [[[str(x.as_expr()) for x in row] for row in m] for m in L.c],
        "anchors": [[str(x.as_expr()) for x in X.coeffs] for X in L.anchors],
    }
