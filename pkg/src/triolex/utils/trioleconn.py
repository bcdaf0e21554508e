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

"""Triolic connections ∇_i = ∂_i + Γ_i on P and ∂_i + Υ_i on Q.

``Gamma[i]`` is the m_P×m_P matrix of ∇_i, so (∇_i p)^β = ∂_i p^β + Σ_α Gamma[i][β][α] p^α.
The coordinate frame is holonomic: the ∂_i commute.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from sympy.polys.domains import QQ

from triolex.utils.errors import RankCapError, ShapeError, UnknownObjectError
from triolex.utils.linalg import (
    Matrix,
    as_matrix,
    commutator,
    determinant,
    first_nonzero,
    identity,
    inverse,
    is_unit,
    is_zero_matrix,
    kron,
    kron_sum,
    mat_add,
    mat_apply,
    mat_diff,
    mat_mul,
    mat_neg,
    mat_sub,
    qq_nullspace,
    transpose,
    zeros,
)
from triolex.utils.report import Report
from triolex.utils.symkernel import ScalarDerivation, embed, fiber_ring, monomial, monomials_up_to, poly_ring
from triolex.utils.triolecore import TrioleAlgebra
from triolex.utils.triolederiv import GradedDerivation, degree0_residual

logger = logging.getLogger(__name__)

INDUCED_KINDS = ("dual", "tensorP", "end", "bil")


@dataclass(frozen=True)
class TriConnection:
    Gamma: Tuple[Matrix, ...]
    Upsilon: Tuple[Matrix, ...]

    @classmethod
    def build(cls, alg: TrioleAlgebra, Gamma=None, Upsilon=None) -> "TriConnection":
        """Missing parts are zero."""
        R, n = alg.ring, alg.n_vars
        Gamma = Gamma if Gamma is not None else [zeros(R, alg.m_P, alg.m_P)] * n
        Upsilon = Upsilon if Upsilon is not None else [zeros(R, alg.m_Q, alg.m_Q)] * n
        if len(Gamma) != n or len(Upsilon) != n:
            raise ShapeError(f"a connection needs {n} Christoffel matrices per module")
        Gamma = tuple(as_matrix(R, m) for m in Gamma)
        Upsilon = tuple(as_matrix(R, m) for m in Upsilon)
        for m in Gamma:
            if len(m) != alg.m_P or any(len(row) != alg.m_P for row in m):
                raise ShapeError(f"Gamma matrices must be {alg.m_P}x{alg.m_P}")
        for m in Upsilon:
            if len(m) != alg.m_Q or any(len(row) != alg.m_Q for row in m):
                raise ShapeError(f"Upsilon matrices must be {alg.m_Q}x{alg.m_Q}")
        return cls(Gamma, Upsilon)

    def splitting(self, i: int, alg: TrioleAlgebra) -> GradedDerivation:
        """∇_{∂_i} as a degree-0 derivation with symbol ∂_i."""
        X = ScalarDerivation.partial(alg.ring, i)
        return GradedDerivation.degree0(alg, X, self.Gamma[i], self.Upsilon[i])


@dataclass(frozen=True)
class CurvatureTensor:
    """RP[i][j] and RQ[i][j] are the curvature matrices on P and Q."""

    RP: Tuple[Tuple[Matrix, ...], ...]
    RQ: Tuple[Tuple[Matrix, ...], ...]

    def nonzero_components(self) -> List[Dict]:
        out = []
        for name, family in (("P", self.RP), ("Q", self.RQ)):
            for i, j in combinations(range(len(family)), 2):
                if not is_zero_matrix(family[i][j]):
                    out.append({
                        "module": name,
                        "i": i + 1,
                        "j": j + 1,
                        "matrix": [[str(x.as_expr()) for x in row] for row in family[i][j]],
                    })
        return out

    @property
    def is_flat(self) -> bool:
        return not self.nonzero_components()


def _curvature_family(mats: Sequence[Matrix], ring) -> Tuple[Tuple[Matrix, ...], ...]:
    n = len(mats)
    gens = ring.gens
    return tuple(
        tuple(
            mat_add(mat_sub(mat_diff(mats[j], gens[i]), mat_diff(mats[i], gens[j])), commutator(mats[i], mats[j]))
            for j in range(n)
        )
        for i in range(n)
    )


def curvature(C: TriConnection, alg: TrioleAlgebra) -> CurvatureTensor:
    """R_ij = ∂_iΓ_j − ∂_jΓ_i + Γ_iΓ_j − Γ_jΓ_i, on P and on Q."""
    R = alg.ring
    return CurvatureTensor(_curvature_family(C.Gamma, R), _curvature_family(C.Upsilon, R))


def compat_residual(C: TriConnection, alg: TrioleAlgebra):
    """r[i][B][α][β] = ∂_i g^B_{αβ} + Σ_A Υ_i[B][A] g^A_{αβ} − Σ_γ (g^B_{γβ} Γ_i[γ][α] + g^B_{αγ} Γ_i[γ][β])."""
    return tuple(degree0_residual(C.splitting(i, alg), alg) for i in range(alg.n_vars))


def _first_nonzero_residual(residual) -> Optional[List[int]]:
    for i, family in enumerate(residual):
        for B, block in enumerate(family):
            hit = first_nonzero(block)
            if hit is not None:
                return [i + 1, B + 1, hit[0] + 1, hit[1] + 1]
    return None


def image_residual(curv: CurvatureTensor, alg: TrioleAlgebra, i: int, j: int):
    """RQ_ij∘g − g(RP_ij ·, ·) − g(·, RP_ij ·), indexed [B][α][β]."""
    RP, RQ = curv.RP[i][j], curv.RQ[i][j]
    m, R = alg.m_P, alg.ring
    out = []
    for B in range(alg.m_Q):
        gB = alg.g[B]
        rows = []
        for a in range(m):
            row = []
            for b in range(m):
                r = sum((RQ[B][A] * alg.g[A][a][b] for A in range(alg.m_Q)), R.zero)
                for c in range(m):
                    r -= gB[c][b] * RP[c][a] + gB[a][c] * RP[c][b]
                row.append(r)
            rows.append(tuple(row))
        out.append(tuple(rows))
    return tuple(out)


def curvature_symmetry_report(C: TriConnection, alg: TrioleAlgebra, curv: Optional[CurvatureTensor] = None) -> Report:
    """The curvature acts on (P, Q) preserving g."""
    curv = curv or curvature(C, alg)
    for i, j in combinations(range(alg.n_vars), 2):
        for B, block in enumerate(image_residual(curv, alg, i, j)):
            hit = first_nonzero(block)
            if hit is not None:
                return Report.fail([i + 1, j + 1], "curvature does not preserve g", component=[B + 1, hit[0] + 1, hit[1] + 1])
    return Report.ok()


def flat_check(C: TriConnection, alg: TrioleAlgebra) -> Report:
    """Flat iff RP = RQ = 0 and the curvature identity on im(g) holds; compatibility is reported alongside."""
    curv = curvature(C, alg)
    witness = None
    rp_zero = rq_zero = True
    for i, j in combinations(range(alg.n_vars), 2):
        if not is_zero_matrix(curv.RP[i][j]):
            rp_zero = False
            witness = witness or [i + 1, j + 1]
        if not is_zero_matrix(curv.RQ[i][j]):
            rq_zero = False
            witness = witness or [i + 1, j + 1]
    image = curvature_symmetry_report(C, alg, curv)
    compat = _first_nonzero_residual(compat_residual(C, alg)) is None
    implication = not (rp_zero and rq_zero and compat) or image.valid
    valid = rp_zero and rq_zero and image.valid
    details = {
        "rp_zero": rp_zero,
        "rq_zero": rq_zero,
        "image_identity": image.valid,
        "compatible": compat,
        "implication": implication,
        "curvature": curv.nonzero_components(),
    }
    if valid:
        return Report.ok(**details)
    return Report.fail(witness or image.witness, "connection is not flat", **details)


def validate_connection(C: TriConnection, alg: TrioleAlgebra) -> Report:
    """Metric compatibility ∇_i g = 0; the witness is the 1-based (i, B, α, β) of the first nonzero residual."""
    hit = _first_nonzero_residual(compat_residual(C, alg))
    if hit is None:
        return Report.ok()
    return Report.fail(hit, "connection does not preserve g")


def linear_vectorfield_residual(C: TriConnection, alg: TrioleAlgebra):
    """∂u_j/∂x_i + u_i·∂u_j/∂u − (i↔j) for u_i = −Γ_i u on fiber variables u.

    Indexed [i][j][α]; polynomials live in QQ[x, u].
    """
    n, m = alg.n_vars, alg.m_P
    F = fiber_ring(n, m)
    u = F.gens[n:]
    flows = []
    for G in C.Gamma:
        flows.append(tuple(
            -sum((embed(G[a][b], F) * u[b] for b in range(m)), F.zero) for a in range(m)
        ))

    def lie(i, j):
        return tuple(
            flows[j][a].diff(F.gens[i]) + sum((flows[i][b] * flows[j][a].diff(u[b]) for b in range(m)), F.zero)
            for a in range(m)
        )

    return tuple(
        tuple(tuple(x - y for x, y in zip(lie(i, j), lie(j, i))) for j in range(n)) for i in range(n)
    )


def _tensor_action(mats: Sequence[Matrix], ring) -> Matrix:
    """Σ over slots of I ⊗ … ⊗ M_slot ⊗ … ⊗ I."""
    sizes = [len(m) for m in mats]
    total = None
    for slot, m in enumerate(mats):
        term = identity(ring, 1)
        for other, size in enumerate(sizes):
            term = kron(term, m if other == slot else identity(ring, size))
        total = term if total is None else mat_add(total, term)
    return total


def induced_connection(C: TriConnection, kind: str, alg: TrioleAlgebra, other: Optional[TriConnection] = None):
    """Christoffel matrices of the connection induced on P*, P⊗P', End(P) or Hom(P⊗P, Q)."""
    R = alg.ring
    if kind == "dual":
        return tuple(mat_neg(transpose(G)) for G in C.Gamma)
    if kind == "tensorP":
        second = other or C
        return tuple(kron_sum(G, H, R) for G, H in zip(C.Gamma, second.Gamma))
    if kind == "end":
        return tuple(kron_sum(G, mat_neg(transpose(G)), R) for G in C.Gamma)
    if kind == "bil":
        return tuple(
            _tensor_action([mat_neg(transpose(G)), mat_neg(transpose(G)), U], R)
            for G, U in zip(C.Gamma, C.Upsilon)
        )
    raise UnknownObjectError(f"unknown induced connection kind {kind!r}; expected one of {INDUCED_KINDS}")


def metric_vector(alg: TrioleAlgebra) -> tuple:
    """g flattened in (α, β, B) order, the layout of the ``bil`` connection."""
    return tuple(alg.g[B][a][b] for a in range(alg.m_P) for b in range(alg.m_P) for B in range(alg.m_Q))


def covariant_derivative_of_metric(C: TriConnection, alg: TrioleAlgebra):
    """∇_i g through the induced connection on Hom(P⊗P, Q)."""
    R = alg.ring
    vec = metric_vector(alg)
    out = []
    for i, Sigma in enumerate(induced_connection(C, "bil", alg)):
        action = mat_apply(Sigma, vec, R)
        out.append(tuple(x.diff(R.gens[i]) + y for x, y in zip(vec, action)))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class PForm:
    """A P-valued k-form: ``coeffs`` maps increasing index tuples to P-vectors."""

    n_vars: int
    rank: int
    k: int
    coeffs: Mapping[Tuple[int, ...], tuple] = field(default_factory=dict)

    def __post_init__(self):
        R = poly_ring(self.n_vars)
        clean = {}
        for J, v in self.coeffs.items():
            J = tuple(J)
            if len(J) != self.k or list(J) != sorted(set(J)) or any(not 0 <= j < self.n_vars for j in J):
                raise ShapeError(f"form index {J} is not an increasing {self.k}-tuple")
            if len(v) != self.rank:
                raise ShapeError(f"form values must have length {self.rank}")
            v = tuple(R(x) for x in v)
            if any(v):
                clean[J] = v
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def section(cls, alg: TrioleAlgebra, p: Sequence) -> "PForm":
        return cls(alg.n_vars, alg.m_P, 0, {(): tuple(p)})

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def component(self, J) -> tuple:
        return self.coeffs.get(tuple(J), (poly_ring(self.n_vars).zero,) * self.rank)

    def scale(self, a) -> "PForm":
        return PForm(self.n_vars, self.rank, self.k, {J: tuple(a * x for x in v) for J, v in self.coeffs.items()})

    def __add__(self, other: "PForm") -> "PForm":
        if (self.k, self.rank) != (other.k, other.rank):
            raise ShapeError("cannot add forms of different degree or rank")
        keys = set(self.coeffs) | set(other.coeffs)
        return PForm(self.n_vars, self.rank, self.k, {
            J: tuple(x + y for x, y in zip(self.component(J), other.component(J))) for J in keys
        })

    def __eq__(self, other):
        if not isinstance(other, PForm):
            return NotImplemented
        return (self.n_vars, self.rank, self.k, self.coeffs) == (other.n_vars, other.rank, other.k, other.coeffs)

    def __hash__(self):
        return hash((self.n_vars, self.rank, self.k, frozenset(self.coeffs.items())))


def covariant_d(omega: PForm, C: TriConnection, alg: TrioleAlgebra) -> PForm:
    """(d_∇ω)_J = Σ_l (−1)^l (∂_{j_l} + Γ_{j_l}) ω_{J∖j_l}."""
    R, n = alg.ring, alg.n_vars
    out = {}
    for J in combinations(range(n), omega.k + 1):
        acc = [R.zero] * alg.m_P
        for l, j in enumerate(J):
            v = omega.component(J[:l] + J[l + 1:])
            if not any(v):
                continue
            moved = mat_apply(C.Gamma[j], v, R)
            s = -1 if l % 2 else 1
            for b in range(alg.m_P):
                acc[b] += s * (v[b].diff(R.gens[j]) + moved[b])
        out[J] = tuple(acc)
    return PForm(n, alg.m_P, omega.k + 1, out)


def curvature_wedge(curv: CurvatureTensor, omega: PForm, alg: TrioleAlgebra) -> PForm:
    """(R∧ω)_J = Σ_{a<b} (−1)^{a+b−1} R_{j_a j_b} ω_{J∖{j_a, j_b}}."""
    R, n = alg.ring, alg.n_vars
    out = {}
    for J in combinations(range(n), omega.k + 2):
        acc = [R.zero] * alg.m_P
        for a, b in combinations(range(len(J)), 2):
            rest = tuple(x for t, x in enumerate(J) if t not in (a, b))
            v = omega.component(rest)
            if not any(v):
                continue
            moved = mat_apply(curv.RP[J[a]][J[b]], v, R)
            s = -1 if (a + b) % 2 == 0 else 1
            for c in range(alg.m_P):
                acc[c] += s * moved[c]
        out[J] = tuple(acc)
    return PForm(n, alg.m_P, omega.k + 2, out)


def scalar_wedge(a, omega: PForm, alg: TrioleAlgebra) -> PForm:
    """da ∧ ω."""
    R, n = alg.ring, alg.n_vars
    out = {}
    for J in combinations(range(n), omega.k + 1):
        acc = [R.zero] * alg.m_P
        for l, j in enumerate(J):
            da = a.diff(R.gens[j])
            if not da:
                continue
            s = -1 if l % 2 else 1
            for b, x in enumerate(omega.component(J[:l] + J[l + 1:])):
                acc[b] += s * da * x
        out[J] = tuple(acc)
    return PForm(n, alg.m_P, omega.k + 1, out)


def d_squared_vs_curvature(omega: PForm, C: TriConnection, alg: TrioleAlgebra) -> Report:
    """d_∇(d_∇ω) = R∧ω."""
    if omega.k + 2 > alg.n_vars:
        return Report.ok("vacuous", lhs_zero=True, rhs_zero=True)
    lhs = covariant_d(covariant_d(omega, C, alg), C, alg)
    rhs = curvature_wedge(curvature(C, alg), omega, alg)
    details = {"lhs_zero": lhs.is_zero, "rhs_zero": rhs.is_zero}
    if lhs == rhs:
        return Report.ok(**details)
    J = next(J for J in sorted(set(lhs.coeffs) | set(rhs.coeffs)) if lhs.component(J) != rhs.component(J))
    return Report.fail([j + 1 for j in J], "d∇∘d∇ ≠ R∧ω", **details)


def nabla_constant_sections(C: TriConnection, alg: TrioleAlgebra, d_max: int) -> List[tuple]:
    """Basis of {p : ∇_i p = 0 for all i} among sections of degree ≤ d_max."""
    R, m = alg.ring, alg.m_P
    unknowns = [(a, mu) for a in range(m) for mu in monomials_up_to(alg.n_vars, d_max)]
    columns = []
    for a, mu in unknowns:
        p = [R.zero] * m
        p[a] = monomial(R, mu)
        image = {}
        for i in range(alg.n_vars):
            moved = mat_apply(C.Gamma[i], p, R)
            for b in range(m):
                for mono, c in (p[b].diff(R.gens[i]) + moved[b]).items():
                    image[(i, b, mono)] = image.get((i, b, mono), QQ.zero) + c
        columns.append(image)
    keys = sorted({key for col in columns for key in col})
    rows = [[col.get(key, QQ.zero) for col in columns] for key in keys]
    basis = []
    for vector in qq_nullspace(rows, len(unknowns)):
        p = [R.zero] * m
        for (a, mu), c in zip(unknowns, vector):
            if c:
                p[a] += monomial(R, mu) * c
        basis.append(tuple(p))
    logger.debug(f"found {len(basis)} covariantly constant sections of degree ≤ {d_max}")
    return basis


def pure_gauge(S: Matrix, alg: TrioleAlgebra) -> TriConnection:
    """Γ_i = S⁻¹∂_iS, flat by construction."""
    R = alg.ring
    S = as_matrix(R, S)
    inv = inverse(S, R)
    return TriConnection.build(alg, [mat_mul(inv, mat_diff(S, x), R) for x in R.gens])


def gauge_transform(C: TriConnection, S: Matrix, alg: TrioleAlgebra, T: Optional[Matrix] = None) -> TriConnection:
    """Γ' = S⁻¹ΓS + S⁻¹∂S on P, likewise with T on Q when given."""
    R = alg.ring

    def move(mats, M):
        M = as_matrix(R, M)
        inv = inverse(M, R)
        return [mat_add(mat_mul(mat_mul(inv, G, R), M, R), mat_mul(inv, mat_diff(M, x), R)) for G, x in zip(mats, R.gens)]

    Upsilon = move(C.Upsilon, T) if T is not None else C.Upsilon
    return TriConnection.build(alg, move(C.Gamma, S), Upsilon)


def preserves_endomorphism(C: TriConnection, phi: Matrix, alg: TrioleAlgebra) -> bool:
    """∂_iφ + Γ_iφ − φΓ_i = 0 for every i."""
    R = alg.ring
    phi = as_matrix(R, phi)
    return all(
        is_zero_matrix(mat_add(mat_diff(phi, x), commutator(G, phi)))
        for G, x in zip(C.Gamma, R.gens)
    )


def tensor_connection(G: Matrix, valence: Tuple[int, int], ring) -> Matrix:
    """Γ acting on P^{⊗p} ⊗ (P*)^{⊗q}, slots in that order."""
    p, q = valence
    return _tensor_action([G] * p + [mat_neg(transpose(G))] * q, ring)


def _check_valence(valence: Tuple[int, int], cap: int):
    p, q = valence
    if p < 0 or q < 0 or p + q == 0:
        raise ShapeError(f"invalid valence {valence}")
    if p + q > cap:
        raise RankCapError(f"tensor valence {p + q} exceeds cap {cap}")


def preserves_tensor(C: TriConnection, tensor: Sequence, valence: Tuple[int, int], alg: TrioleAlgebra, cap: int = 3) -> bool:
    """∇_i Ξ = 0 for a tensor Ξ flattened row-major over its p + q slots."""
    _check_valence(valence, cap)
    R = alg.ring
    vec = tuple(R(x) for x in tensor)
    if len(vec) != alg.m_P ** sum(valence):
        raise ShapeError(f"tensor of valence {valence} needs {alg.m_P ** sum(valence)} entries")
    for G, x in zip(C.Gamma, R.gens):
        moved = mat_apply(tensor_connection(G, valence, R), vec, R)
        if any(v.diff(x) + w for v, w in zip(vec, moved)):
            return False
    return True


def gauge_structure_search(tensor: Sequence, valence: Tuple[int, int], alg: TrioleAlgebra, cap: int = 3) -> Report:
    """Constant Γ preserving a constant tensor: the stabilizer algebra of Ξ in gl(m_P, QQ).

    ``admits_connection`` says whether some nonzero constant Γ preserves Ξ; Γ = 0 always does.
    """
    _check_valence(valence, cap)
    R, m = alg.ring, alg.m_P
    vec = tuple(R(x) for x in tensor)
    if len(vec) != m ** sum(valence):
        raise ShapeError(f"tensor of valence {valence} needs {m ** sum(valence)} entries")
    if any(not x.is_ground for x in vec):
        raise ShapeError("gauge structure search needs a constant tensor")
    columns = []
    for a, b in product(range(m), repeat=2):
        E = [[R.zero] * m for _ in range(m)]
        E[a][b] = R.one
        moved = mat_apply(tensor_connection(as_matrix(R, E), valence, R), vec, R)
        columns.append([QQ.convert(x.LC) if x else QQ.zero for x in moved])
    rows = [list(r) for r in zip(*columns)]
    basis = qq_nullspace(rows, m * m)
    generators = [[[str(v[a * m + b]) for b in range(m)] for a in range(m)] for v in basis]
    return Report.ok(admits_connection=bool(basis), dimension=len(basis), stabilizer=generators)


def symmetry_check(kind: str, phi: Matrix, alg: TrioleAlgebra, psi: Optional[Matrix] = None) -> bool:
    """orthogonal_inf: g(φ·, ·) + g(·, φ·) = 0; commutant: [φ, ψ] = 0; orthogonal_group: g(Φ·, Φ·) = g."""
    R, m = alg.ring, alg.m_P
    phi = as_matrix(R, phi)
    if kind == "orthogonal_inf":
        zero = GradedDerivation.degree0(alg, ScalarDerivation.zero(R), phi, zeros(R, alg.m_Q, alg.m_Q))
        return all(is_zero_matrix(block) for block in degree0_residual(zero, alg))
    if kind == "commutant":
        if psi is None:
            raise ShapeError("commutant check needs ψ")
        return is_zero_matrix(commutator(phi, as_matrix(R, psi)))
    if kind == "orthogonal_group":
        if not is_unit(determinant(phi, R)):
            return False
        for a, b in product(range(m), repeat=2):
            col_a = [row[a] for row in phi]
            col_b = [row[b] for row in phi]
            if alg.pair(col_a, col_b) != tuple(block[a][b] for block in alg.g):
                return False
        return True
    raise UnknownObjectError(f"unknown symmetry kind {kind!r}")
