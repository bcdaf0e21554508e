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

"""Exact matrices of polynomials and linear algebra over QQ, QQ[x] and its fraction field.

Matrices are tuples of row tuples of ``PolyElement``. Rank, kernels and determinants go
through ``DomainMatrix`` so nothing is ever approximated.
"""

from __future__ import annotations

from functools import reduce
from itertools import product
from typing import List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from triolex.utils.errors import NonUnitDeterminantError, ShapeError

Matrix = Tuple[tuple, ...]


def zeros(ring, rows: int, cols: int) -> Matrix:
    return tuple(tuple(ring.zero for _ in range(cols)) for _ in range(rows))


def identity(ring, size: int) -> Matrix:
    return tuple(tuple(ring.one if i == j else ring.zero for j in range(size)) for i in range(size))


def as_matrix(ring, rows: Sequence[Sequence]) -> Matrix:
    return tuple(tuple(ring(entry) for entry in row) for row in rows)


def shape(matrix: Matrix) -> Tuple[int, int]:
    rows = len(matrix)
    return rows, (len(matrix[0]) if rows else 0)


def transpose(matrix: Matrix) -> Matrix:
    return tuple(zip(*matrix)) if matrix else ()


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    if shape(a) != shape(b):
        raise ShapeError(f"cannot add {shape(a)} and {shape(b)} matrices")
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    if shape(a) != shape(b):
        raise ShapeError(f"cannot subtract {shape(b)} from {shape(a)} matrix")
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_neg(a: Matrix) -> Matrix:
    return tuple(tuple(-x for x in row) for row in a)


def mat_scale(c, a: Matrix) -> Matrix:
    return tuple(tuple(c * x for x in row) for row in a)


def mat_mul(a: Matrix, b: Matrix, ring=None) -> Matrix:
    (m, k), (k2, n) = shape(a), shape(b)
    if k != k2:
        raise ShapeError(f"cannot multiply {m}x{k} by {k2}x{n}")
    if ring is None:
        ring = (a[0][0] if m and k else b[0][0]).ring
    out = []
    for i in range(m):
        row = []
        for j in range(n):
            acc = ring.zero
            for t in range(k):
                if a[i][t] and b[t][j]:
                    acc += a[i][t] * b[t][j]
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def mat_apply(a: Matrix, vector: Sequence, ring) -> tuple:
    return tuple(
        reduce(lambda acc, pair: acc + pair[0] * pair[1], zip(row, vector), ring.zero)
        for row in a
    )


def mat_diff(a: Matrix, gen) -> Matrix:
    return tuple(tuple(x.diff(gen) for x in row) for row in a)


def commutator(a: Matrix, b: Matrix) -> Matrix:
    return mat_sub(mat_mul(a, b), mat_mul(b, a))


def kron(a: Matrix, b: Matrix) -> Matrix:
    (m, n), (p, q) = shape(a), shape(b)
    return tuple(
        tuple(a[i // p][j // q] * b[i % p][j % q] for j in range(n * q))
        for i in range(m * p)
    )


def kron_sum(a: Matrix, b: Matrix, ring) -> Matrix:
    """A ⊗ I + I ⊗ B for square A, B."""
    return mat_add(kron(a, identity(ring, len(b))), kron(identity(ring, len(a)), b))


def is_zero_matrix(a: Matrix) -> bool:
    return all(not x for row in a for x in row)


def first_nonzero(a: Matrix) -> Optional[Tuple[int, int]]:
    for i, row in enumerate(a):
        for j, x in enumerate(row):
            if x:
                return i, j
    return None


def is_unit(p) -> bool:
    return bool(p) and p.is_ground


def _domain_matrix(rows: Sequence[Sequence], ncols: int, ring) -> DomainMatrix:
    dom = ring.to_domain()
    data = [[ring(x) for x in row] for row in rows]
    return DomainMatrix(data, (len(data), ncols), dom)


def determinant(a: Matrix, ring):
    m, n = shape(a)
    if m != n:
        raise ShapeError(f"determinant of non-square {m}x{n} matrix")
    if m == 0:
        return ring.one
    return _domain_matrix(a, n, ring).det()


def inverse(a: Matrix, ring) -> Matrix:
    """Inverse over the polynomial ring; the determinant must be a nonzero constant."""
    det = determinant(a, ring)
    if not is_unit(det):
        raise NonUnitDeterminantError(f"determinant {det.as_expr()} is not a unit of the ring")
    n = len(a)
    if n == 0:
        return ()
    adj = _domain_matrix(a, n, ring).adjugate().to_list()
    scale = ring.domain.revert(det.LC)
    return tuple(tuple(ring(x) * scale for x in row) for row in adj)


def rank(rows: Sequence[Sequence], ncols: int, ring) -> int:
    """Rank over the fraction field of ``ring``."""
    rows = [row for row in rows if any(row)]
    if not rows or ncols == 0:
        return 0
    return _domain_matrix(rows, ncols, ring).to_field().rank()


def normalize_vector(vector: Sequence, ring) -> tuple:
    """Primitive representative of the line through ``vector``: content removed, leading entry monic."""
    entries = [ring(x) for x in vector]
    nonzero = [x for x in entries if x]
    if not nonzero:
        return tuple(entries)
    content = reduce(lambda a, b: a.gcd(b), nonzero)
    if not content.is_ground:
        entries = [x.exquo(content) for x in entries]
    lead = next(x for x in entries if x).LC
    scale = ring.domain.revert(lead)
    return tuple(x * scale for x in entries)


def kernel(rows: Sequence[Sequence], ncols: int, ring) -> List[tuple]:
    """Basis of the right kernel over the fraction field, as primitive polynomial vectors."""
    rows = [row for row in rows if any(row)]
    if ncols == 0:
        return []
    if not rows:
        return [tuple(ring.one if i == j else ring.zero for j in range(ncols)) for i in range(ncols)]
    null = _domain_matrix(rows, ncols, ring).to_field().nullspace().to_list()
    basis = []
    for vector in null:
        if not any(vector):
            continue
        denominator = reduce(lambda a, b: a.lcm(b), (x.denom for x in vector), ring.one)
        basis.append(normalize_vector([ring(x.numer * denominator.exquo(x.denom)) for x in vector], ring))
    return basis


def in_span(vector: Sequence, basis: Sequence[Sequence], ncols: int, ring) -> bool:
    """Membership of ``vector`` in the span of ``basis`` over the fraction field."""
    if not any(vector):
        return True
    return rank(list(basis) + [vector], ncols, ring) == rank(basis, ncols, ring)


def qq_nullspace(rows: Sequence[Sequence], ncols: int) -> List[List]:
    """Reduced basis of the kernel of a rational matrix."""
    rows = [[QQ.convert(x) for x in row] for row in rows if any(row)]
    if ncols == 0:
        return []
    if not rows:
        return [[QQ.one if i == j else QQ.zero for j in range(ncols)] for i in range(ncols)]
    null = DomainMatrix(rows, (len(rows), ncols), QQ).nullspace()
    if null.shape[0] == 0:
        return []
    reduced, _ = null.rref()
    return [row for row in reduced.to_list() if any(row)]


def qq_solve(rows: Sequence[Sequence], rhs: Sequence, ncols: int) -> Optional[List]:
    """One rational solution of ``rows · x = rhs`` (free variables set to zero), or None."""
    if not rows:
        return [QQ.zero] * ncols if not any(rhs) else None
    augmented = [[QQ.convert(x) for x in row] + [QQ.convert(b)] for row, b in zip(rows, rhs)]
    reduced, pivots = DomainMatrix(augmented, (len(augmented), ncols + 1), QQ).rref()
    if ncols in pivots:
        return None
    table = reduced.to_list()
    solution = [QQ.zero] * ncols
    for r, col in enumerate(pivots):
        solution[col] = table[r][ncols]
    return solution


def multi_indices(count: int, size: int):
    """All ``count``-tuples of indices in ``range(size)``."""
    return product(range(size), repeat=count)


def field_solve(rows: Sequence[Sequence], rhs: Sequence, ncols: int, ring) -> Optional[List]:
    """One solution of ``rows · x = rhs`` over the fraction field of ``ring`` (free variables zero).

    Returns fraction-field elements, or None when the system is inconsistent.
    """
    if not rows:
        return None if any(rhs) else [ring.to_field().zero] * ncols
    augmented = [[ring(x) for x in row] + [ring(b)] for row, b in zip(rows, rhs)]
    dm = DomainMatrix(augmented, (len(augmented), ncols + 1), ring.to_domain()).to_field()
    reduced, pivots = dm.rref()
    if ncols in pivots:
        return None
    field = dm.domain
    table = reduced.to_list()
    solution = [field.zero] * ncols
    for r, col in enumerate(pivots):
        solution[col] = field.quo(table[r][ncols], table[r][col])
    return solution


def as_polynomial(x, ring):
    """A fraction-field element with constant denominator as a polynomial, else None."""
    if not x.denom.is_ground:
        return None
    return ring(x.numer) * ring.domain.revert(x.denom.LC)
