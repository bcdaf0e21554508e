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

"""Exact polynomials, derivations and normal-ordered linear differential operators.

Polynomials are ``sympy`` ring elements over ``QQ`` in graded-lex order. An operator
Σ c_σ ∂^σ is stored with every coefficient to the left of every derivative, so order,
principal symbol and the δ_a calculus are read off the stored terms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import comb, factorial
from typing import Callable, Dict, Iterable, Mapping, Sequence, Tuple

from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing

from triolex.utils.errors import AxisError, OrderError, RingMismatchError, ShapeError

logger = logging.getLogger(__name__)

Poly = PolyElement
MultiIndex = Tuple[int, ...]


@lru_cache(maxsize=None)
def poly_ring(n_vars: int) -> PolyRing:
    """The coordinate ring QQ[x1..xn]."""
    if n_vars < 1:
        raise AxisError(f"a coordinate ring needs at least one variable, got {n_vars}")
    return PolyRing(",".join(f"x{i + 1}" for i in range(n_vars)), QQ, grlex)


@lru_cache(maxsize=None)
def symbol_ring(n_vars: int) -> PolyRing:
    """QQ[x1..xn, xi1..xin], the home of principal symbols."""
    names = [f"x{i + 1}" for i in range(n_vars)] + [f"xi{i + 1}" for i in range(n_vars)]
    return PolyRing(",".join(names), QQ, grlex)


@lru_cache(maxsize=None)
def fiber_ring(n_vars: int, rank: int) -> PolyRing:
    """QQ[x1..xn, u1..um] with formal fiber coordinates u."""
    names = [f"x{i + 1}" for i in range(n_vars)] + [f"u{a + 1}" for a in range(rank)]
    return PolyRing(",".join(names), QQ, grlex)


def grlex_key(index: Sequence[int]):
    return (sum(index), tuple(index))


def total_degree(f: Poly) -> int:
    return max((sum(m) for m in f.keys()), default=0)


def monomials_up_to(n_vars: int, degree: int):
    """Exponent tuples of total degree ≤ ``degree`` in grlex order."""
    found = [e for e in product(range(degree + 1), repeat=n_vars) if sum(e) <= degree]
    return sorted(found, key=grlex_key)


def monomial(ring: PolyRing, exponents: Sequence[int]) -> Poly:
    return ring.from_dict({tuple(exponents): QQ.one})


def embed(f: Poly, target: PolyRing) -> Poly:
    """Copy ``f`` into a ring whose leading generators are those of ``f.ring``."""
    pad = (0,) * (target.ngens - f.ring.ngens)
    return target.from_dict({m + pad: c for m, c in f.items()})


def restrict(f: Poly, target: PolyRing) -> Poly:
    """Inverse of :func:`embed` for polynomials free of the trailing generators."""
    k = target.ngens
    out = {}
    for m, c in f.items():
        if any(m[k:]):
            raise RingMismatchError(f"{f.as_expr()} depends on generators outside {target.symbols}")
        out[m[:k]] = c
    return target.from_dict(out)


def substitute(f: Poly, images: Sequence[Poly], target: PolyRing) -> Poly:
    """Replace x_i by ``images[i]`` (polynomials of ``target``)."""
    powers: Dict[Tuple[int, int], Poly] = {}
    result = target.zero
    for m, c in f.items():
        term = target.ground_new(c)
        for i, e in enumerate(m):
            if e:
                if (i, e) not in powers:
                    powers[(i, e)] = images[i] ** e
                term *= powers[(i, e)]
        result += term
    return result


def _check_ring(*items):
    rings = {item.ring for item in items}
    if len(rings) > 1:
        raise RingMismatchError("operands belong to different coordinate rings")


def derive(f: Poly, sigma: MultiIndex) -> Poly:
    """∂^σ f."""
    gens = f.ring.gens
    for i, e in enumerate(sigma):
        for _ in range(e):
            if not f:
                return f
            f = f.diff(gens[i])
    return f


def partial_derivative(f: Poly, i: int) -> Poly:
    """Exact ∂f/∂x_i with a 1-based axis."""
    n = f.ring.ngens
    if not 1 <= i <= n:
        raise AxisError(f"axis {i} out of range 1..{n}")
    return f.diff(f.ring.gens[i - 1])


@dataclass(frozen=True)
class ScalarDerivation:
    """X = Σ X^i ∂_i acting on the coordinate ring."""

    ring: PolyRing
    coeffs: Tuple[Poly, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.ring.ngens:
            raise ShapeError(f"derivation needs {self.ring.ngens} coefficients, got {len(self.coeffs)}")
        object.__setattr__(self, "coeffs", tuple(self.ring(c) for c in self.coeffs))

    @classmethod
    def zero(cls, ring: PolyRing) -> "ScalarDerivation":
        return cls(ring, (ring.zero,) * ring.ngens)

    @classmethod
    def partial(cls, ring: PolyRing, axis: int) -> "ScalarDerivation":
        """∂ along the 0-based ``axis``."""
        return cls(ring, tuple(ring.one if i == axis else ring.zero for i in range(ring.ngens)))

    def __call__(self, f: Poly) -> Poly:
        out = self.ring.zero
        for c, gen in zip(self.coeffs, self.ring.gens):
            if c:
                out += c * f.diff(gen)
        return out

    def __add__(self, other: "ScalarDerivation") -> "ScalarDerivation":
        return ScalarDerivation(self.ring, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "ScalarDerivation") -> "ScalarDerivation":
        return ScalarDerivation(self.ring, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "ScalarDerivation":
        return ScalarDerivation(self.ring, tuple(-a for a in self.coeffs))

    def scale(self, a) -> "ScalarDerivation":
        a = self.ring(a)
        return ScalarDerivation(self.ring, tuple(a * c for c in self.coeffs))

    def bracket(self, other: "ScalarDerivation") -> "ScalarDerivation":
        """Vector-field commutator [X, Y]."""
        return ScalarDerivation(
            self.ring, tuple(self(b) - other(a) for a, b in zip(self.coeffs, other.coeffs))
        )

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def to_operator(self) -> "PolyDiffOp":
        n = self.ring.ngens
        return PolyDiffOp(self.ring, {
            tuple(1 if j == i else 0 for j in range(n)): c for i, c in enumerate(self.coeffs)
        })


@dataclass(frozen=True, eq=False)
class PolyDiffOp:
    """Σ c_σ ∂^σ in normal order (coefficients left of derivatives)."""

    ring: PolyRing
    terms: Mapping[MultiIndex, Poly] = field(default_factory=dict)

    def __post_init__(self):
        n = self.ring.ngens
        clean = {}
        for sigma, c in self.terms.items():
            sigma = tuple(sigma)
            if len(sigma) != n:
                raise ShapeError(f"multi-index {sigma} has length {len(sigma)}, expected {n}")
            c = self.ring(c)
            if c:
                clean[sigma] = c
        object.__setattr__(self, "terms", clean)

    @classmethod
    def zero(cls, ring: PolyRing) -> "PolyDiffOp":
        return cls(ring, {})

    @classmethod
    def multiplication(cls, a: Poly) -> "PolyDiffOp":
        ring = a.ring
        return cls(ring, {(0,) * ring.ngens: a})

    @classmethod
    def identity(cls, ring: PolyRing) -> "PolyDiffOp":
        return cls(ring, {(0,) * ring.ngens: ring.one})

    @classmethod
    def partial(cls, ring: PolyRing, axis: int, power: int = 1) -> "PolyDiffOp":
        """∂^power along the 0-based ``axis``."""
        if not 0 <= axis < ring.ngens:
            raise AxisError(f"axis {axis} out of range")
        sigma = tuple(power if i == axis else 0 for i in range(ring.ngens))
        return cls(ring, {sigma: ring.one})

    def __eq__(self, other):
        if not isinstance(other, PolyDiffOp):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        return hash((self.ring, frozenset(self.terms.items())))

    def __repr__(self):
        parts = [f"({c.as_expr()})*d{list(s)}" for s, c in self.sorted_terms()]
        return "PolyDiffOp(" + (" + ".join(parts) or "0") + ")"

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda item: grlex_key(item[0]))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def order(self) -> int:
        return max((sum(s) for s in self.terms), default=0)

    def coefficient(self, sigma: MultiIndex) -> Poly:
        return self.terms.get(tuple(sigma), self.ring.zero)

    def apply(self, f: Poly) -> Poly:
        f = self.ring(f)
        out = self.ring.zero
        for sigma, c in self.terms.items():
            out += c * derive(f, sigma)
        return out

    __call__ = apply

    def _combine(self, other: "PolyDiffOp", sign: int) -> "PolyDiffOp":
        _check_ring(self, other)
        terms = dict(self.terms)
        for sigma, c in other.terms.items():
            terms[sigma] = terms.get(sigma, self.ring.zero) + (c if sign > 0 else -c)
        return PolyDiffOp(self.ring, terms)

    def __add__(self, other: "PolyDiffOp") -> "PolyDiffOp":
        return self._combine(other, 1)

    def __sub__(self, other: "PolyDiffOp") -> "PolyDiffOp":
        return self._combine(other, -1)

    def __neg__(self) -> "PolyDiffOp":
        return PolyDiffOp(self.ring, {s: -c for s, c in self.terms.items()})

    def left_multiply(self, a) -> "PolyDiffOp":
        a = self.ring(a)
        return PolyDiffOp(self.ring, {s: a * c for s, c in self.terms.items()})

    def compose(self, other: "PolyDiffOp") -> "PolyDiffOp":
        """self ∘ other, normal ordered by the Leibniz expansion of ∂^σ(b ·)."""
        _check_ring(self, other)
        out: Dict[MultiIndex, Poly] = {}
        for sigma, a in self.terms.items():
            for tau, b in other.terms.items():
                for rho in product(*(range(s + 1) for s in sigma)):
                    db = derive(b, rho)
                    if not db:
                        continue
                    weight = 1
                    for s, r in zip(sigma, rho):
                        weight *= comb(s, r)
                    key = tuple(s - r + t for s, r, t in zip(sigma, rho, tau))
                    out[key] = out.get(key, self.ring.zero) + a * db * weight
        return PolyDiffOp(self.ring, out)

    __matmul__ = compose

    def homogeneous_part(self, k: int) -> "PolyDiffOp":
        return PolyDiffOp(self.ring, {s: c for s, c in self.terms.items() if sum(s) == k})

    def constant_term(self) -> Poly:
        return self.coefficient((0,) * self.ring.ngens)

    def without_constant_term(self) -> "PolyDiffOp":
        zero = (0,) * self.ring.ngens
        return PolyDiffOp(self.ring, {s: c for s, c in self.terms.items() if s != zero})

    def to_derivation(self) -> ScalarDerivation:
        """Read a first-order operator without constant term as a derivation."""
        if self.order > 1 or self.constant_term():
            raise OrderError(f"{self!r} is not a derivation")
        n = self.ring.ngens
        return ScalarDerivation(self.ring, tuple(
            self.coefficient(tuple(1 if j == i else 0 for j in range(n))) for i in range(n)
        ))


@dataclass(frozen=True, eq=False)
class MatDiffOp:
    """Rectangular matrix of scalar operators acting on column vectors of polynomials."""

    ring: PolyRing
    entries: Tuple[Tuple[PolyDiffOp, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        if len({len(row) for row in rows}) > 1:
            raise ShapeError("matrix operator rows have different lengths")
        object.__setattr__(self, "entries", rows)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @classmethod
    def zero(cls, ring: PolyRing, rows: int, cols: int) -> "MatDiffOp":
        z = PolyDiffOp.zero(ring)
        return cls(ring, tuple(tuple(z for _ in range(cols)) for _ in range(rows)))

    @classmethod
    def from_matrix(cls, ring: PolyRing, matrix: Sequence[Sequence]) -> "MatDiffOp":
        """Order-zero operator: multiplication by a polynomial matrix."""
        return cls(ring, tuple(
            tuple(PolyDiffOp.multiplication(ring(x)) for x in row) for row in matrix
        ))

    @classmethod
    def scalar(cls, op: PolyDiffOp, size: int) -> "MatDiffOp":
        """op · I."""
        z = PolyDiffOp.zero(op.ring)
        return cls(op.ring, tuple(
            tuple(op if i == j else z for j in range(size)) for i in range(size)
        ))

    @classmethod
    def identity(cls, ring: PolyRing, size: int) -> "MatDiffOp":
        return cls.scalar(PolyDiffOp.identity(ring), size)

    @classmethod
    def column(cls, ops: Sequence[PolyDiffOp]) -> "MatDiffOp":
        return cls(ops[0].ring, tuple((op,) for op in ops))

    @classmethod
    def from_blocks(cls, ring, row_sizes, col_sizes, blocks: Mapping[Tuple[int, int], "MatDiffOp"]):
        """Assemble a block operator; missing blocks are zero."""
        z = PolyDiffOp.zero(ring)
        table = [[z] * sum(col_sizes) for _ in range(sum(row_sizes))]
        for (bi, bj), block in blocks.items():
            if block.shape != (row_sizes[bi], col_sizes[bj]):
                raise ShapeError(f"block {(bi, bj)} has shape {block.shape}")
            r0, c0 = sum(row_sizes[:bi]), sum(col_sizes[:bj])
            for i, row in enumerate(block.entries):
                for j, op in enumerate(row):
                    table[r0 + i][c0 + j] = op
        return cls(ring, tuple(tuple(row) for row in table))

    def block(self, bi: int, bj: int, row_sizes, col_sizes) -> "MatDiffOp":
        r0, c0 = sum(row_sizes[:bi]), sum(col_sizes[:bj])
        return MatDiffOp(self.ring, tuple(
            tuple(self.entries[r0 + i][c0 + j] for j in range(col_sizes[bj]))
            for i in range(row_sizes[bi])
        ))

    def __eq__(self, other):
        if not isinstance(other, MatDiffOp):
            return NotImplemented
        return self.ring == other.ring and self.entries == other.entries

    def __hash__(self):
        return hash((self.ring, self.entries))

    def __repr__(self):
        return f"MatDiffOp({self.rows}x{self.cols}, order={self.order})"

    @property
    def order(self) -> int:
        return max((op.order for row in self.entries for op in row), default=0)

    @property
    def is_zero(self) -> bool:
        return all(op.is_zero for row in self.entries for op in row)

    def entry(self, i: int, j: int) -> PolyDiffOp:
        return self.entries[i][j]

    def apply(self, vector: Sequence[Poly]) -> Tuple[Poly, ...]:
        if len(vector) != self.cols:
            raise ShapeError(f"operator with {self.cols} columns applied to length-{len(vector)} vector")
        out = []
        for row in self.entries:
            acc = self.ring.zero
            for op, v in zip(row, vector):
                if v and not op.is_zero:
                    acc += op.apply(v)
            out.append(acc)
        return tuple(out)

    __call__ = apply

    def _zip(self, other: "MatDiffOp", fn: Callable) -> "MatDiffOp":
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")
        _check_ring(self, other)
        return MatDiffOp(self.ring, tuple(
            tuple(fn(a, b) for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries)
        ))

    def __add__(self, other: "MatDiffOp") -> "MatDiffOp":
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other: "MatDiffOp") -> "MatDiffOp":
        return self._zip(other, lambda a, b: a - b)

    def __neg__(self) -> "MatDiffOp":
        return self.map(lambda op: -op)

    def map(self, fn: Callable[[PolyDiffOp], PolyDiffOp]) -> "MatDiffOp":
        return MatDiffOp(self.ring, tuple(tuple(fn(op) for op in row) for row in self.entries))

    def left_multiply(self, a) -> "MatDiffOp":
        return self.map(lambda op: op.left_multiply(a))

    def compose(self, other: "MatDiffOp") -> "MatDiffOp":
        if self.cols != other.rows:
            raise ShapeError(f"cannot compose {self.shape} after {other.shape}")
        _check_ring(self, other)
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = PolyDiffOp.zero(self.ring)
                for t in range(self.cols):
                    a, b = self.entries[i][t], other.entries[t][j]
                    if not a.is_zero and not b.is_zero:
                        acc = acc + a.compose(b)
                row.append(acc)
            out.append(tuple(row))
        return MatDiffOp(self.ring, tuple(out))

    __matmul__ = compose

    def order_zero_part(self):
        """Matrix of σ = 0 coefficients."""
        return tuple(tuple(op.constant_term() for op in row) for row in self.entries)

    def homogeneous_part(self, k: int) -> "MatDiffOp":
        return self.map(lambda op: op.homogeneous_part(k))


def compose(delta, nabla):
    """Δ ∘ ∇ for scalar or matrix operators."""
    _check_ring(delta, nabla)
    return delta.compose(nabla)


def commutator(delta, nabla):
    """Δ∘∇ − ∇∘Δ."""
    return compose(delta, nabla) - compose(nabla, delta)


def delta_a(delta, a: Poly):
    """δ_a(Δ) = a∘Δ − Δ∘a, entrywise for matrix operators."""
    if a.ring != delta.ring:
        raise RingMismatchError("δ_a needs a in the operator's ring")
    mult = PolyDiffOp.multiplication(a)
    if isinstance(delta, MatDiffOp):
        return delta.map(lambda op: mult.compose(op) - op.compose(mult))
    return mult.compose(delta) - delta.compose(mult)


def delta_tuple(delta, functions: Iterable[Poly]):
    """δ_{a_0} ∘ … ∘ δ_{a_k}(Δ)."""
    for a in functions:
        delta = delta_a(delta, a)
    return delta


def order_of(delta) -> int:
    """Order of an operator; the zero operator has order 0."""
    return delta.order


@dataclass(frozen=True, eq=False)
class SymbolTensor:
    """A principal symbol: ξ-homogeneous polynomials of degree k, arranged as a matrix.

    Scalar symbols are 1x1.
    """

    n_vars: int
    degree_k: int
    entries: Tuple[Tuple[Poly, ...], ...]

    def __post_init__(self):
        ring = symbol_ring(self.n_vars)
        rows = tuple(tuple(ring(x) for x in row) for row in self.entries)
        n = self.n_vars
        for row in rows:
            for x in row:
                for m in x.keys():
                    if sum(m[n:]) != self.degree_k:
                        raise OrderError(f"symbol entry {x.as_expr()} is not ξ-homogeneous of degree {self.degree_k}")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def scalar(cls, n_vars: int, degree_k: int, body) -> "SymbolTensor":
        return cls(n_vars, degree_k, ((body,),))

    @classmethod
    def one(cls, n_vars: int) -> "SymbolTensor":
        return cls.scalar(n_vars, 0, symbol_ring(n_vars).one)

    @property
    def ring(self) -> PolyRing:
        return symbol_ring(self.n_vars)

    @property
    def body(self) -> Poly:
        if self.shape != (1, 1):
            raise ShapeError("body is defined for scalar symbols only")
        return self.entries[0][0]

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.entries), (len(self.entries[0]) if self.entries else 0)

    @property
    def is_zero(self) -> bool:
        return all(not x for row in self.entries for x in row)

    def __eq__(self, other):
        if not isinstance(other, SymbolTensor):
            return NotImplemented
        if self.n_vars != other.n_vars or self.shape != other.shape:
            return False
        if self.is_zero and other.is_zero:
            return True
        return self.degree_k == other.degree_k and self.entries == other.entries

    def __hash__(self):
        return hash((self.n_vars, self.degree_k if not self.is_zero else -1, self.entries))

    def __repr__(self):
        if self.shape == (1, 1):
            return f"SymbolTensor(k={self.degree_k}, {self.body.as_expr()})"
        return f"SymbolTensor(k={self.degree_k}, shape={self.shape})"

    def __add__(self, other: "SymbolTensor") -> "SymbolTensor":
        _check_symbols(self, other)
        if self.degree_k != other.degree_k and not (self.is_zero or other.is_zero):
            raise OrderError("cannot add symbols of different orders")
        k = other.degree_k if self.is_zero else self.degree_k
        return SymbolTensor(self.n_vars, k, tuple(
            tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries)
        ))

    def scale(self, c) -> "SymbolTensor":
        c = embed(c, self.ring) if isinstance(c, PolyElement) and c.ring != self.ring else self.ring(c)
        return SymbolTensor(self.n_vars, self.degree_k, tuple(
            tuple(c * x for x in row) for row in self.entries
        ))


def _check_symbols(s: SymbolTensor, t: SymbolTensor):
    if s.n_vars != t.n_vars:
        raise RingMismatchError("symbols over different rings")


def principal_symbol(delta, k: int) -> SymbolTensor:
    """Top part of order k: ∂^σ ↦ ξ^σ for |σ| = k; zero when the order is below k."""
    if delta.order > k:
        raise OrderError(f"operator of order {delta.order} has no symbol of order {k}")
    n = delta.ring.ngens
    S = symbol_ring(n)

    def top(op: PolyDiffOp) -> Poly:
        out = S.zero
        for sigma, c in op.terms.items():
            if sum(sigma) == k:
                out += embed(c, S) * monomial(S, (0,) * n + sigma)
        return out

    if isinstance(delta, MatDiffOp):
        return SymbolTensor(n, k, tuple(tuple(top(op) for op in row) for row in delta.entries))
    return SymbolTensor.scalar(n, k, top(delta))


def symbol_to_operator(symbol: SymbolTensor):
    """Normal-ordered representative c(x)ξ^σ ↦ c(x)∂^σ; a PolyDiffOp for 1x1 symbols."""
    n = symbol.n_vars
    R = poly_ring(n)

    def op(entry: Poly) -> PolyDiffOp:
        terms: Dict[MultiIndex, Poly] = {}
        for m, c in entry.items():
            sigma = m[n:]
            terms[sigma] = terms.get(sigma, R.zero) + R.from_dict({m[:n]: c})
        return PolyDiffOp(R, terms)

    if symbol.shape == (1, 1):
        return op(symbol.body)
    return MatDiffOp(R, tuple(tuple(op(x) for x in row) for row in symbol.entries))


def star(s: SymbolTensor, t: SymbolTensor) -> SymbolTensor:
    """Product of symbols; matrix parts multiply as matrices."""
    _check_symbols(s, t)
    (m, k), (k2, n) = s.shape, t.shape
    if k != k2:
        raise ShapeError(f"cannot multiply symbols of shapes {s.shape} and {t.shape}")
    S = s.ring
    entries = []
    for i in range(m):
        row = []
        for j in range(n):
            acc = S.zero
            for r in range(k):
                acc += s.entries[i][r] * t.entries[r][j]
            row.append(acc)
        entries.append(tuple(row))
    return SymbolTensor(s.n_vars, s.degree_k + t.degree_k, tuple(entries))


def symbol_poisson(s: SymbolTensor, t: SymbolTensor) -> SymbolTensor:
    """{s, t} = Σ ∂s/∂ξ_i ∂t/∂x_i − ∂s/∂x_i ∂t/∂ξ_i, the symbol of [Δ, ∇] in order k+ℓ−1."""
    _check_symbols(s, t)
    n = s.n_vars
    S = s.ring
    a, b = s.body, t.body
    out = S.zero
    for i in range(n):
        x, xi = S.gens[i], S.gens[n + i]
        out += a.diff(xi) * b.diff(x) - a.diff(x) * b.diff(xi)
    k = s.degree_k + t.degree_k - 1
    if k < 0:
        return SymbolTensor.scalar(n, 0, S.zero)
    return SymbolTensor.scalar(n, k, out)


@dataclass(frozen=True)
class HamiltonianDerivation:
    """t ↦ {s, t} on the symbol algebra."""

    generator: SymbolTensor

    def __call__(self, t: SymbolTensor) -> SymbolTensor:
        return symbol_poisson(self.generator, t)


def hamiltonian_derivation(s: SymbolTensor) -> HamiltonianDerivation:
    return HamiltonianDerivation(s)


def evaluate_on_differential(symbol: SymbolTensor, f: Poly):
    """The symbol at ξ = df, as a matrix of polynomials of the base ring."""
    n = symbol.n_vars
    R = poly_ring(n)
    grad = [f.diff(g) for g in R.gens]

    def at(entry: Poly) -> Poly:
        out = R.zero
        for m, c in entry.items():
            term = R.from_dict({m[:n]: c})
            for i, e in enumerate(m[n:]):
                if e:
                    term *= grad[i] ** e
            out += term
        return out

    return tuple(tuple(at(x) for x in row) for row in symbol.entries)


def symbol_normalization_holds(delta, f: Poly, k: int) -> bool:
    """smbl_k(Δ)(df^k) = ((−1)^k / k!) · δ_f^k(Δ)(1), entrywise."""
    lhs = evaluate_on_differential(principal_symbol(delta, k), f)
    iterated = delta_tuple(delta, [f] * k)
    scale = QQ((-1) ** k, factorial(k))
    if isinstance(iterated, MatDiffOp):
        rhs = tuple(tuple(op.constant_term() * scale for op in row) for row in iterated.entries)
    else:
        rhs = ((iterated.constant_term() * scale,),)
    return lhs == rhs
