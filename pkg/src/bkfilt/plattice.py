"""Exact p-local lattice linear algebra over Z_(p).

Z_(p) — rationals with denominator coprime to p — is a discrete
valuation ring with uniformizer p, so Smith normal form needs no gcd
machinery: an entry of minimal p-valuation divides every other entry
and serves as the pivot.  Pivot choice is deterministic (lowest
(row, col) among minimal valuations), which makes every basis this
module produces byte-stable.

Matrices are row-major sequences of sequences of Fractions; vectors are
sequences of Fractions.  All inputs must be p-integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import NotContained, NotSaturated
from .exactring import pscalar, vp

Vec = tuple[Fraction, ...]
Mat = tuple[Vec, ...]

__all__ = ["SnfResult", "snf_p", "saturated_kernel", "extend_to_basis", "PLattice"]


def _check_mat(A, p: int) -> list[list[Fraction]]:
    # pscalar enforces p-integrality (denominator coprime to p).
    rows = [[pscalar(c, p) for c in row] for row in A]
    if rows:
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged matrix")
    return rows


def _identity(n: int) -> list[list[Fraction]]:
    return [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]


def _matmul(A, B) -> list[list[Fraction]]:
    if not A or not B:
        return [[Fraction(0)] * (len(B[0]) if B else 0) for _ in A]
    m = len(B[0])
    return [
        [sum((a * B[k][j] for k, a in enumerate(row) if a), Fraction(0)) for j in range(m)]
        for row in A
    ]


def _matvec(A, v) -> list[Fraction]:
    return [sum((a * x for a, x in zip(row, v) if a), Fraction(0)) for row in A]


@dataclass(frozen=True)
class SnfResult:
    """U * A * V == diag(entries), with U, V invertible over Z_(p).

    Diagonal entries are exact powers of p, nondecreasing in valuation,
    with the rank-deficient tail equal to 0.  det U and det V are
    p-adic units.  uinv and vinv are the exact inverses.
    """

    u: Mat
    v: Mat
    uinv: Mat
    vinv: Mat
    diag: tuple[Fraction, ...]
    p: int

    @property
    def valuations(self) -> tuple[int | None, ...]:
        return tuple(vp(d, self.p) for d in self.diag)

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diag if d != 0)


def snf_p(A: Sequence[Sequence[Fraction]], p: int, ncols: int | None = None) -> SnfResult:
    """Smith normal form over Z_(p) by valuation pivoting.

    Only p-valuations drive pivoting (every prime other than p is a
    unit); among entries of minimal valuation the lowest (row, col) is
    chosen.
    """
    S = _check_mat(A, p)
    n = len(S)
    m = len(S[0]) if S else (ncols or 0)
    U, Uinv = _identity(n), _identity(n)
    V, Vinv = _identity(m), _identity(m)

    def swap_rows(i, j):
        if i == j:
            return
        S[i], S[j] = S[j], S[i]
        U[i], U[j] = U[j], U[i]
        for r in Uinv:
            r[i], r[j] = r[j], r[i]

    def swap_cols(i, j):
        if i == j:
            return
        for r in S:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vinv[i], Vinv[j] = Vinv[j], Vinv[i]

    def scale_row(i, c):
        # c is a p-unit, so U stays over Z_(p).
        S[i] = [c * x for x in S[i]]
        U[i] = [c * x for x in U[i]]
        inv = 1 / c
        for r in Uinv:
            r[i] *= inv

    def add_row(i, l, c):
        # row_i += c * row_l
        S[i] = [x + c * y for x, y in zip(S[i], S[l])]
        U[i] = [x + c * y for x, y in zip(U[i], U[l])]
        for r in Uinv:
            r[l] -= c * r[i]

    def add_col(j, l, c):
        # col_j += c * col_l
        for r in S:
            r[j] += c * r[l]
        for r in V:
            r[j] += c * r[l]
        Vinv[l] = [x - c * y for x, y in zip(Vinv[l], Vinv[j])]

    for l in range(min(n, m)):
        best = None
        for i in range(l, n):
            for j in range(l, m):
                val = vp(S[i][j], p)
                if val is None:
                    continue
                if best is None or val < best[0]:
                    best = (val, i, j)
        if best is None:
            break
        val, bi, bj = best
        swap_rows(l, bi)
        swap_cols(l, bj)
        pivot = Fraction(p) ** val
        scale_row(l, pivot / S[l][l])
        for i in range(l + 1, n):
            if S[i][l]:
                add_row(i, l, -S[i][l] / pivot)
        for j in range(l + 1, m):
            if S[l][j]:
                add_col(j, l, -S[l][j] / pivot)

    diag = tuple(S[t][t] for t in range(min(n, m)))
    freeze = lambda M: tuple(tuple(r) for r in M)
    return SnfResult(freeze(U), freeze(V), freeze(Uinv), freeze(Vinv), diag, p)


def saturated_kernel(A: Sequence[Sequence[Fraction]], d: int, p: int) -> list[Vec]:
    """Basis of {x in Z_(p)^d : A x = 0}.

    The kernel of a matrix over Z_(p) is automatically saturated, so the
    returned vectors extend to a basis of Z_(p)^d.
    """
    if A and len(A[0]) != d:
        raise ValueError(f"matrix has {len(A[0])} columns, ambient dim is {d}")
    if not A:
        return [tuple(Fraction(1 if i == j else 0) for i in range(d)) for j in range(d)]
    res = snf_p(A, p, ncols=d)
    rank = res.rank
    return [tuple(row[j] for row in res.v) for j in range(rank, d)]


def extend_to_basis(vectors: Sequence[Sequence[Fraction]], d: int, p: int) -> Mat:
    """Complete a basis of a saturated rank-r submodule to all of Z_(p)^d.

    Returns a d x d row-major matrix whose first r columns are the input
    vectors and whose determinant is a p-adic unit.  Raises NotSaturated
    when the input does not span a saturated submodule.
    """
    vecs = [tuple(pscalar(c, p) for c in v) for v in vectors]
    r = len(vecs)
    if any(len(v) != d for v in vecs):
        raise ValueError("vector length does not match ambient dimension")
    if r == 0:
        return tuple(tuple(Fraction(1 if i == j else 0) for j in range(d)) for i in range(d))
    K = [[vecs[j][i] for j in range(r)] for i in range(d)]
    res = snf_p(K, p)
    if res.rank < r or any(v != 0 for v in res.valuations[: res.rank]):
        raise NotSaturated("input vectors do not span a saturated submodule")
    # U*K*V has unit diagonal, so span(K) = span(first r columns of Uinv);
    # the remaining columns of Uinv complete any basis of that span.
    rows = []
    for i in range(d):
        rows.append(tuple(vecs[j][i] for j in range(r)) + tuple(res.uinv[i][r:]))
    return tuple(rows)


def solve_in_span(rows: Sequence[Sequence[Fraction]], target: Sequence[Fraction], p: int) -> list[Fraction] | None:
    """A p-integral y with M y == target, M given row-major; None if there is none.

    Solved through the Smith form: U M V = D turns the system into
    D z = U t, and the particular solution z_i = (U t)_i / D_ii is
    p-integral exactly when the target lies in the column span over Z_(p).
    """
    res = snf_p(rows, p)
    n = len(rows)
    m = len(rows[0]) if rows else 0
    t = [pscalar(c, p) for c in target]
    ut = _matvec(res.u, t)
    z = [Fraction(0)] * m
    for i in range(n):
        if i < len(res.diag) and res.diag[i] != 0:
            z[i] = ut[i] / res.diag[i]
            val = vp(z[i], p)
            if val is not None and val < 0:
                return None
        elif ut[i] != 0:
            return None
    return _matvec(res.v, z)


def _mod_reduce(x: Fraction, modulus: int) -> Fraction:
    # Canonical representative of x in Z_(p)/(modulus) as an integer in
    # [0, modulus); the denominator is invertible mod the p-power modulus.
    num, den = x.numerator, x.denominator
    return Fraction((num * pow(den, -1, modulus)) % modulus)


class _Echelon:
    # Column echelon over Z_(p): at most one vector per leading row, the
    # stored pivot having minimal valuation there.  No gcds: whichever of
    # two entries has smaller valuation divides the other.

    __slots__ = ("p", "dim", "pivots")

    def __init__(self, p: int, dim: int):
        self.p = p
        self.dim = dim
        self.pivots: dict[int, list[Fraction]] = {}

    @staticmethod
    def _lead(v) -> int | None:
        for i, c in enumerate(v):
            if c:
                return i
        return None

    def insert(self, vec) -> None:
        v = list(vec)
        r = self._lead(v)
        while r is not None:
            w = self.pivots.get(r)
            if w is None:
                self.pivots[r] = v
                return
            if vp(v[r], self.p) >= vp(w[r], self.p):
                c = v[r] / w[r]
                v = [a - c * b for a, b in zip(v, w)]
            else:
                self.pivots[r] = v
                c = w[r] / v[r]
                v = [a - c * b for a, b in zip(w, v)]
            r = self._lead(v)

    def reduce(self, vec) -> tuple[list[Fraction], list[tuple[int, Fraction]]]:
        # Returns (residue, coords); vec is a member iff residue == 0,
        # and then vec == sum(c * pivot[r] for r, c in coords).
        v = list(vec)
        coords = []
        r = self._lead(v)
        while r is not None:
            w = self.pivots.get(r)
            if w is None:
                break
            val_v, val_w = vp(v[r], self.p), vp(w[r], self.p)
            if val_v < val_w:
                break
            c = v[r] / w[r]
            coords.append((r, c))
            v = [a - c * b for a, b in zip(v, w)]
            r = self._lead(v)
        return v, coords

    def vectors(self) -> list[list[Fraction]]:
        return [self.pivots[r] for r in sorted(self.pivots)]


class PLattice:
    """Z_(p)-span of finitely many p-integral vectors in Q^d.

    Equality is span equality; a unique Hermite-style canonical basis
    (pivot entries exact powers of p, earlier columns reduced mod the
    pivot) is computed on demand and cached.
    """

    __slots__ = ("p", "dim", "generators", "_basis", "_ech")

    def __init__(self, p: int, dim: int, generators: Sequence[Sequence[Fraction]] = ()):
        gens = []
        for g in generators:
            vec = tuple(pscalar(c, p) for c in g)
            if len(vec) != dim:
                raise ValueError(f"generator of length {len(vec)} in dimension {dim}")
            gens.append(vec)
        self.p = p
        self.dim = dim
        self.generators = tuple(gens)
        self._basis: tuple[Vec, ...] | None = None
        self._ech: _Echelon | None = None

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, p: int, dim: int) -> "PLattice":
        return cls(p, dim, ())

    @classmethod
    def full(cls, p: int, dim: int) -> "PLattice":
        return cls(p, dim, [[1 if i == j else 0 for i in range(dim)] for j in range(dim)])

    @classmethod
    def from_columns(cls, p: int, matrix: Sequence[Sequence[Fraction]]) -> "PLattice":
        rows = list(matrix)
        dim = len(rows)
        ncols = len(rows[0]) if rows else 0
        return cls(p, dim, [[rows[i][j] for i in range(dim)] for j in range(ncols)])

    # -- canonical form ---------------------------------------------------

    def basis(self) -> tuple[Vec, ...]:
        """Canonical basis, ordered by pivot row."""
        if self._basis is None:
            ech = _Echelon(self.p, self.dim)
            for g in self.generators:
                ech.insert(g)
            vecs = ech.vectors()
            # Normalize: pivot becomes an exact p-power, then entries of
            # earlier vectors in each pivot row are reduced mod that power.
            pivot_rows = [_Echelon._lead(v) for v in vecs]
            for k, v in enumerate(vecs):
                r = pivot_rows[k]
                val = vp(v[r], self.p)
                unit = (Fraction(self.p) ** val) / v[r]
                vecs[k] = [unit * c for c in v]
            for k in range(len(vecs)):
                r = pivot_rows[k]
                modulus = self.p ** vp(vecs[k][r], self.p)
                for l in range(k):
                    x = vecs[l][r]
                    if x == 0:
                        continue
                    q = (x - _mod_reduce(x, modulus)) / modulus
                    if q:
                        vecs[l] = [a - q * b for a, b in zip(vecs[l], vecs[k])]
            self._basis = tuple(tuple(v) for v in vecs)
        return self._basis

    def basis_columns(self) -> Mat:
        """Canonical basis as a dim x rank row-major matrix."""
        b = self.basis()
        return tuple(tuple(v[i] for v in b) for i in range(self.dim))

    @property
    def rank(self) -> int:
        return len(self.basis())

    def is_zero(self) -> bool:
        return self.rank == 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, PLattice):
            return NotImplemented
        return self.p == other.p and self.dim == other.dim and self.basis() == other.basis()

    __hash__ = None

    def __repr__(self):
        return f"PLattice(p={self.p}, dim={self.dim}, rank={self.rank})"

    # -- membership and containment ----------------------------------------

    def _echelon(self) -> _Echelon:
        if self._ech is None:
            ech = _Echelon(self.p, self.dim)
            for v in self.basis():
                ech.insert(v)
            self._ech = ech
        return self._ech

    def contains_vector(self, vec: Sequence[Fraction]) -> bool:
        v = [pscalar(c, self.p) for c in vec]
        residue, _ = self._echelon().reduce(v)
        return all(c == 0 for c in residue)

    def coordinates(self, vec: Sequence[Fraction]) -> list[Fraction] | None:
        """Coefficients of vec in the canonical basis, or None if outside."""
        v = [pscalar(c, self.p) for c in vec]
        basis = self.basis()
        ech = self._echelon()
        residue, coords = ech.reduce(v)
        if any(c != 0 for c in residue):
            return None
        by_row = {r: c for r, c in coords}
        lead_rows = [_Echelon._lead(list(b)) for b in basis]
        return [by_row.get(r, Fraction(0)) for r in lead_rows]

    def contains(self, other: "PLattice") -> bool:
        if self.dim != other.dim or self.p != other.p:
            raise ValueError("lattices live in different ambients")
        ech = self._echelon()
        for g in other.basis():
            residue, _ = ech.reduce(list(g))
            if any(c != 0 for c in residue):
                return False
        return True

    # -- lattice arithmetic --------------------------------------------------

    def add(self, other: "PLattice") -> "PLattice":
        if self.dim != other.dim or self.p != other.p:
            raise ValueError("lattices live in different ambients")
        return PLattice(self.p, self.dim, self.generators + other.generators)

    def scale(self, c: Fraction | int) -> "PLattice":
        c = pscalar(c, self.p)
        return PLattice(self.p, self.dim, [[c * x for x in g] for g in self.generators])

    def apply_matrix(self, rows: Sequence[Sequence[Fraction]]) -> "PLattice":
        """Image under the linear map with the given row-major matrix."""
        dim_out = len(rows)
        return PLattice(self.p, dim_out, [_matvec(rows, g) for g in self.basis()])

    def intersect(self, other: "PLattice") -> "PLattice":
        """L1 cap L2, via the saturated kernel of [B1 | -B2]."""
        if self.dim != other.dim or self.p != other.p:
            raise ValueError("lattices live in different ambients")
        b1, b2 = self.basis(), other.basis()
        r1, r2 = len(b1), len(b2)
        if r1 == 0 or r2 == 0:
            return PLattice.zero(self.p, self.dim)
        rows = [
            [b1[j][i] for j in range(r1)] + [-b2[j][i] for j in range(r2)]
            for i in range(self.dim)
        ]
        kernel = saturated_kernel(rows, r1 + r2, self.p)
        gens = []
        for k in kernel:
            gens.append([
                sum((k[j] * b1[j][i] for j in range(r1)), Fraction(0))
                for i in range(self.dim)
            ])
        return PLattice(self.p, self.dim, gens)

    def saturate_in(self, ambient: "PLattice") -> "PLattice":
        """{x in ambient : p^k x in self for some k} == ambient cap Q-span(self)."""
        if not ambient.contains(self):
            raise NotContained("lattice is not contained in the ambient")
        if self.is_zero():
            return PLattice.zero(self.p, self.dim)
        amb = ambient.basis()
        coords = [ambient.coordinates(g) for g in self.basis()]
        ra, r = len(amb), len(coords)
        rows = [[coords[j][i] for j in range(r)] for i in range(ra)]
        res = snf_p(rows, self.p)
        gens = []
        for j in range(res.rank):
            coord = [res.uinv[i][j] for i in range(ra)]
            gens.append([
                sum((coord[t] * amb[t][i] for t in range(ra)), Fraction(0))
                for i in range(self.dim)
            ])
        return PLattice(self.p, self.dim, gens)

    def quotient_invariants(self, sub: "PLattice") -> tuple[int, tuple[int, ...]]:
        """Invariants (free rank, torsion p-exponents) of self / sub.

        Torsion exponents are the positive valuations in the Smith form
        of sub expressed in a basis of self, in nondecreasing order.
        """
        if not self.contains(sub):
            raise NotContained("quotient requires sub to be contained")
        r = self.rank
        if sub.is_zero():
            return r, ()
        coords = [self.coordinates(g) for g in sub.basis()]
        n = len(coords)
        rows = [[coords[j][i] for j in range(n)] for i in range(r)]
        res = snf_p(rows, self.p)
        torsion = tuple(v for v in res.valuations[: res.rank] if v > 0)
        return r - res.rank, torsion
