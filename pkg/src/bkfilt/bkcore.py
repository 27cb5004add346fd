"""Breuil-Kisin modules and the Nygaard filtration, computed exactly.

A rank-d module over S = Z_p[[u]] is described by the square matrix B
of its linearized Frobenius (column j = image of the j-th basis
vector), with det B = unit * E^k.  The level-i filtration piece
{x : B x in E^i S^d} is free of rank d and carried by a basis matrix
C_i; one reduction step computes C_{i+1} from C_i through an exact
kernel computation at u = p:

    A' = (B C_i) / E^i,  V = A'(p),  K = ker V (saturated),
    W = [K | completion],  C_{i+1} = C_i W diag(1_r, E I_{d-r}).

Membership of one free S-submodule in another is decided without ever
inverting a power series: with det A = unit * E^k, span(B) lies in
span(A) iff E^k divides every entry of adj(A) * B.  (The unit part
never obstructs: dividing a p-integral polynomial by a unit power
series with p-unit constant term keeps all coefficients p-integral.)
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (
    InfiniteHeight,
    NotFreeBasis,
    StabilizationFailure,
    ZeroDeterminant,
)
from .exactring import PolyU
from .plattice import PLattice, extend_to_basis, saturated_kernel

PolyMat = tuple[tuple[PolyU, ...], ...]

__all__ = [
    "BKModule",
    "FiltStage",
    "Filtration",
    "poly_identity",
    "poly_mat_mul",
    "poly_det",
    "poly_adjugate",
    "mat_scale",
    "validate",
    "nygaard_step",
    "nygaard_filtration",
    "evp_matrix",
    "evp_image",
    "module_contains",
    "module_equal",
    "mod_Em_lattice_model",
    "frobenius_model_matrix",
    "OracleResult",
    "nygaard_direct_oracle",
]


# -- polynomial matrix helpers -----------------------------------------


def _freeze(rows) -> PolyMat:
    return tuple(tuple(r) for r in rows)


def poly_identity(p: int, d: int) -> PolyMat:
    one, zero = PolyU.one(p), PolyU.zero(p)
    return tuple(tuple(one if i == j else zero for j in range(d)) for i in range(d))


def poly_mat_mul(A: Sequence[Sequence[PolyU]], B: Sequence[Sequence[PolyU]]) -> PolyMat:
    n, mid, m = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = None
            for k in range(mid):
                if A[i][k].is_zero() or B[k][j].is_zero():
                    continue
                term = A[i][k] * B[k][j]
                acc = term if acc is None else acc + term
            row.append(acc if acc is not None else PolyU.zero(A[i][0].p))
        out.append(row)
    return _freeze(out)


def mat_scale(A: Sequence[Sequence[PolyU]], f: PolyU) -> PolyMat:
    return _freeze([[entry * f for entry in row] for row in A])


def poly_det(A: Sequence[Sequence[PolyU]]) -> PolyU:
    d = len(A)
    p = A[0][0].p
    if d == 1:
        return A[0][0]
    if d == 2:
        return A[0][0] * A[1][1] - A[0][1] * A[1][0]
    # Laplace expansion along the first row; fine for the small ranks
    # this artifact targets.
    total = PolyU.zero(p)
    for j in range(d):
        if A[0][j].is_zero():
            continue
        minor = [[A[i][k] for k in range(d) if k != j] for i in range(1, d)]
        term = A[0][j] * poly_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def poly_adjugate(A: Sequence[Sequence[PolyU]]) -> PolyMat:
    d = len(A)
    p = A[0][0].p
    if d == 1:
        return _freeze([[PolyU.one(p)]])
    adj = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            minor = [
                [A[r][c] for c in range(d) if c != j]
                for r in range(d)
                if r != i
            ]
            cof = poly_det(minor)
            adj[j][i] = cof if (i + j) % 2 == 0 else -cof
    return _freeze(adj)


def _columns(A: Sequence[Sequence[PolyU]]) -> list[list[PolyU]]:
    d = len(A)
    return [[A[i][j] for i in range(d)] for j in range(len(A[0]))]


# -- modules and filtration stages ----------------------------------------


@dataclass(frozen=True)
class BKModule:
    """Finite free S-module with Frobenius matrix B of finite E-height.

    Column j of B is the image of the j-th basis vector; entries are
    PolyU over the module's prime.
    """

    p: int
    d: int
    B: PolyMat
    name: str | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("rank must be at least 1")
        if len(self.B) != self.d or any(len(row) != self.d for row in self.B):
            raise ValueError(f"Frobenius matrix must be {self.d}x{self.d}")
        for row in self.B:
            for entry in row:
                if not isinstance(entry, PolyU) or entry.p != self.p:
                    raise ValueError("matrix entries must be PolyU over the module prime")
        object.__setattr__(self, "B", _freeze(self.B))


def validate(m: BKModule) -> int:
    """Total E-exponent k with det B = unit * E^k.

    Raises ZeroDeterminant when det B = 0 and InfiniteHeight when the
    cofactor left after stripping all E-factors is a non-unit of S.
    """
    det = poly_det(m.B)
    if det.is_zero():
        raise ZeroDeterminant("det B = 0")
    k, cofactor = det.e_split()
    if not cofactor.is_unit_in_S():
        raise InfiniteHeight(
            f"det B = E^{k} * ({cofactor.to_string()}) with non-unit cofactor"
        )
    return k


@dataclass(frozen=True)
class FiltStage:
    """Basis matrix C of the level-i filtration piece, det C = unit * E^kappa."""

    i: int
    C: PolyMat
    kappa: int


@dataclass(frozen=True)
class Filtration:
    """Stages 0..i_max of the filtration of a validated module.

    height is the largest level with nonzero image under u |-> p, i.e.
    the largest jump of the induced filtration on Q^d; it is known
    exactly whenever the construction ran past it (height_known).
    """

    module: BKModule
    stages: tuple[FiltStage, ...]
    height: int | None

    @property
    def i_max(self) -> int:
        return len(self.stages) - 1

    def stage(self, i: int) -> FiltStage:
        return self.stages[i]

    @property
    def height_known(self) -> bool:
        return self.height is not None


def nygaard_step(m: BKModule, stage: FiltStage) -> FiltStage:
    """One reduction step: the basis of level i+1 from the basis of level i."""
    p, d = m.p, m.d
    prod = poly_mat_mul(m.B, stage.C)
    aprime = [[entry.div_by_E_exact(stage.i) for entry in row] for row in prod]
    v_rows = [[entry.eval_at_p() for entry in row] for row in aprime]
    kernel = saturated_kernel(v_rows, d, p)
    r = len(kernel)
    w = extend_to_basis(kernel, d, p)
    w_poly = [[PolyU.const(w[i][j], p) for j in range(d)] for i in range(d)]
    cw = poly_mat_mul(stage.C, w_poly)
    e = PolyU.e_poly(p)
    next_rows = [
        [cw[i][j] if j < r else cw[i][j] * e for j in range(d)]
        for i in range(d)
    ]
    return FiltStage(stage.i + 1, _freeze(next_rows), stage.kappa + (d - r))


def _evp_rank(stage: FiltStage, p: int) -> int:
    return evp_image(stage, p).rank


def nygaard_filtration(m: BKModule, i_max: int | None = None) -> Filtration:
    """Iterate nygaard_step from the identity stage.

    With i_max omitted the filtration is computed through level h+1,
    where h is the largest jump of the induced filtration on Q^d (the
    first level whose image under u |-> p vanishes).  A user-provided
    i_max is clamped to 4*d*k to bound degree growth.  Whenever the
    stages reach past h, the stabilization identity
    span(C_{h+1}) = span(E * C_h) is asserted.
    """
    k = validate(m)
    p, d = m.p, m.d
    cap = 4 * d * max(k, 1) + 1
    if i_max is not None:
        i_max = min(i_max, cap)

    stages = [FiltStage(0, poly_identity(p, d), 0)]
    ranks = [d]
    while True:
        level = len(stages) - 1
        if i_max is None:
            if ranks[-1] == 0:
                break
            if level > cap:
                raise StabilizationFailure(
                    f"image rank never reached 0 within {cap} levels"
                )
        else:
            if level >= i_max:
                break
        nxt = nygaard_step(m, stages[-1])
        stages.append(nxt)
        ranks.append(_evp_rank(nxt, p))

    height = None
    for i, r in enumerate(ranks):
        if r > 0:
            height = i
    if ranks[-1] > 0:
        height = None  # ran out of levels before the image vanished

    if height is not None and len(stages) > height + 1:
        c_h = stages[height].C
        c_h1 = stages[height + 1].C
        if not module_equal(c_h1, mat_scale(c_h, PolyU.e_poly(p)), p):
            raise StabilizationFailure(
                f"span(C_{height + 1}) != span(E*C_{height})"
            )
    return Filtration(module=m, stages=tuple(stages), height=height)


# -- evaluation at u = p ---------------------------------------------------


def evp_matrix(stage: FiltStage, p: int) -> tuple[tuple[Fraction, ...], ...]:
    """The basis matrix of the stage with u evaluated at p."""
    return tuple(tuple(entry.eval_at_p() for entry in row) for row in stage.C)


def evp_image(stage: FiltStage, p: int) -> PLattice:
    """Lattice spanned by the columns of C_i at u = p."""
    return PLattice.from_columns(p, evp_matrix(stage, p))


# -- free S-submodule comparison -------------------------------------------


def _det_e_split(A: Sequence[Sequence[PolyU]]) -> tuple[int, PolyU]:
    det = poly_det(A)
    if det.is_zero():
        raise NotFreeBasis("basis matrix has zero determinant")
    k, cofactor = det.e_split()
    if not cofactor.is_unit_in_S():
        raise NotFreeBasis(
            f"determinant is E^{k} * ({cofactor.to_string()}), cofactor is not a unit"
        )
    return k, cofactor


def module_contains(A: Sequence[Sequence[PolyU]], Bm: Sequence[Sequence[PolyU]], p: int) -> bool:
    """True iff the column span of Bm over S lies in the span of A.

    Both matrices must be square with determinant unit * E^k.  The test
    is exact divisibility of adj(A)*Bm by E^{k_A}: the quotient by the
    unit part of det A is automatically a p-integral power series, so
    no truncation or inversion is needed.
    """
    k_a, _ = _det_e_split(A)
    _det_e_split(Bm)
    prod = poly_mat_mul(poly_adjugate(A), Bm)
    for row in prod:
        for entry in row:
            val = entry.e_valuation()
            if val is not None and val < k_a:
                return False
    return True


def module_equal(A: Sequence[Sequence[PolyU]], Bm: Sequence[Sequence[PolyU]], p: int) -> bool:
    """True iff the column spans of A and Bm over S coincide."""
    k_a, _ = _det_e_split(A)
    k_b, _ = _det_e_split(Bm)
    if k_a != k_b:
        return False
    return module_contains(A, Bm, p)


# -- finite lattice models of S/E^m ----------------------------------------


def _column_model_vector(col: Sequence[PolyU], mlevel: int) -> list[Fraction]:
    # Concatenated truncated E-expansions: block t holds the classes of
    # coordinate t against the basis 1, E, ..., E^{m-1} of S/E^m.
    out = []
    for entry in col:
        ee = entry.e_expand()
        out.extend(list(ee[:mlevel]) + [Fraction(0)] * (mlevel - min(len(ee), mlevel)))
    return out


def _u_action(vec: Sequence[Fraction], p: int, mlevel: int) -> list[Fraction]:
    # u = E + p acts blockwise as p*id + shift (E * E^{m-1} == 0).
    out = [Fraction(0)] * len(vec)
    for base in range(0, len(vec), mlevel):
        for a in range(mlevel):
            c = vec[base + a]
            if not c:
                continue
            out[base + a] += p * c
            if a + 1 < mlevel:
                out[base + a + 1] += c
    return out


def _stable_u_span(p: int, mlevel: int, gens: list[list[Fraction]], dim: int) -> PLattice:
    lat = PLattice(p, dim, gens)
    while True:
        shifted = [_u_action(v, p, mlevel) for v in lat.basis()]
        if all(lat.contains_vector(s) for s in shifted):
            return lat
        lat = PLattice(p, dim, list(lat.basis()) + shifted)


def mod_Em_lattice_model(stage: FiltStage, mlevel: int, p: int) -> PLattice:
    """Image of the stage's span in (S/E^m)^d as a lattice in Q^{m*d}.

    Computed as the span of the reduced basis columns closed under
    multiplication by u.  For mlevel >= i+1 the quotient of consecutive
    stage models is exactly the level-i graded piece of the filtration
    on the module itself (E^m S^d lies inside the level-(i+1) piece).
    """
    d = len(stage.C)
    dim = mlevel * d
    gens = [_column_model_vector(col, mlevel) for col in _columns(stage.C)]
    return _stable_u_span(p, mlevel, gens, dim)


def shift_lattice(lat: PLattice, mlevel: int) -> PLattice:
    """Image of a model lattice under multiplication by E."""
    gens = []
    for v in lat.basis():
        out = [Fraction(0)] * lat.dim
        for base in range(0, lat.dim, mlevel):
            for a in range(mlevel - 1):
                out[base + a + 1] = v[base + a]
        gens.append(out)
    return PLattice(lat.p, lat.dim, gens)


def full_model(p: int, d: int, mlevel: int) -> PLattice:
    """The model of (S/E^m)^d itself: all of Z_(p)^{m*d}."""
    return PLattice.full(p, mlevel * d)


def frobenius_model_matrix(m: BKModule, i: int) -> list[list[Fraction]]:
    """Matrix of B acting on (S/E^i)^d in the basis E^a e_t, as i*d x i*d rows."""
    p, d = m.p, m.d
    dim = i * d
    rows = [[Fraction(0)] * dim for _ in range(dim)]
    for r in range(d):
        for c in range(d):
            ee = m.B[r][c].e_expand()[:i]
            # Multiplication by sum ee[k] E^k is lower-triangular Toeplitz.
            for a in range(i):
                for k, coeff in enumerate(ee):
                    if a + k >= i:
                        break
                    if coeff:
                        rows[r * i + a + k][c * i + a] += coeff
    return rows


@dataclass(frozen=True)
class OracleResult:
    """Outcome of the direct kernel computation at one level."""

    i: int
    kernel_lattice: PLattice
    candidate_lattice: PLattice
    verdict: bool


def nygaard_direct_oracle(m: BKModule, stage: FiltStage) -> OracleResult:
    """Check a candidate level-i basis against an independent computation.

    The level-i piece is, by definition, the preimage in S^d of the
    kernel of B acting on (S/E^i)^d.  That kernel is computed directly
    as a saturated kernel in Q^{i*d} and compared with the stable
    u-span of the candidate's columns reduced mod E^i.
    """
    i = stage.i
    if i < 1:
        raise ValueError("oracle needs a level >= 1")
    p, d = m.p, m.d
    dim = i * d
    phi = frobenius_model_matrix(m, i)
    kernel = PLattice(p, dim, saturated_kernel(phi, dim, p))
    candidate = mod_Em_lattice_model(stage, i, p)
    return OracleResult(i, kernel, candidate, kernel == candidate)
