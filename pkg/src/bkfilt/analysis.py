"""Invariants of the induced filtration: graded torsion, weights, checks.

Evaluating each filtration stage at u = p produces a decreasing chain of
lattices in Q^d.  This module extracts the torsion of its graded
pieces, the weight multiset (the jumps of the rationalized chain), the
index sets where torsion may legally appear, and the elementary-divisor
invariants that cross-check everything:

* E-elementary divisors of B over the localization at (E) must equal
  the weight multiset (two independent algorithms, which must agree);
* u-elementary divisors of B mod p land in the same residue classes
  mod p as the weights, on well-behaved inputs;
* torsion may only occur at indices of the form (weight + positive
  multiple of p), again on well-behaved inputs.

An adapted basis (a module basis whose E-power rescalings give bases of
every filtration level) exists iff all graded torsion below the top
weight vanishes; when it exists it is constructed from a basis of the
lattice chain and verified level by level.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .bkcore import (
    BKModule,
    Filtration,
    _det_e_split,
    evp_image,
    evp_matrix,
    full_model,
    mat_scale,
    mod_Em_lattice_model,
    module_contains,
    module_equal,
    nygaard_filtration,
    poly_det,
    shift_lattice,
    validate,
)
from .errors import (
    InconsistentRanks,
    InternalMismatch,
    NotFreeBasis,
    NotSaturated,
    SingularModP,
)
from .exactring import PolyU
from .plattice import PLattice, extend_to_basis, solve_in_span

__all__ = [
    "GradedPiece",
    "WeightData",
    "GKData",
    "AdaptedBasis",
    "CheckReport",
    "graded_report",
    "hodge_tate_weights",
    "check_thm1",
    "check_thm1_refined",
    "hodge_invariants_at_E",
    "gee_kisin_invariants",
    "check_gee_kisin",
    "saturation_profile",
    "stage_saturation_profile",
    "decide_adapted_basis",
    "construct_adapted_basis",
    "verify_adapted",
    "check_weight_consistency",
    "check_lemma_suite",
    "ModuleAnalysis",
    "analyze",
]


@dataclass(frozen=True)
class CheckReport:
    """Verdict of one monitored predicate; holds iff violations is empty."""

    predicate: str
    holds: bool
    violations: tuple = ()

    def __post_init__(self):
        if self.holds != (len(self.violations) == 0):
            raise ValueError("holds must match emptiness of violations")


@dataclass(frozen=True)
class GradedPiece:
    """Free rank and torsion p-exponents of one graded piece of the chain."""

    i: int
    free_rank: int
    torsion: tuple[int, ...]


@dataclass(frozen=True)
class WeightData:
    """Weight multiset and the derived index sets.

    J collects weight + m*p for m >= 0 capped at h; Jstrict is the m > 0
    part, the only indices where graded torsion may appear on
    well-behaved inputs.
    """

    p: int
    weights: tuple[int, ...]
    h: int
    d_table: tuple[int, ...]
    J: frozenset[int]
    Jstrict: frozenset[int]


@dataclass(frozen=True)
class GKData:
    """u-valuations of the elementary divisors of B mod p, with residues."""

    a: tuple[int, ...]
    residues: tuple[int, ...]


@dataclass(frozen=True)
class AdaptedBasis:
    """Module basis (columns) with levels s_j such that the columns scaled
    by E^{max(0, i - s_j)} give a basis of every filtration level i."""

    basis: tuple[tuple[PolyU, ...], ...]
    levels: tuple[int, ...]


# -- graded pieces and weights ---------------------------------------------


def _require_complete(filt: Filtration):
    if not filt.height_known:
        raise ValueError("filtration is incomplete: image rank never reached zero")


def evp_lattices(filt: Filtration) -> list[PLattice]:
    p = filt.module.p
    return [evp_image(st, p) for st in filt.stages]


def graded_report(filt: Filtration) -> list[GradedPiece]:
    """Free rank and torsion exponents of consecutive lattice quotients."""
    _require_complete(filt)
    lats = evp_lattices(filt)
    out = []
    for i in range(len(lats) - 1):
        free, torsion = lats[i].quotient_invariants(lats[i + 1])
        out.append(GradedPiece(i, free, torsion))
    return out


def hodge_tate_weights(report: Sequence[GradedPiece], d: int, p: int) -> WeightData:
    """Weights are the levels counted with graded free rank."""
    weights = []
    for gp in report:
        weights.extend([gp.i] * gp.free_rank)
    if len(weights) != d:
        raise InconsistentRanks(
            f"graded free ranks sum to {len(weights)}, expected {d}"
        )
    weights.sort()
    h = weights[-1]
    d_table = tuple(d - sum(1 for w in weights if w >= i) for i in range(h + 2))
    J = set()
    Jstrict = set()
    for w in set(weights):
        m = 0
        while w + m * p <= h:
            J.add(w + m * p)
            if m > 0:
                Jstrict.add(w + m * p)
            m += 1
    return WeightData(p, tuple(weights), h, d_table, frozenset(J), frozenset(Jstrict))


def check_thm1(report: Sequence[GradedPiece], wd: WeightData) -> CheckReport:
    """Torsion only at indices weight + (positive multiple of p)."""
    violations = tuple(
        (gp.i, gp.torsion) for gp in report if gp.torsion and gp.i not in wd.Jstrict
    )
    return CheckReport("torsion_in_Jstrict", not violations, violations)


def check_thm1_refined(report: Sequence[GradedPiece], wd: WeightData) -> CheckReport:
    """The sharper support statement: graded pieces vanish off J and are
    torsion-free on J minus Jstrict."""
    violations = []
    for gp in report:
        if gp.i > wd.h:
            continue
        if gp.i not in wd.J and (gp.free_rank or gp.torsion):
            violations.append((gp.i, "nonzero off J"))
        elif gp.i in wd.J and gp.i not in wd.Jstrict and gp.torsion:
            violations.append((gp.i, f"torsion {gp.torsion} on J \\ Jstrict"))
    return CheckReport("graded_support_refined", not violations, tuple(violations))


# -- elementary divisors at (E) and mod p ------------------------------------


def _divisor_valuations(entries, ring) -> list[int]:
    # Smith-form diagonal valuations over a DVR, by valuation pivoting.
    # After each pivot the remaining entries keep valuation >= the pivot's,
    # so the output is nondecreasing.  Ties pick the lowest (row, col).
    S = [row[:] for row in entries]
    n = len(S)
    mcols = len(S[0]) if S else 0
    vals: list[int] = []
    for l in range(min(n, mcols)):
        best = None
        for i in range(l, n):
            for j in range(l, mcols):
                if ring.is_zero(S[i][j]):
                    continue
                v = ring.val(S[i][j])
                if best is None or v < best[0]:
                    best = (v, i, j)
        if best is None:
            break
        v, bi, bj = best
        S[l], S[bi] = S[bi], S[l]
        for row in S:
            row[l], row[bj] = row[bj], row[l]
        piv = S[l][l]
        for i in range(l + 1, n):
            if ring.is_zero(S[i][l]):
                continue
            f = ring.div(S[i][l], piv)
            S[i] = [ring.sub(a, ring.mul(f, b)) for a, b in zip(S[i], S[l])]
        # The column sweep only touches row l now, so just drop its tail.
        for j in range(l + 1, mcols):
            S[l][j] = ring.zero()
        vals.append(v)
    return vals


class _EValRing:
    # Fractions of u-polynomials, valued by order of vanishing at u = p.

    def __init__(self, p: int):
        self.p = p
        self._one = PolyU.one(p)
        self._zero = PolyU.zero(p)

    def wrap(self, f: PolyU):
        return (f, self._one)

    def zero(self):
        return (self._zero, self._one)

    def is_zero(self, a) -> bool:
        return a[0].is_zero()

    def val(self, a) -> int:
        return a[0].e_valuation() - a[1].e_valuation()

    def sub(self, a, b):
        return (a[0] * b[1] - b[0] * a[1], a[1] * b[1])

    def mul(self, a, b):
        return (a[0] * b[0], a[1] * b[1])

    def div(self, a, b):
        return (a[0] * b[1], a[1] * b[0])


def _fp_trim(cs: list[int]) -> list[int]:
    while cs and cs[-1] == 0:
        cs.pop()
    return cs


def _fp_add(a, b, p):
    out = list(a) + [0] * (len(b) - len(a)) if len(a) < len(b) else list(a)
    for i, c in enumerate(b):
        out[i] = (out[i] + c) % p
    return _fp_trim(out)


def _fp_neg(a, p):
    return [(-c) % p for c in a]

def _fp_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _fp_trim(out)


def _fp_valu(a) -> int | None:
    for i, c in enumerate(a):
        if c:
            return i
    return None


def _fp_det(rows, p) -> list[int]:
    d = len(rows)
    if d == 1:
        return list(rows[0][0])
    total: list[int] = []
    for j in range(d):
        if not rows[0][j]:
            continue
        minor = [[rows[i][k] for k in range(d) if k != j] for i in range(1, d)]
        term = _fp_mul(rows[0][j], _fp_det(minor, p), p)
        if j % 2:
            term = _fp_neg(term, p)
        total = _fp_add(total, term, p)
    return total


class _UValRingFp:
    # Fractions of polynomials over F_p, valued by u-adic valuation.

    def __init__(self, p: int):
        self.p = p

    def wrap(self, coeffs: list[int]):
        return (list(coeffs), [1])

    def zero(self):
        return ([], [1])

    def is_zero(self, a) -> bool:
        return not a[0]

    def val(self, a) -> int:
        return _fp_valu(a[0]) - _fp_valu(a[1])

    def sub(self, a, b):
        num = _fp_add(_fp_mul(a[0], b[1], self.p), _fp_neg(_fp_mul(b[0], a[1], self.p), self.p), self.p)
        return (num, _fp_mul(a[1], b[1], self.p))

    def mul(self, a, b):
        return (_fp_mul(a[0], b[0], self.p), _fp_mul(a[1], b[1], self.p))

    def div(self, a, b):
        return (_fp_mul(a[0], b[1], self.p), _fp_mul(a[1], b[0], self.p))


def _minor_profile(d, det_val) -> list[int | None]:
    # m_k = minimal valuation over all k x k minors; None if all vanish.
    out = []
    for k in range(1, d + 1):
        best = None
        for rows_idx in itertools.combinations(range(d), k):
            for cols_idx in itertools.combinations(range(d), k):
                v = det_val(rows_idx, cols_idx)
                if v is None:
                    continue
                if best is None or v < best:
                    best = v
        out.append(best)
    return out


def _divisors_from_minors(profile: list[int | None]) -> list[int]:
    divisors = []
    prev = 0
    for m_k in profile:
        if m_k is None:
            break
        divisors.append(m_k - prev)
        prev = m_k
    return divisors


def hodge_invariants_at_E(m: BKModule) -> tuple[int, ...]:
    """E-valuations of the elementary divisors of B over the DVR S_(E).

    Computed by valuation-pivot elimination and, independently, from
    minimal valuations of k x k minors; disagreement (impossible for a
    correct implementation) raises InternalMismatch.
    """
    k_total = validate(m)
    d = m.d
    ring = _EValRing(m.p)
    entries = [[ring.wrap(e) for e in row] for row in m.B]
    elim = _divisor_valuations(entries, ring)

    def det_val(rows_idx, cols_idx):
        sub = [[m.B[i][j] for j in cols_idx] for i in rows_idx]
        return poly_det(sub).e_valuation()

    minors = _divisors_from_minors(_minor_profile(d, det_val))
    if len(elim) != d or elim != minors:
        raise InternalMismatch(
            f"E-divisors disagree: elimination {elim}, minors {minors}"
        )
    if sum(elim) != k_total:
        raise InternalMismatch(
            f"E-divisors sum to {sum(elim)}, det exponent is {k_total}"
        )
    return tuple(elim)


def _mod_p_matrix(m: BKModule) -> list[list[list[int]]]:
    p = m.p
    out = []
    for row in m.B:
        new_row = []
        for entry in row:
            cs = [
                (c.numerator * pow(c.denominator, -1, p)) % p for c in entry.coeffs
            ]
            new_row.append(_fp_trim(cs))
        out.append(new_row)
    return out


def gee_kisin_invariants(m: BKModule) -> GKData:
    """u-valuations of the elementary divisors of B mod p over F_p[[u]].

    Elimination and the minor-valuation formula are run independently
    and must agree; their sum must equal the det exponent of B.
    """
    k_total = validate(m)
    p, d = m.p, m.d
    rows = _mod_p_matrix(m)
    det = _fp_det(rows, p)
    if not det:
        raise SingularModP("det(B mod p) = 0 despite det B = unit * E^k")
    ring = _UValRingFp(p)
    entries = [[ring.wrap(e) for e in row] for row in rows]
    elim = _divisor_valuations(entries, ring)

    def det_val(rows_idx, cols_idx):
        sub = [[rows[i][j] for j in cols_idx] for i in rows_idx]
        return _fp_valu(_fp_det(sub, p))

    minors = _divisors_from_minors(_minor_profile(d, det_val))
    if len(elim) != d or elim != minors:
        raise InternalMismatch(
            f"mod-p divisors disagree: elimination {elim}, minors {minors}"
        )
    if sum(elim) != k_total:
        raise InternalMismatch(
            f"mod-p divisors sum to {sum(elim)}, det exponent is {k_total}"
        )
    return GKData(tuple(elim), tuple(sorted(a % p for a in elim)))


def check_gee_kisin(gk: GKData, wd: WeightData) -> CheckReport:
    """Residues mod p of the mod-p divisors equal those of the weights,
    as multisets; the divisor bound a_j <= h is monitored alongside."""
    violations = []
    weight_residues = tuple(sorted(w % wd.p for w in wd.weights))
    if gk.residues != weight_residues:
        violations.append(("residues", gk.residues, weight_residues))
    for j, a in enumerate(gk.a):
        if a > wd.h:
            violations.append(("exponent_bound", j, a, wd.h))
    return CheckReport("gee_kisin_residues", not violations, tuple(violations))


def check_weight_consistency(m: BKModule, wd: WeightData) -> CheckReport:
    """Filtration-derived weights equal the E-elementary divisors of B,
    and both sum to the det exponent."""
    divisors = tuple(sorted(hodge_invariants_at_E(m)))
    violations = []
    if divisors != wd.weights:
        violations.append(("multiset", wd.weights, divisors))
    k_total = validate(m)
    if sum(wd.weights) != k_total:
        violations.append(("sum", sum(wd.weights), k_total))
    return CheckReport("weights_match_e_divisors", not violations, tuple(violations))


# -- saturation ---------------------------------------------------------------


def saturation_profile(filt: Filtration) -> tuple[bool, ...]:
    """Per level: is the lattice saturated in the full level-0 lattice?"""
    lats = evp_lattices(filt)
    ambient = lats[0]
    out = []
    for lat in lats:
        out.append(lat == lat.saturate_in(ambient))
    return tuple(out)


def stage_saturation_profile(report: Sequence[GradedPiece]) -> tuple[bool, ...]:
    """Per level: is level i+1 saturated in level i (no torsion at i)?"""
    return tuple(not gp.torsion for gp in report)


# -- adapted bases -------------------------------------------------------------


def decide_adapted_basis(report: Sequence[GradedPiece], wd: WeightData) -> bool:
    """True iff no graded torsion below the top weight (iff an adapted
    basis exists; the graded piece at the top weight is always free)."""
    return all(not gp.torsion for gp in report if gp.i <= wd.h - 1)


def construct_adapted_basis(filt: Filtration) -> AdaptedBasis | None:
    """Build and verify an adapted basis; None means no verified basis
    was produced (never a false claim).

    A basis of the level-0 lattice adapted to the saturated chain is
    built by extending a basis of each level to the next one down; each
    vector is then lifted to a polynomial column of the stage where it
    sits deepest.  The result is verified level by level before being
    returned.
    """
    _require_complete(filt)
    p, d = filt.module.p, filt.module.d
    h = filt.height
    lats = evp_lattices(filt)

    picked: list[tuple[int, tuple[Fraction, ...]]] = []
    current: list[tuple[Fraction, ...]] = []
    for i in range(h, -1, -1):
        lat = lats[i]
        r = lat.rank
        if r == len(current):
            continue
        coords = []
        for v in current:
            c = lat.coordinates(v)
            if c is None:
                return None
            coords.append(c)
        try:
            w = extend_to_basis(coords, r, p)
        except NotSaturated:
            return None
        basis_vecs = lat.basis()
        for j in range(len(current), r):
            vec = tuple(
                sum((w[t][j] * basis_vecs[t][coord] for t in range(r)), Fraction(0))
                for coord in range(lat.dim)
            )
            picked.append((i, vec))
            current.append(vec)

    columns: list[list[PolyU]] = []
    levels: list[int] = []
    for s, vec in picked:
        stage = filt.stage(s)
        y = solve_in_span([list(row) for row in evp_matrix(stage, p)], vec, p)
        if y is None:
            return None
        col = [PolyU.zero(p) for _ in range(d)]
        for t, coeff in enumerate(y):
            if coeff:
                for r_i in range(d):
                    col[r_i] = col[r_i] + stage.C[r_i][t] * coeff
        columns.append(col)
        levels.append(s)

    basis_rows = tuple(
        tuple(columns[j][i] for j in range(d)) for i in range(d)
    )
    ab = AdaptedBasis(basis_rows, tuple(levels))
    return ab if verify_adapted(ab, filt).holds else None


def verify_adapted(ab: AdaptedBasis, filt: Filtration) -> CheckReport:
    """Check that E-power rescalings of the basis span every level."""
    p = filt.module.p
    d = filt.module.d
    e = PolyU.e_poly(p)
    violations = []
    for st in filt.stages:
        cand = [list(row) for row in ab.basis]
        for j in range(d):
            power = max(0, st.i - ab.levels[j])
            if power:
                scale = e ** power
                for i in range(d):
                    cand[i][j] = cand[i][j] * scale
        try:
            ok = module_equal(st.C, cand, p)
        except NotFreeBasis:
            ok = False
        if not ok:
            violations.append(st.i)
    return CheckReport("adapted_basis_levels", not violations, tuple(violations))


# -- the basic-facts suite on the module-level filtration ----------------------


def check_lemma_suite(filt: Filtration) -> list[CheckReport]:
    """Structural invariants of the stage bases: freeness certificates,
    E-step containment, the exact-sequence identity in finite models,
    and torsion-freeness of module-level graded pieces."""
    p = filt.module.p
    e = PolyU.e_poly(p)
    reports = []

    violations = []
    for st in filt.stages:
        try:
            k, _ = _det_e_split(st.C)
            if k != st.kappa:
                violations.append((st.i, f"kappa {st.kappa} != det exponent {k}"))
        except NotFreeBasis as exc:
            violations.append((st.i, str(exc)))
    reports.append(CheckReport("freeness_certificate", not violations, tuple(violations)))

    violations = []
    for i in range(1, len(filt.stages)):
        prev_scaled = mat_scale(filt.stage(i - 1).C, e)
        if not module_contains(filt.stage(i).C, prev_scaled, p):
            violations.append((i, "E * level(i-1) not inside level(i)"))
    reports.append(CheckReport("e_step_containment", not violations, tuple(violations)))

    models: dict[tuple[int, int], PLattice] = {}

    def model(i: int, mlevel: int) -> PLattice:
        key = (i, mlevel)
        if key not in models:
            models[key] = mod_Em_lattice_model(filt.stage(i), mlevel, p)
        return models[key]

    violations = []
    for i in range(1, len(filt.stages)):
        mlevel = i + 1
        f_i = model(i, mlevel)
        f_prev = model(i - 1, mlevel)
        whole = shift_lattice(full_model(p, filt.module.d, mlevel), mlevel)
        lhs = f_i.intersect(whole)
        rhs = shift_lattice(f_prev, mlevel)
        if lhs != rhs:
            violations.append((i, "E*whole cap level(i) != E*level(i-1)"))
    reports.append(CheckReport("exact_sequence", not violations, tuple(violations)))

    violations = []
    for i in range(len(filt.stages) - 1):
        mlevel = i + 2
        f_i = model(i, mlevel)
        f_next = model(i + 1, mlevel)
        _, torsion = f_i.quotient_invariants(f_next)
        if torsion:
            violations.append((i, torsion))
    reports.append(CheckReport("graded_module_free", not violations, tuple(violations)))

    violations = []
    if filt.height_known and filt.i_max >= filt.height + 1:
        h = filt.height
        if not module_equal(filt.stage(h + 1).C, mat_scale(filt.stage(h).C, e), p):
            violations.append((h + 1, "no stabilization"))
    reports.append(CheckReport("stabilization", not violations, tuple(violations)))
    return reports


# -- one-stop analysis ----------------------------------------------------------


@dataclass(frozen=True)
class ModuleAnalysis:
    """Everything the reporting layer needs about one module."""

    module: BKModule
    det_exponent: int
    filtration: Filtration
    graded: tuple[GradedPiece, ...]
    weights: WeightData
    e_divisors: tuple[int, ...]
    gk: GKData
    checks: tuple[CheckReport, ...]
    saturation_in_ambient: tuple[bool, ...]
    saturation_stepwise: tuple[bool, ...]
    adapted_exists: bool
    adapted: AdaptedBasis | None
    adapted_status: str  # "verified" | "absent" | "unknown" | "skipped"

    def check(self, predicate: str) -> CheckReport:
        for rep in self.checks:
            if rep.predicate == predicate:
                return rep
        raise KeyError(predicate)


def analyze(m: BKModule, i_max: int | None = None, with_adapted: bool = True) -> ModuleAnalysis:
    """Run the full per-module pipeline (filtration, invariants, checks).

    Raises InternalMismatch when the unconditional weight cross-check
    fails, which is an implementation bug by policy.
    """
    k = validate(m)
    filt = nygaard_filtration(m, i_max)
    report = graded_report(filt)
    wd = hodge_tate_weights(report, m.d, m.p)
    e_div = hodge_invariants_at_E(m)
    weight_check = check_weight_consistency(m, wd)
    if not weight_check.holds:
        raise InternalMismatch(f"weight cross-check failed: {weight_check.violations}")
    gk = gee_kisin_invariants(m)
    checks = [
        check_thm1(report, wd),
        check_thm1_refined(report, wd),
        check_gee_kisin(gk, wd),
        weight_check,
    ]

    adapted_exists = decide_adapted_basis(report, wd)
    adapted = None
    status = "skipped"
    if with_adapted:
        if adapted_exists:
            adapted = construct_adapted_basis(filt)
            status = "verified" if adapted is not None else "unknown"
            if adapted is not None:
                checks.append(verify_adapted(adapted, filt))
        else:
            status = "absent"

    return ModuleAnalysis(
        module=m,
        det_exponent=k,
        filtration=filt,
        graded=tuple(report),
        weights=wd,
        e_divisors=e_div,
        gk=gk,
        checks=tuple(checks),
        saturation_in_ambient=saturation_profile(filt),
        saturation_stepwise=stage_saturation_profile(report),
        adapted_exists=adapted_exists,
        adapted=adapted,
        adapted_status=status,
    )
