"""Module-spec file loading and report rendering.

The on-disk format is JSON: {"p": int, "rank": int, "frobenius":
[[entry string]], "name": optional str}, row-major with column j the
image of basis vector j.  Entry strings use the grammar of parse_poly
(integers, rationals a/b, u, E, + - * ^, parentheses).
"""

from __future__ import annotations

import json
from pathlib import Path

from .analysis import ModuleAnalysis
from .bkcore import BKModule, validate
from .errors import BKFiltError, SpecFileError
from .exactring import parse_poly

SCHEMA_VERSION = 1

__all__ = ["SCHEMA_VERSION", "module_from_spec", "load_spec", "render_report", "render_text"]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


def module_from_spec(spec: dict, name: str | None = None) -> BKModule:
    """Build and validate a module from a parsed spec dictionary."""
    if not isinstance(spec, dict):
        raise SpecFileError("top-level value must be an object")
    unknown = set(spec) - {"p", "rank", "frobenius", "name"}
    if unknown:
        raise SpecFileError(f"unknown fields: {sorted(unknown)}")
    p = spec.get("p")
    if not isinstance(p, int) or not _is_prime(p):
        raise SpecFileError(f"'p' must be a prime integer, got {p!r}")
    rank = spec.get("rank")
    if not isinstance(rank, int) or rank < 1:
        raise SpecFileError(f"'rank' must be a positive integer, got {rank!r}")
    rows = spec.get("frobenius")
    if not isinstance(rows, list) or len(rows) != rank or any(
        not isinstance(r, list) or len(r) != rank for r in rows
    ):
        raise SpecFileError(f"'frobenius' must be a {rank}x{rank} array of strings")
    parsed = []
    for i, row in enumerate(rows):
        out_row = []
        for j, text in enumerate(row):
            if not isinstance(text, str):
                raise SpecFileError(f"frobenius[{i}][{j}]: entry must be a string")
            try:
                out_row.append(parse_poly(text, p))
            except BKFiltError as exc:
                raise SpecFileError(f"frobenius[{i}][{j}]: {exc}") from exc
        parsed.append(tuple(out_row))
    label = spec.get("name", name)
    if label is not None and not isinstance(label, str):
        raise SpecFileError("'name' must be a string")
    module = BKModule(p=p, d=rank, B=tuple(parsed), name=label)
    try:
        validate(module)
    except BKFiltError as exc:
        raise SpecFileError(f"module validation failed: {exc}") from exc
    return module


def load_spec(path: str | Path) -> BKModule:
    """Load, parse, and validate a module-spec file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecFileError(f"cannot read {path}: {exc}") from exc
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFileError(f"{path} is not valid JSON: {exc}") from exc
    return module_from_spec(spec)


def module_spec_dict(m: BKModule) -> dict:
    spec = {
        "p": m.p,
        "rank": m.d,
        "frobenius": [[entry.to_string() for entry in row] for row in m.B],
    }
    if m.name:
        spec["name"] = m.name
    return spec


def _lattice_json(lat) -> dict:
    return {
        "rank": lat.rank,
        "basis": [[str(c) for c in vec] for vec in lat.basis()],
    }


def render_report(result: ModuleAnalysis) -> dict:
    """Schema-versioned structured report; embeds tool version and input."""
    from . import __version__
    from .analysis import evp_lattices

    filt = result.filtration
    lats = evp_lattices(filt)
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "bkfilt", "version": __version__},
        "input": module_spec_dict(result.module),
        "det_exponent": result.det_exponent,
        "height": filt.height,
        "filtration": {
            "i_max": filt.i_max,
            "stages": [
                {
                    "i": st.i,
                    "kappa": st.kappa,
                    "basis": [[entry.to_E_string() for entry in row] for row in st.C],
                }
                for st in filt.stages
            ],
        },
        "lattices": [
            {"i": i, **_lattice_json(lat)} for i, lat in enumerate(lats)
        ],
        "graded": [
            {"i": gp.i, "free_rank": gp.free_rank, "torsion": list(gp.torsion)}
            for gp in result.graded
        ],
        "weights": {
            "multiset": list(result.weights.weights),
            "h": result.weights.h,
            "d_table": list(result.weights.d_table),
            "J": sorted(result.weights.J),
            "Jstrict": sorted(result.weights.Jstrict),
        },
        "hodge_invariants_at_E": list(result.e_divisors),
        "gee_kisin": {
            "a": list(result.gk.a),
            "residues": list(result.gk.residues),
        },
        "saturation_in_ambient": list(result.saturation_in_ambient),
        "saturation_stepwise": list(result.saturation_stepwise),
        "checks": [
            {
                "predicate": rep.predicate,
                "holds": rep.holds,
                "violations": _json_safe(rep.violations),
            }
            for rep in result.checks
        ],
        "adapted": _adapted_json(result),
    }
    return report


def _adapted_json(result: ModuleAnalysis) -> dict:
    if result.adapted_status == "skipped":
        return {"exists": result.adapted_exists, "status": "skipped"}
    if not result.adapted_exists:
        torsion_levels = [gp.i for gp in result.graded if gp.torsion]
        return {"exists": False, "status": "absent", "torsion_levels": torsion_levels}
    if result.adapted is None:
        return {"exists": "unknown", "status": "unknown"}
    return {
        "exists": True,
        "status": "verified",
        "levels": list(result.adapted.levels),
        "basis": [
            [entry.to_E_string() for entry in row] for row in result.adapted.basis
        ],
    }


def _json_safe(value):
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, frozenset):
        return sorted(_json_safe(v) for v in value)
    if isinstance(value, (int, str, bool)) or value is None:
        return value
    return str(value)


def render_text(result: ModuleAnalysis) -> str:
    """Human-readable report."""
    from .analysis import evp_lattices

    filt = result.filtration
    lines = []
    name = result.module.name or "<unnamed>"
    lines.append(f"module {name}: p={result.module.p}, rank={result.module.d}, "
                 f"det exponent k={result.det_exponent}, height h={filt.height}")
    lines.append("")
    lines.append("filtration stages (entries in powers of E):")
    for st in filt.stages:
        rows = ["[" + ", ".join(entry.to_E_string() for entry in row) + "]" for row in st.C]
        lines.append(f"  i={st.i} kappa={st.kappa}: " + "; ".join(rows))
    lines.append("")
    lines.append("induced lattice chain at u=p:")
    for i, lat in enumerate(evp_lattices(filt)):
        vecs = ["(" + ", ".join(str(c) for c in v) + ")" for v in lat.basis()]
        lines.append(f"  i={i} rank={lat.rank}: " + (", ".join(vecs) if vecs else "0"))
    lines.append("")
    lines.append("graded pieces (free rank, torsion exponents):")
    for gp in result.graded:
        tor = "{" + ", ".join(str(t) for t in gp.torsion) + "}" if gp.torsion else "-"
        lines.append(f"  i={gp.i}: free={gp.free_rank} torsion={tor}")
    wd = result.weights
    lines.append("")
    lines.append(f"weights: {list(wd.weights)}  h={wd.h}")
    lines.append(f"J = {sorted(wd.J)}  Jstrict = {sorted(wd.Jstrict)}")
    lines.append(f"E-elementary divisors: {list(result.e_divisors)}")
    lines.append(f"mod-p divisors a_j: {list(result.gk.a)}  residues: {list(result.gk.residues)}")
    lines.append(f"saturated in ambient: {list(result.saturation_in_ambient)}")
    lines.append("")
    lines.append("checks:")
    for rep in result.checks:
        status = "ok" if rep.holds else f"VIOLATION {_json_safe(rep.violations)}"
        lines.append(f"  {rep.predicate}: {status}")
    adapted = _adapted_json(result)
    lines.append("")
    if adapted["status"] == "verified":
        lines.append(f"adapted basis: levels {adapted['levels']}")
        for row in adapted["basis"]:
            lines.append("  [" + ", ".join(row) + "]")
    elif adapted["status"] == "absent":
        lines.append(f"adapted basis: none (torsion at levels {adapted['torsion_levels']})")
    elif adapted["status"] == "unknown":
        lines.append("adapted basis: unknown (construction did not verify)")
    else:
        lines.append(f"adapted basis: decision={adapted['exists']} (construction skipped)")
    return "\n".join(lines)
