"""Command-line interface.

Exit codes: 0 success, 1 predicate violation (check failures, or report
under --strict), 2 input error, 3 internal invariant failure.  All
diagnostics go to stderr; reports go to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__, analysis, catalog
from .bkcore import nygaard_direct_oracle
from .cli_io import load_spec, render_report, render_text
from .errors import EntryError, InternalCheckFailure
from .search import MODE_ALL, MODE_CONSTANT_TWIST, SearchConfig, run_search

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bkfilt",
        description="Exact filtration invariants of Breuil-Kisin modules over Z_p[[u]]",
    )
    parser.add_argument("--version", action="version", version=f"bkfilt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_report = sub.add_parser("report", help="full per-module report")
    p_report.add_argument("file")
    p_report.add_argument("--imax", type=int, default=None, help="filtration depth override")
    p_report.add_argument("--json", action="store_true", help="structured output")
    p_report.add_argument("--strict", action="store_true",
                          help="exit 1 if any monitored predicate is violated")

    p_check = sub.add_parser("check", help="run one family of checks")
    p_check.add_argument("which", choices=["thm1", "gk", "lemma", "all"])
    p_check.add_argument("file")

    p_adapted = sub.add_parser("adapted", help="decide/construct an adapted basis")
    p_adapted.add_argument("file")

    p_oracle = sub.add_parser("oracle", help="direct kernel cross-check at all levels")
    p_oracle.add_argument("file")

    p_search = sub.add_parser("search", help="seeded randomized torsion search")
    p_search.add_argument("--p", type=int, required=True)
    p_search.add_argument("--rank", type=int, required=True)
    p_search.add_argument("--weights", required=True,
                          help="comma-separated, one per basis vector")
    p_search.add_argument("--count", type=int, required=True)
    p_search.add_argument("--seed", type=int, required=True)
    p_search.add_argument("--deg", type=int, default=2, help="degree bound for random entries")
    p_search.add_argument("--height", type=int, default=3, help="coefficient height bound")
    p_search.add_argument("--workers", type=int, default=1)
    p_search.add_argument("--constant-twist", action="store_true",
                          help="constant changes of basis only")

    p_catalog = sub.add_parser("catalog", help="built-in examples")
    p_catalog.add_argument("--run", action="store_true", help="analyze every entry")
    return parser


def _cmd_report(args) -> int:
    module = load_spec(args.file)
    result = analysis.analyze(module, i_max=args.imax)
    if args.json:
        print(json.dumps(render_report(result), indent=2))
    else:
        print(render_text(result))
    if args.strict and any(not rep.holds for rep in result.checks):
        print("strict mode: monitored predicate violated", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def _cmd_check(args) -> int:
    module = load_spec(args.file)
    reports = []
    if args.which in ("thm1", "gk", "all"):
        result = analysis.analyze(module, with_adapted=(args.which == "all"))
        if args.which in ("thm1", "all"):
            reports.append(result.check("torsion_in_Jstrict"))
            reports.append(result.check("graded_support_refined"))
        if args.which in ("gk", "all"):
            reports.append(result.check("gee_kisin_residues"))
        if args.which == "all":
            reports.append(result.check("weights_match_e_divisors"))
    if args.which in ("lemma", "all"):
        from .bkcore import nygaard_filtration

        filt = nygaard_filtration(module)
        reports.extend(analysis.check_lemma_suite(filt))
    failed = False
    for rep in reports:
        status = "ok" if rep.holds else "VIOLATION"
        print(f"{rep.predicate}: {status}")
        if not rep.holds:
            failed = True
            print(f"  evidence: {rep.violations}", file=sys.stderr)
    return EXIT_VIOLATION if failed else EXIT_OK


def _cmd_adapted(args) -> int:
    module = load_spec(args.file)
    result = analysis.analyze(module)
    if not result.adapted_exists:
        torsion = [(gp.i, list(gp.torsion)) for gp in result.graded if gp.torsion]
        print(f"no adapted basis: graded torsion at {torsion}")
        return EXIT_OK
    if result.adapted is None:
        print("adapted basis expected but construction did not verify", file=sys.stderr)
        return EXIT_INTERNAL
    print(f"adapted basis with levels {list(result.adapted.levels)}:")
    for row in result.adapted.basis:
        print("  [" + ", ".join(entry.to_E_string() for entry in row) + "]")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    module = load_spec(args.file)
    from .bkcore import nygaard_filtration

    filt = nygaard_filtration(module)
    mismatches = 0
    for st in filt.stages[1:]:
        res = nygaard_direct_oracle(module, st)
        status = "confirmed" if res.verdict else "MISMATCH"
        print(f"level {st.i}: {status} (kernel rank {res.kernel_lattice.rank})")
        if not res.verdict:
            mismatches += 1
    if mismatches:
        print(f"{mismatches} level(s) disagree with the direct computation",
              file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def _cmd_search(args) -> int:
    try:
        weights = tuple(int(w) for w in args.weights.split(","))
    except ValueError:
        print(f"bad --weights value {args.weights!r}", file=sys.stderr)
        return EXIT_INPUT
    try:
        cfg = SearchConfig(
            p=args.p,
            d=args.rank,
            weights=weights,
            count=args.count,
            seed=args.seed,
            deg_bound=args.deg,
            height_bound=args.height,
            workers=args.workers,
            mode=MODE_CONSTANT_TWIST if args.constant_twist else MODE_ALL,
        )
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    findings = run_search(cfg)
    doc = {
        "schema_version": 1,
        "tool": {"name": "bkfilt", "version": __version__},
        "config": {
            "p": cfg.p,
            "rank": cfg.d,
            "weights": list(cfg.weights),
            "count": cfg.count,
            "seed": cfg.seed,
            "deg": cfg.deg_bound,
            "height": cfg.height_bound,
            "mode": cfg.mode,
        },
        "findings": [
            {
                "index": f.index,
                "seed": f.seed,
                "module": f.spec,
                "weights": list(f.weights),
                "h": f.h,
                "Jstrict": list(f.jstrict),
                "torsion": [[i, list(exps)] for i, exps in f.torsion],
                "verdicts": f.verdicts,
                "label": f.label,
            }
            for f in findings
        ],
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_catalog(args) -> int:
    failed = False
    for entry in catalog.entries():
        if not args.run:
            print(f"{entry.name}: {entry.description} [{entry.family}"
                  f"{', certified' if entry.certified else ''}]")
            continue
        module = entry.module()
        result = analysis.analyze(module)
        lemma = analysis.check_lemma_suite(result.filtration)
        bad = [rep.predicate for rep in (*result.checks, *lemma) if not rep.holds]
        if bad and entry.certified:
            failed = True
            print(f"{entry.name}: FAILED {bad}")
        elif bad:
            print(f"{entry.name}: violations {bad} (uncertified entry, archived)")
        else:
            print(f"{entry.name}: ok")
    return EXIT_VIOLATION if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "report": _cmd_report,
        "check": _cmd_check,
        "adapted": _cmd_adapted,
        "oracle": _cmd_oracle,
        "search": _cmd_search,
        "catalog": _cmd_catalog,
    }
    try:
        return handlers[args.command](args)
    except EntryError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalCheckFailure as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
