"""Built-in example modules with stable names.

The "certified" families are the ones on which the torsion-localization
and residue-congruence predicates are expected to hold unconditionally:
rank-1 twists by powers of E, diagonal Frobenius matrices, and constant
unimodular twists of diagonal matrices.  Entries found by the seeded
search are pinned by (seed, index) and are reproducible bit for bit;
they are not certified.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bkcore import BKModule
from .cli_io import module_from_spec
from .search import SearchConfig, generate_module, module_to_spec

__all__ = ["CatalogEntry", "entries", "get"]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    spec: dict
    family: str  # "hand" | "rank1" | "diagonal" | "constant" | "search"
    certified: bool

    def module(self) -> BKModule:
        return module_from_spec(self.spec, name=self.name)


_HAND_SPEC = {
    "p": 2,
    "rank": 2,
    "frobenius": [["E^3", "u"], ["0", "1"]],
    "name": "hand",
}

_DIAGONAL_PROFILES = [
    (2, (0, 4)),
    (2, (1, 3)),
    (2, (0, 6)),
    (3, (0, 1, 2)),
    (3, (0, 3, 6)),
    (3, (2, 2, 5)),
]

_CONSTANT_TWISTS = [
    # (rank, integer matrix with det +-1, weights)
    (2, [[1, 1], [1, 2]], (0, 2)),
    (2, [[3, 2], [1, 1]], (1, 4)),
    (3, [[1, 0, 1], [0, 1, 1], [1, 1, 1]], (0, 2, 3)),
]

# Torsion witnesses found by the seeded search; regenerated on demand
# from (p, weights, seed, index) so the catalog stays reproducible.
_SEARCH_PINNED = [
    {"p": 2, "weights": (0, 3), "seed": 1249, "index": 0, "deg": 2, "height": 3},
    {"p": 3, "weights": (0, 4), "seed": 1249, "index": 1, "deg": 2, "height": 3},
]


def _rank1_entries():
    out = []
    for p in (2, 3, 5):
        for r in range(0, 7):
            spec = {"p": p, "rank": 1, "frobenius": [[f"E^{r}"]]}
            out.append(
                CatalogEntry(
                    name=f"rank1-p{p}-r{r}",
                    description=f"rank-1 twist by E^{r} at p={p}",
                    spec=spec,
                    family="rank1",
                    certified=True,
                )
            )
    return out


def _diagonal_entries():
    out = []
    for p in (2, 3, 5):
        for d, weights in _DIAGONAL_PROFILES:
            entries_ = [
                [f"E^{weights[j]}" if i == j else "0" for j in range(d)]
                for i in range(d)
            ]
            wtag = "".join(str(w) for w in weights)
            out.append(
                CatalogEntry(
                    name=f"diag-p{p}-w{wtag}",
                    description=f"diagonal module with weights {list(weights)} at p={p}",
                    spec={"p": p, "rank": d, "frobenius": entries_},
                    family="diagonal",
                    certified=True,
                )
            )
    return out


def _constant_twist_entries():
    out = []
    for p in (2, 3, 5):
        for d, amat, weights in _CONSTANT_TWISTS:
            entries_ = [
                [
                    f"{amat[i][j]}*E^{weights[j]}" if amat[i][j] else "0"
                    for j in range(d)
                ]
                for i in range(d)
            ]
            wtag = "".join(str(w) for w in weights)
            out.append(
                CatalogEntry(
                    name=f"const-p{p}-d{d}-w{wtag}",
                    description=(
                        f"constant unimodular twist of diag(E^w) with weights {list(weights)} at p={p}"
                    ),
                    spec={"p": p, "rank": d, "frobenius": entries_},
                    family="constant",
                    certified=True,
                )
            )
    return out


def _search_entries():
    out = []
    for pin in _SEARCH_PINNED:
        cfg = SearchConfig(
            p=pin["p"],
            d=len(pin["weights"]),
            weights=tuple(pin["weights"]),
            count=1,
            seed=pin["seed"],
            deg_bound=pin["deg"],
            height_bound=pin["height"],
        )
        module = generate_module(cfg, pin["index"])
        spec = module_to_spec(module)
        name = f"torsion-p{pin['p']}-s{pin['seed']}-i{pin['index']}"
        spec["name"] = name
        out.append(
            CatalogEntry(
                name=name,
                description=(
                    f"search-found torsion witness, weights {list(pin['weights'])}, "
                    f"seed {pin['seed']}, index {pin['index']}"
                ),
                spec=spec,
                family="search",
                certified=False,
            )
        )
    return out


def entries() -> list[CatalogEntry]:
    """All built-in examples, in stable order."""
    out = [
        CatalogEntry(
            name="hand",
            description="rank-2 worked example [[E^3, u], [0, 1]] at p=2",
            spec=_HAND_SPEC,
            family="hand",
            certified=True,
        )
    ]
    out.extend(_rank1_entries())
    out.extend(_diagonal_entries())
    out.extend(_constant_twist_entries())
    out.extend(_search_entries())
    return out


def get(name: str) -> CatalogEntry:
    for entry in entries():
        if entry.name == name:
            return entry
    raise KeyError(f"no catalog entry named {name!r}")
