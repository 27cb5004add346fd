"""Exception types shared across the package."""


class BKFiltError(Exception):
    """Base class for all errors raised by bkfilt."""


class EntryError(BKFiltError):
    """Bad user-supplied data (entry strings, spec files)."""


class NotPIntegral(EntryError):
    """A rational with p dividing its denominator was used as a coefficient."""


class ParseError(EntryError):
    """Malformed polynomial entry string."""


class SpecFileError(EntryError):
    """Module-spec file failed schema, parse, or validation checks."""


class NotDivisible(BKFiltError):
    """Exact division by a power of E left a nonzero remainder."""


class NotContained(BKFiltError):
    """Operation requires one lattice to contain the other."""


class NotSaturated(BKFiltError):
    """Vectors do not span a saturated submodule, so no basis extension exists."""


class ZeroDeterminant(BKFiltError):
    """The Frobenius matrix of a module is singular."""


class InfiniteHeight(BKFiltError):
    """det B is not a unit times a power of E."""


class NotFreeBasis(BKFiltError):
    """A basis matrix does not have determinant unit * E^k."""


class InconsistentRanks(BKFiltError):
    """Graded free ranks do not sum to the module rank."""


class InternalCheckFailure(BKFiltError):
    """An invariant that can only fail through an implementation bug failed."""


class StabilizationFailure(InternalCheckFailure):
    """The filtration did not satisfy Fil^{h+1} = E * Fil^h."""


class InternalMismatch(InternalCheckFailure):
    """Two independent algorithms for the same invariant disagreed."""


class SingularModP(InternalCheckFailure):
    """Frobenius matrix became singular after reduction mod p."""
