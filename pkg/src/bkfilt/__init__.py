"""Exact Nygaard filtrations of Breuil-Kisin modules over Z_p[[u]].

Computes the filtration {x : B x in E^i S^d} of a finite-height module
with Frobenius matrix B, the torsion invariants of the induced lattice
chain at u = p, elementary-divisor invariants at (E) and mod p, and
adapted bases, all in exact rational arithmetic.
"""

from .analysis import (
    AdaptedBasis,
    CheckReport,
    GKData,
    GradedPiece,
    ModuleAnalysis,
    WeightData,
    analyze,
    check_gee_kisin,
    check_lemma_suite,
    check_thm1,
    construct_adapted_basis,
    decide_adapted_basis,
    gee_kisin_invariants,
    graded_report,
    hodge_invariants_at_E,
    hodge_tate_weights,
    saturation_profile,
    verify_adapted,
)
from .bkcore import (
    BKModule,
    FiltStage,
    Filtration,
    evp_image,
    mod_Em_lattice_model,
    module_contains,
    module_equal,
    nygaard_direct_oracle,
    nygaard_filtration,
    nygaard_step,
    validate,
)
from .exactring import PolyU, parse_poly, pscalar, vp
from .plattice import PLattice, SnfResult, extend_to_basis, saturated_kernel, snf_p

__version__ = "0.1.0"
