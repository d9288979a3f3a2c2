"""Families of unitary representations of finitely presented groups,
their characteristic classes, and flat-detectability certificates."""

from .charforms import (
    GridConnection,
    IntegralityError,
    MultiForm,
    SIGN_CONVENTIONS,
    UnderSampledLoopError,
    chern_number,
    numerical_curvature,
    poincare_connection,
    wedge,
    winding_number,
    xgen,
    zgen,
)
from .detect import (
    BasisClass,
    DetectionError,
    DetectionReport,
    DirectProduct,
    FiniteIndexSuper,
    Free,
    FreeAbelian,
    FreeProduct,
    HomologyBasis,
    SurfaceClosed,
    betti_inequality_check,
    bm_obstruction,
    detection_matrix,
    numeric_detection_report,
    rational_homology,
    slant_contract,
    transfer_scaling_check,
)
from .families import (
    DisjointUnionSpace,
    Family,
    FinitePointSet,
    KleinBottleCover,
    ProductSpace,
    SublatticeCover,
    TorusGrid,
    character_family_Zn,
    circle_cover,
    direct_sum,
    disjoint_union,
    extend_free_product,
    holonomy_loop,
    induce_family,
    numeric_c1_windings,
    pullback_family,
    tensor_families,
    trivial_family,
    verify_family,
)
from .presentation import (
    GroupPresentation,
    PresentationError,
    Word,
    direct_product,
    evaluate_word,
    format_presentation,
    free_abelian,
    free_group,
    free_reduce,
    klein_bottle,
    parse_presentation,
    parse_word,
    surface_group,
)
from .repvar import (
    RepPoint,
    SolveConfig,
    SolveResult,
    relator_defect,
    solve_representation,
    verify_homomorphism,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
