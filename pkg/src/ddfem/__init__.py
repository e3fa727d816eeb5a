"""Stiffness matrices for scalar elliptic finite element problems and their
symmetric diagonally dominant approximations, with quality scalars, bound
verification, and a preconditioned conjugate gradient demo solver."""

from .assembly import (
    SparseSymmetricMatrix,
    assemble_global,
    assemble_load,
    element_geometry,
    element_stiffness,
)
from .dd_approx import (
    DDApproximation,
    build_dbar,
    build_dd_approximation,
    build_h_blocks,
    build_kbar,
    chi3_bound,
)
from .factorization import (
    IncidenceMatrix,
    build_element_factors,
    build_incidence,
    save_incidence,
    verify_first_factorization,
)
from .mesh import (
    ConductivityField,
    Mesh,
    eval_conductivity,
    gen_structured_cube,
    gen_structured_square,
    insert_midpoints,
    load_mesh,
    save_mesh,
    transform_mesh,
)
from .pipeline import approximate, build_system, verify_system
from .quadrature import (
    QuadratureRule,
    exact_monomial_integral,
    make_rule,
    standard_rule,
    verify_exactness,
)
from .quality import QualityReport, compute_quality
from .reference_element import (
    ReferenceElement,
    SqpMatrix,
    build_sqp,
    eval_shape,
    eval_shape_gradient,
    make_reference,
)
from .solver import SolveResult, cg_iteration_bound, factor_kbar, pcg_solve
from .spectral import (
    PencilSpectrum,
    chi_report,
    condition_pair,
    global_support_check,
    support_number,
)

__version__ = "0.1.0"

__all__ = [
    "ConductivityField",
    "DDApproximation",
    "IncidenceMatrix",
    "Mesh",
    "PencilSpectrum",
    "QualityReport",
    "QuadratureRule",
    "ReferenceElement",
    "SolveResult",
    "SparseSymmetricMatrix",
    "SqpMatrix",
    "approximate",
    "assemble_global",
    "assemble_load",
    "build_dbar",
    "build_dd_approximation",
    "build_element_factors",
    "build_h_blocks",
    "build_incidence",
    "build_kbar",
    "build_sqp",
    "build_system",
    "cg_iteration_bound",
    "chi3_bound",
    "chi_report",
    "compute_quality",
    "condition_pair",
    "element_geometry",
    "element_stiffness",
    "eval_conductivity",
    "eval_shape",
    "eval_shape_gradient",
    "exact_monomial_integral",
    "factor_kbar",
    "gen_structured_cube",
    "gen_structured_square",
    "global_support_check",
    "insert_midpoints",
    "load_mesh",
    "make_reference",
    "make_rule",
    "pcg_solve",
    "save_incidence",
    "save_mesh",
    "standard_rule",
    "support_number",
    "transform_mesh",
    "verify_exactness",
    "verify_first_factorization",
    "verify_system",
]
