"""Mixed finite element solvers for ill-posed continuation problems on the
unit square: regularized and stabilized saddle-point schemes, their norms
and stability diagnostics, and a batch experiment CLI."""

from .analysis import (
    CSV_HEADER,
    ErrorReport,
    discrete_cp_dual_norm,
    discrete_hminus1,
    error_norm,
    fit_rate,
    jump_seminorm,
    triple_norm,
    triple_norm_grams,
    vertex_values,
)
from .assembly import (
    AssemblyError,
    ElementPolynomial,
    FormKind,
    PerturbedField,
    RhsKind,
    assemble_form,
    assemble_rhs,
    broken_laplacian,
    dump_coo,
)
from .linalg import (
    BlockSystem,
    SingularSystemError,
    SolverError,
    condition_number,
    infsup_constant,
    solve_direct,
)
from .mesh import (
    GAMMA0,
    GAMMA1,
    MeshError,
    TriangleMesh,
    build_structured_mesh,
    dump_mesh,
    tag_boundary,
    tag_region,
)
from .quadrature import QuadratureRule, edge_rule, triangle_rule
from .schemes import (
    ConfigError,
    HadamardProblem,
    NoiseSpec,
    Problem,
    ProblemData,
    SchemeConfig,
    Variant,
    build_operator,
    build_rhs,
    build_spaces,
    build_system,
    couple_parameters,
    perturb_data,
)
from .spaces import (
    Constraint,
    CrouzeixRaviart,
    FeFunction,
    FiniteElementSpace,
    Lagrange,
    build_space,
    eval_basis,
    interpolate_nodal,
)
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "BlockSystem",
    "ConfigError",
    "Constraint",
    "CrouzeixRaviart",
    "CSV_HEADER",
    "ElementPolynomial",
    "ErrorReport",
    "FeFunction",
    "FiniteElementSpace",
    "FormKind",
    "GAMMA0",
    "GAMMA1",
    "HadamardProblem",
    "KERNEL_BACKEND",
    "Lagrange",
    "MeshError",
    "NoiseSpec",
    "PerturbedField",
    "Problem",
    "ProblemData",
    "QuadratureRule",
    "RhsKind",
    "SchemeConfig",
    "SingularSystemError",
    "SolverError",
    "TriangleMesh",
    "Variant",
    "assemble_form",
    "assemble_rhs",
    "broken_laplacian",
    "build_operator",
    "build_rhs",
    "build_space",
    "build_spaces",
    "build_structured_mesh",
    "build_system",
    "condition_number",
    "couple_parameters",
    "discrete_cp_dual_norm",
    "discrete_hminus1",
    "dump_coo",
    "dump_mesh",
    "edge_rule",
    "error_norm",
    "eval_basis",
    "fit_rate",
    "infsup_constant",
    "interpolate_nodal",
    "jump_seminorm",
    "perturb_data",
    "solve_direct",
    "tag_boundary",
    "tag_region",
    "triangle_rule",
    "triple_norm",
    "triple_norm_grams",
    "vertex_values",
]
