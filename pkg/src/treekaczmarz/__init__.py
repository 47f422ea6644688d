"""Kaczmarz iteration for linear systems distributed over a rooted tree.

Estimates disperse from the root toward the leaves, each node applying a
relaxed Kaczmarz update for its own equations, and pool back up through
convex edge weights.  The package provides the iteration itself, its
exact operator (SOR) form with spectral-radius analysis and relaxation
tuning, reference solutions (minimal norm, weighted least squares,
closed-form two-line demos), additive-noise stability experiments, and a
CLI with problem files, benchmarks and CSV/figure reports.
"""

from .linalg import (
    ConvergenceFailure,
    DimensionMismatch,
    NotSquare,
    RowEquation,
    ZeroRow,
    affine_projection,
    apply_row,
    eigenvalues,
    kaczmarz_update,
    linear_projection,
    pseudo_solve,
    residual,
    row_space_basis,
    spectral_radius,
)
from .problems import (
    MatrixEnsemble,
    ParseError,
    SizeMismatch,
    ValidationError,
    generate_system,
    load_problem,
    load_problem_with_solution,
    make_tree,
    save_problem,
)
from .reference import (
    Inconsistent,
    OmegaLimitReport,
    TooLarge,
    TwoLineConfig,
    VariantUnsupported,
    WeightedLsProblem,
    brute_force_iterate,
    min_norm_solution,
    two_line_as_tree,
    two_line_eigenvalues,
    two_line_matrix,
    two_line_optima,
    verify_omega_limit,
    weighted_ls_solution,
)
from .robustness import (
    ErrorModel,
    StabilityReport,
    perturbed_iterate,
    single_iteration_error_bound,
    solve_with_errors,
)
from .solver import (
    IterationTrace,
    MissingLeafEstimate,
    NoTrace,
    SolveResult,
    SolverConfig,
    TreeSystem,
    disperse,
    iterate,
    node_limits,
    pool,
    solve,
    stacked_system,
)
from .sor import (
    LeafOperators,
    OmegaSweep,
    SorOperators,
    SpectralRadiusAtLeastOne,
    build_leaf_operators,
    build_sor,
    fixed_point,
    iterate_via_sor,
    omega_sweep,
    restrict,
    sweep_spectral_radius,
)
from .topology import (
    LeafPath,
    NotOnPath,
    TreeTopology,
    TreeValidationError,
    leaf_paths,
    leaf_weights,
    node_cumulative_weight,
    path_weight,
    tree_depth,
    validate,
)

__version__ = "0.1.0"
