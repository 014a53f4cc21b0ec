"""Gauss-Newton methods for low-rank matrix optimization."""

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    LinesearchExhausted,
    LowRankError,
    ParseError,
    RankDeficient,
    ValidationError,
)
from .gn_direction import FactorPair, gn_direction, step_size_bound, subproblem_value
from .linalg_core import pseudo_inverse, rayleigh_ritz, truncated_svd
from .objectives import CompositeObjective, least_squares
from .operators import (
    DenseOperator,
    IdentityOperator,
    IndexSet,
    SelectionOperator,
    SparseGaussianOperator,
)
from .solvers import (
    IterationTrace,
    Problem,
    SolverConfig,
    factorize,
    init_point,
    solve_adm,
    solve_fsgn,
    solve_gn_admm,
    solve_l1,
    solve_lsgn,
    solve_rad_admm,
    solve_slsgn,
)

__version__ = "0.1.0"
