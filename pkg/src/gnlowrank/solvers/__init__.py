"""Iterative schemes, linesearch and stopping rules."""

from .admm import auto_rho, l1_start, lyapunov_coefficients, solve_gn_admm, solve_l1, solve_rad_admm
from .config import GOLDEN_BETA, Problem, SolverConfig
from .gauss_newton import solve_adm, solve_fsgn, solve_lsgn, solve_slsgn
from .init import factorization_start, factorize, init_point
from .linesearch import StopState, armijo_measure, check_stop, linesearch
from .trace import CSV_COLUMNS, IterationRecord, IterationTrace

__all__ = [
    "GOLDEN_BETA",
    "Problem",
    "SolverConfig",
    "IterationRecord",
    "IterationTrace",
    "CSV_COLUMNS",
    "StopState",
    "armijo_measure",
    "check_stop",
    "linesearch",
    "solve_lsgn",
    "solve_fsgn",
    "solve_adm",
    "solve_slsgn",
    "solve_gn_admm",
    "solve_rad_admm",
    "solve_l1",
    "auto_rho",
    "lyapunov_coefficients",
    "l1_start",
    "init_point",
    "factorization_start",
    "factorize",
]
