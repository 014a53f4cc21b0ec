"""Starting points and the SVD-by-factorization driver."""

from dataclasses import replace

import numpy as np

from ..gn_direction import FactorPair
from ..linalg_core import as_matrix, rayleigh_ritz, truncated_svd
from ..operators import IdentityOperator
from .config import Problem, SolverConfig
from .gauss_newton import solve_fsgn


def init_point(prob, seed=0):
    """Balanced factors from the rank-r truncated SVD of a preimage M of B.

    M = A*(B) for identity and selection operators, the minimum-norm
    solution of A(M) = B otherwise.  U0 = U_f S^(1/2), V0 = V_f S^(1/2).
    """
    mat = prob.op.preimage(prob.b)
    svd = truncated_svd(mat, prob.rank, seed=seed)
    root = np.sqrt(svd.sigma)
    return FactorPair(svd.u * root, svd.v * root)


def factorization_start(m, n, r):
    """U0 = [I_r; 0] and V0 = [0; I_r]."""
    u0 = np.zeros((m, r))
    u0[:r] = np.eye(r)
    v0 = np.zeros((n, r))
    v0[n - r :] = np.eye(r)
    return FactorPair(u0, v0)


def factorize(b, r, cfg=None, x0=None):
    """Rank-r singular triples of a dense matrix via full-step GN plus Rayleigh-Ritz.

    Runs the alternating recursion V+^T = U^+ B, U+ = U + (B - U V+^T)(V^+)^T
    and orthonormalizes the final factors.

    Returns:
        (SvdTriple, FactorPair, IterationTrace)
    """
    b = as_matrix(b, "b")
    m, n = b.shape
    if cfg is None:
        cfg = SolverConfig(max_iters=200, residual_stop=False, d_hat="zero")
    elif cfg.d_hat != "zero":
        cfg = replace(cfg, d_hat="zero")
    prob = Problem(IdentityOperator(m, n), b.ravel(order="F"), r)
    if x0 is None:
        x0 = factorization_start(m, n, r)
    x, trace = solve_fsgn(prob, x0, cfg)
    return rayleigh_ritz(x.u, x.v, b), x, trace
