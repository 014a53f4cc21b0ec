"""Closed-form Gauss-Newton directions for the bilinear model U V^T.

Given factors U (m x r), V (n x r) and a target increment Z (m x n), the
directions here minimize 0.5 ||U D_V^T + D_U V^T - Z||_F^2.  Callers pass
Z already scaled (typically Z = -Phi'(U V^T) / L); nothing in this module
evaluates an objective.
"""

from typing import NamedTuple

import numpy as np

from .errors import AsymmetricInput, DimensionMismatch, RankDeficient
from .linalg_core import as_matrix, pseudo_inverse, singular_extremes


class FactorPair(NamedTuple):
    u: np.ndarray
    v: np.ndarray


class Direction(NamedTuple):
    d_u: np.ndarray
    d_v: np.ndarray


def _prepare(x, z):
    u = as_matrix(x[0], "u")
    v = as_matrix(x[1], "v")
    z = as_matrix(z, "z")
    if u.shape[1] != v.shape[1]:
        raise DimensionMismatch("U and V must have the same number of columns")
    if z.shape != (u.shape[0], v.shape[0]):
        raise DimensionMismatch(f"z is {z.shape}, expected {(u.shape[0], v.shape[0])}")
    return u, v, z


def gn_direction(x, z):
    """The particular GN direction with D_hat = 0.5 U^+ Z (V^+)^T.

    D_U = (I - 0.5 P_U) Z (V^+)^T and D_V = (I - 0.5 P_V) Z^T (U^+)^T.
    Projectors are never formed; only r-by-r solves are needed.
    """
    u, v, z = _prepare(x, z)
    u_pinv = pseudo_inverse(u)
    v_pinv = pseudo_inverse(v)
    w1 = z @ v_pinv.T
    w2 = z.T @ u_pinv.T
    d_u = w1 - 0.5 * (u @ (u_pinv @ w1))
    d_v = w2 - 0.5 * (v @ (v_pinv @ w2))
    return Direction(d_u, d_v)


def gn_direction_general(x, z, d_hat_r):
    """Member of the GN solution family selected by an arbitrary r-by-r ``d_hat_r``.

    D_U = P_U^perp Z (V^+)^T + U D_hat and D_V^T = U^+ Z - D_hat V^T.
    """
    u, v, z = _prepare(x, z)
    d_hat_r = as_matrix(d_hat_r, "d_hat_r")
    r = u.shape[1]
    if d_hat_r.shape != (r, r):
        raise DimensionMismatch(f"d_hat_r must be {r}x{r}")
    u_pinv = pseudo_inverse(u)
    v_pinv = pseudo_inverse(v)
    w1 = z @ v_pinv.T
    d_u = w1 - u @ (u_pinv @ w1) + u @ d_hat_r
    d_v = z.T @ u_pinv.T - v @ d_hat_r.T
    return Direction(d_u, d_v)


def linearized_residual(x, direction, z):
    """U D_V^T + D_U V^T - Z."""
    u, v = x
    return u @ direction.d_v.T + direction.d_u @ v.T - z


def subproblem_value(x, z):
    """Optimal value 0.5 ||P_U^perp Z P_V^perp||_F^2 of the GN subproblem."""
    u, v, z = _prepare(x, z)
    u_pinv = pseudo_inverse(u)
    v_pinv = pseudo_inverse(v)
    t = z - u @ (u_pinv @ z)
    t = t - (t @ v) @ v_pinv
    return 0.5 * float(np.sum(t * t))


def symmetric_direction(u, z):
    """GN direction for the symmetric model U U^T: (I - 0.5 P_U) Z (U^+)^T.

    Raises:
        AsymmetricInput: if ``z`` is not symmetric to 1e-10 relative.
    """
    u = as_matrix(u, "u")
    z = as_matrix(z, "z")
    if z.shape != (u.shape[0], u.shape[0]):
        raise DimensionMismatch(f"z is {z.shape}, expected square of size {u.shape[0]}")
    nz = np.linalg.norm(z)
    if np.linalg.norm(z - z.T) > 1e-10 * nz:
        raise AsymmetricInput("z must be symmetric")
    u_pinv = pseudo_inverse(u)
    w = z @ u_pinv.T
    return w - 0.5 * (u @ (u_pinv @ w))


def factor_extremes(x):
    """(sigma_min, sigma_max) taken over both factors."""
    smin_u, smax_u = singular_extremes(x[0])
    smin_v, smax_v = singular_extremes(x[1])
    return min(smin_u, smin_v), max(smax_u, smax_v)


def step_size_bound(x, grad_norm, phi_prime_norm, l):
    """Theoretical damped-step size guaranteeing descent and rank preservation.

    Returns ``min(1, L s_min^3 / (2 ||grad Phi||), 3 s_min^4 / (32 s_max^2 ||Phi'||))``
    where the singular values range over both factors.
    """
    if l <= 0:
        raise ValueError("Lipschitz constant must be positive")
    smin, smax = factor_extremes(x)
    if smin == 0.0:
        raise RankDeficient("a factor has a zero singular value")
    terms = [1.0]
    if grad_norm > 0:
        terms.append(l * smin**3 / (2.0 * grad_norm))
    if phi_prime_norm > 0:
        terms.append(3.0 * smin**4 / (32.0 * smax**2 * phi_prime_norm))
    return min(terms)
