"""Dense linear-algebra kernels used by the Gauss-Newton machinery.

Matrices are plain ``numpy.ndarray`` objects of dtype float64.  Every
function here is pure.
"""

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NonFiniteInput, RankDeficient

RANK_TOL = 1e-12
SVD_MAX_SWEEPS = 500
SVD_TOL = 1e-10
SVD_OVERSAMPLE = 5


class SvdTriple(NamedTuple):
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


def as_matrix(x, name="matrix"):
    """Return ``x`` as a finite 2-D float64 array or raise."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return a


def _is_rank_deficient(sigma_min, sigma_max, shape):
    return sigma_max == 0.0 or sigma_min <= RANK_TOL * max(shape) * sigma_max


def _fix_signs(u, v):
    """Make the first nonzero entry of each column of ``u`` nonnegative."""
    for j in range(u.shape[1]):
        col = u[:, j]
        nz = np.flatnonzero(np.abs(col) > 0)
        if nz.size and col[nz[0]] < 0:
            u[:, j] = -col
            v[:, j] = -v[:, j]
    return u, v


def qr_economy(x):
    """Economy QR with nonnegative diagonal in ``r``.

    Returns:
        ``(q, r)`` with ``q`` m-by-k orthonormal, ``r`` k-by-k upper
        triangular and ``q @ r == x``.
    """
    x = as_matrix(x, "x")
    if x.shape[1] > x.shape[0]:
        raise DimensionMismatch("qr_economy needs cols <= rows")
    q, r = np.linalg.qr(x, mode="reduced")
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return q * signs, r * signs[:, None]


def singular_extremes(x):
    """Smallest and largest singular values of ``x``."""
    x = as_matrix(x, "x")
    s = np.linalg.svd(x, compute_uv=False)
    return float(s[-1]), float(s[0])


def pseudo_inverse(x):
    """Moore-Penrose inverse of a full-column-rank matrix via QR.

    Raises:
        RankDeficient: if the smallest singular value falls below the
            relative rank tolerance.
    """
    x = as_matrix(x, "x")
    rows, cols = x.shape
    if cols > rows:
        raise RankDeficient(f"{rows}x{cols} matrix cannot have full column rank")
    q, r = qr_economy(x)
    s = np.linalg.svd(r, compute_uv=False)
    if _is_rank_deficient(s[-1], s[0], x.shape):
        raise RankDeficient(f"sigma_min={s[-1]:.3e}, sigma_max={s[0]:.3e}")
    # x^+ = R^{-1} Q^T
    return np.linalg.solve(r, q.T)


def project(x, m, complement=False):
    """Apply the orthogonal projector onto range(x), or its complement, to ``m``."""
    x = as_matrix(x, "x")
    m = as_matrix(m, "m")
    if m.shape[0] != x.shape[0]:
        raise DimensionMismatch(f"m has {m.shape[0]} rows, x has {x.shape[0]}")
    p = x @ (pseudo_inverse(x) @ m)
    return m - p if complement else p


def truncated_svd(b, r, *, max_sweeps=SVD_MAX_SWEEPS, tol=SVD_TOL, seed=0):
    """Leading ``r`` singular triples by block power iteration.

    Each sweep multiplies the current block by ``b b^T``, re-orthonormalizes
    it and extracts Ritz values through a small SVD.  Iteration stops once
    the leading ``r`` Ritz values change by less than ``tol`` relative to
    the largest one.  The block carries a few extra columns to speed up
    separation from the trailing spectrum.

    Raises:
        ConvergenceFailure: if ``max_sweeps`` is reached first.
    """
    b = as_matrix(b, "b")
    m, n = b.shape
    if not 1 <= r <= min(m, n):
        raise DimensionMismatch(f"rank {r} outside [1, {min(m, n)}]")
    k = min(r + SVD_OVERSAMPLE, min(m, n))
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(b @ rng.standard_normal((n, k)))
    prev = None
    for _ in range(max_sweeps):
        uh, s, vt = np.linalg.svd(q.T @ b, full_matrices=False)
        if s[0] == 0.0:
            # b is zero: any orthonormal pair is a valid answer
            u = np.eye(m)[:, :r]
            v = np.eye(n)[:, :r]
            return SvdTriple(u, np.zeros(r), v)
        if prev is not None and np.max(np.abs(s[:r] - prev)) <= tol * s[0]:
            u = q @ uh[:, :r]
            v = vt[:r].T.copy()
            u, v = _fix_signs(u, v)
            return SvdTriple(u, s[:r].copy(), v)
        prev = s[:r]
        q, _ = np.linalg.qr(b @ (b.T @ q))
    raise ConvergenceFailure(f"truncated_svd did not converge in {max_sweeps} sweeps")


def rayleigh_ritz(u, v, b):
    """Singular triples of ``b`` restricted to span(u) x span(v).

    Orthonormalizes both factors with economy QR, takes the SVD of the
    r-by-r projected matrix and rotates the bases accordingly.
    """
    u = as_matrix(u, "u")
    v = as_matrix(v, "v")
    b = as_matrix(b, "b")
    if b.shape != (u.shape[0], v.shape[0]):
        raise DimensionMismatch(f"b is {b.shape}, factors imply {(u.shape[0], v.shape[0])}")
    qu, ru = qr_economy(u)
    qv, rv = qr_economy(v)
    for name, r in (("u", ru), ("v", rv)):
        d = np.abs(np.diag(r))
        if _is_rank_deficient(d.min(), d.max(), r.shape):
            raise RankDeficient(f"{name} is rank deficient")
    ur, s, vrt = np.linalg.svd(qu.T @ b @ qv)
    uu = qu @ ur
    vv = qv @ vrt.T
    uu, vv = _fix_signs(uu, vv)
    return SvdTriple(uu, s, vv)
