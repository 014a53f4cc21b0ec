"""Linear measurement maps from m-by-n matrices to vectors.

All operators act on the column-major vectorization of their input, so
``IdentityOperator(m, n).apply(x)`` equals ``x.ravel(order="F")``.

Randomness throughout the package comes from numpy's PCG64 generator
(``numpy.random.default_rng``); identical seeds give identical objects.
"""

from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, DimensionMismatch
from .linalg_core import as_matrix

POWER_MAX_ITERS = 300
POWER_TOL = 1e-9


def matlab_round(x):
    """Round half away from zero."""
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


class IndexSet:
    """Sorted, duplicate-free set of (row, col) positions in an m-by-n grid."""

    def __init__(self, shape, rows, cols):
        m, n = (int(shape[0]), int(shape[1]))
        rows = np.asarray(rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(cols, dtype=np.int64).reshape(-1)
        if rows.shape != cols.shape:
            raise DimensionMismatch("rows and cols differ in length")
        if rows.size:
            if rows.min() < 0 or cols.min() < 0 or rows.max() >= m or cols.max() >= n:
                raise DimensionMismatch(f"index outside {m}x{n}")
            key = rows * n + cols
            if np.any(np.diff(key) <= 0):
                raise ValueError("entries must be strictly increasing in (row, col) order")
        self.shape = (m, n)
        self.rows = rows
        self.cols = cols
        self.rows.setflags(write=False)
        self.cols.setflags(write=False)

    @classmethod
    def from_pairs(cls, shape, pairs):
        """Build from unordered pairs; duplicates are rejected."""
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        arr = arr[order]
        if len(arr) > 1 and np.any(np.all(arr[1:] == arr[:-1], axis=1)):
            raise ValueError("duplicate index pair")
        return cls(shape, arr[:, 0], arr[:, 1])

    @classmethod
    def full(cls, shape):
        m, n = shape
        rows, cols = np.divmod(np.arange(m * n), n)
        return cls(shape, rows, cols)

    def __len__(self):
        return int(self.rows.size)

    def __iter__(self):
        return zip(self.rows.tolist(), self.cols.tolist())

    def __eq__(self, other):
        if not isinstance(other, IndexSet):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
        )

    def __repr__(self):
        return f"IndexSet(shape={self.shape}, size={len(self)})"

    def mask(self):
        out = np.zeros(self.shape, dtype=bool)
        out[self.rows, self.cols] = True
        return out


class LinearOperator:
    """Base class: subclasses implement ``_apply`` and ``_adjoint``."""

    kind = "abstract"

    def __init__(self, m, n, out_len):
        self.m = int(m)
        self.n = int(n)
        self.out_len = int(out_len)

    @property
    def in_shape(self):
        return (self.m, self.n)

    def apply(self, x):
        x = as_matrix(x, "x")
        if x.shape != self.in_shape:
            raise DimensionMismatch(f"expected {self.in_shape} input, got {x.shape}")
        return self._apply(x)

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if y.size != self.out_len:
            raise DimensionMismatch(f"expected length {self.out_len}, got {y.size}")
        return self._adjoint(y)

    def apply_lowrank(self, u, v):
        """``apply(u @ v.T)``; subclasses may avoid forming the product."""
        return self.apply(u @ v.T)

    def preimage(self, b):
        """A matrix ``M`` with ``apply(M) == b`` (minimum norm when not unique)."""
        raise NotImplementedError

    @cached_property
    def norm(self):
        """||A|| used by the solvers: power method, Lanczos if that stalls."""
        try:
            return estimate_norm(self)
        except ConvergenceFailure:
            matrix = getattr(self, "matrix", None)
            if matrix is None:
                raise
            s = spla.svds(matrix, k=1, return_singular_vectors=False, random_state=0)
            return float(s[0])

    def _apply(self, x):
        raise NotImplementedError

    def _adjoint(self, y):
        raise NotImplementedError


class IdentityOperator(LinearOperator):
    kind = "identity"

    def __init__(self, m, n):
        super().__init__(m, n, m * n)

    def _apply(self, x):
        return x.ravel(order="F").copy()

    def _adjoint(self, y):
        return y.reshape(self.in_shape, order="F").copy()

    def preimage(self, b):
        return self.adjoint(b)


class SelectionOperator(LinearOperator):
    """Entry selection P_Omega; output follows the IndexSet order."""

    kind = "selection"

    def __init__(self, omega):
        if len(omega) == 0:
            raise ValueError("selection operator needs a nonempty index set")
        super().__init__(omega.shape[0], omega.shape[1], len(omega))
        self.omega = omega

    def _apply(self, x):
        return x[self.omega.rows, self.omega.cols]

    def _adjoint(self, y):
        out = np.zeros(self.in_shape)
        out[self.omega.rows, self.omega.cols] = y
        return out

    def apply_lowrank(self, u, v):
        return np.einsum("ij,ij->i", u[self.omega.rows], v[self.omega.cols])

    def preimage(self, b):
        return self.adjoint(b)


class DenseOperator(LinearOperator):
    """Explicit l-by-(m*n) sensing matrix acting on vec(X)."""

    kind = "dense"

    def __init__(self, matrix, m, n):
        if sp.issparse(matrix):
            matrix = sp.csr_matrix(matrix, dtype=np.float64)
        else:
            matrix = as_matrix(matrix, "matrix")
        if matrix.shape[1] != m * n:
            raise DimensionMismatch(f"matrix has {matrix.shape[1]} columns, need {m * n}")
        super().__init__(m, n, matrix.shape[0])
        self.matrix = matrix

    def _apply(self, x):
        return np.asarray(self.matrix @ x.ravel(order="F")).reshape(-1)

    def _adjoint(self, y):
        z = np.asarray(self.matrix.T @ y).reshape(-1)
        return z.reshape(self.in_shape, order="F")

    def preimage(self, b):
        b = np.asarray(b, dtype=np.float64).reshape(-1)
        if sp.issparse(self.matrix):
            sol = spla.lsqr(self.matrix, b, atol=1e-14, btol=1e-14, iter_lim=20 * self.out_len)[0]
        else:
            sol = np.linalg.lstsq(self.matrix, b, rcond=None)[0]
        return sol.reshape(self.in_shape, order="F")


class SparseGaussianOperator(DenseOperator):
    kind = "sparse_gaussian"

    def __init__(self, m, n, l, density, seed):
        self.density = float(density)
        self.seed = seed
        rng = np.random.default_rng(seed)
        mat = sp.random(
            l, m * n, density=density, format="csr", random_state=rng, data_rvs=rng.standard_normal
        )
        super().__init__(mat / np.sqrt(l), m, n)


def apply(op, x):
    return op.apply(x)


def adjoint(op, y):
    return op.adjoint(y)


def estimate_norm(op, max_iters=POWER_MAX_ITERS, tol=POWER_TOL):
    """Operator norm ||A|| by power iteration on A*A.

    Identity and selection operators are exact isometries on their
    support, so 1.0 is returned without iterating.

    Raises:
        ConvergenceFailure: if the Rayleigh quotient is still moving by more
            than ``tol`` (relative) after ``max_iters`` iterations.
    """
    if isinstance(op, (IdentityOperator, SelectionOperator)):
        return 1.0
    x = np.ones(op.in_shape) / np.sqrt(op.m * op.n)
    lam = 0.0
    for _ in range(max_iters):
        y = op.adjoint(op.apply(x))
        lam_new = float(np.vdot(x, y))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            raise ConvergenceFailure("power method hit the null space of the operator")
        x = y / ny
        if abs(lam_new - lam) <= tol * lam_new:
            return float(np.sqrt(lam_new))
        lam = lam_new
    raise ConvergenceFailure(f"power method did not converge in {max_iters} iterations")


def make_sparse_gaussian(m, n, l, density, seed):
    """Sparse Gaussian sensing map scaled by 1/sqrt(l)."""
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    if l < 1:
        raise ValueError("l must be positive")
    return SparseGaussianOperator(m, n, l, density, seed)


def make_dense_gaussian(m, n, l, seed):
    rng = np.random.default_rng(seed)
    return DenseOperator(rng.standard_normal((l, m * n)) / np.sqrt(l), m, n)


def sample_index_set(m, n, fraction, seed):
    """Uniformly sample round(fraction*m*n) distinct entries without replacement.

    ``seed`` may be an integer or an existing ``numpy.random.Generator``.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    s = matlab_round(fraction * m * n)
    lin = np.sort(rng.choice(m * n, size=s, replace=False))
    # row-major linear index so sorting gives (row, col) order directly
    rows, cols = np.divmod(lin, n)
    return IndexSet((m, n), rows, cols)


__all__ = [
    "IndexSet",
    "LinearOperator",
    "IdentityOperator",
    "SelectionOperator",
    "DenseOperator",
    "SparseGaussianOperator",
    "apply",
    "adjoint",
    "estimate_norm",
    "make_sparse_gaussian",
    "make_dense_gaussian",
    "sample_index_set",
]
