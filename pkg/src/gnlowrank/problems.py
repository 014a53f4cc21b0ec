"""Synthetic instance generators and matrix-completion quality metrics."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .gn_direction import FactorPair
from .operators import (
    IndexSet,
    SelectionOperator,
    make_dense_gaussian,
    make_sparse_gaussian,
    matlab_round,
    sample_index_set,
)
from .solvers.config import Problem

CLUSTER_EXPONENT = -0.01
NOISE_RATIO = 0.1
SENSING_KINDS = ("dense_gaussian", "sparse_gaussian")
DEFAULT_DENSITY = 0.05


@dataclass
class McInstance:
    """Matrix-completion data: integer factors, observed set and observed values."""

    ground_truth: FactorPair
    omega: IndexSet
    b: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if self.b.size != len(self.omega):
            raise DimensionMismatch(f"b has {self.b.size} entries, omega has {len(self.omega)}")

    @property
    def shape(self):
        return self.omega.shape

    @property
    def rank(self):
        return self.ground_truth.u.shape[1]

    def full_matrix(self):
        return self.ground_truth.u @ self.ground_truth.v.T

    def problem(self, rank=None):
        return Problem(SelectionOperator(self.omega), self.b, rank or self.rank)


@dataclass
class SensingInstance:
    problem: Problem
    ground_truth: FactorPair
    underdetermined: bool
    kind: str
    sigma: float


@dataclass(frozen=True)
class Metrics:
    delta_f: float
    nmae: float
    delta_x: float


def gen_mc_integer(m, n, r, fraction, sigma, seed):
    """Integer low-rank matrix M = U V^T (entries of U, V in 1..5), observed on a random subset.

    One generator drives, in order: U, V, the index set, then the noise.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    u = rng.integers(1, 6, size=(m, r)).astype(np.float64)
    v = rng.integers(1, 6, size=(n, r)).astype(np.float64)
    omega = sample_index_set(m, n, fraction, rng)
    observed = np.einsum("ij,ij->i", u[omega.rows], v[omega.cols])
    b = observed + sigma * rng.standard_normal(len(omega))
    return McInstance(FactorPair(u, v), omega, b, float(sigma))


def _random_orthonormal(rng, rows, cols):
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q * np.sign(np.diag(r))


def gen_lowrank_clustered(m, n, r, seed):
    """Matrix with clustered spectrum sigma_i = i^-0.01 (i <= r) plus sparse noise.

    The noise has the sparsity of the clean part and Frobenius norm exactly
    10% of it.

    Returns:
        (b, sigma_true, clean)
    """
    if not 1 <= r <= min(m, n):
        raise DimensionMismatch(f"rank {r} outside [1, {min(m, n)}]")
    rng = np.random.default_rng(seed)
    sigma = np.arange(1, r + 1, dtype=np.float64) ** CLUSTER_EXPONENT
    qu = _random_orthonormal(rng, m, r)
    qv = _random_orthonormal(rng, n, r)
    clean = (qu * sigma) @ qv.T
    density = np.count_nonzero(clean) / clean.size
    mask = rng.random((m, n)) < density
    noise = np.where(mask, rng.standard_normal((m, n)), 0.0)
    nn = np.linalg.norm(noise)
    if nn > 0:
        noise *= NOISE_RATIO * np.linalg.norm(clean) / nn
    return clean + noise, sigma, clean


def gen_sensing(m, n, r, l, kind, sigma, seed, density=DEFAULT_DENSITY):
    """B = A(U V^T) + sigma * noise with Gaussian ground-truth factors.

    ``kind`` selects a dense or sparse Gaussian sensing map.  The instance
    is underdetermined when l < r (m + n).
    """
    if kind not in SENSING_KINDS:
        raise ValueError(f"kind must be one of {SENSING_KINDS}")
    if l < 1:
        raise ValueError("l must be positive")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((m, r))
    v = rng.standard_normal((n, r))
    if kind == "dense_gaussian":
        op = make_dense_gaussian(m, n, l, rng)
    else:
        op = make_sparse_gaussian(m, n, l, density, rng)
    b = op.apply_lowrank(u, v) + sigma * rng.standard_normal(l)
    return SensingInstance(Problem(op, b, r), FactorPair(u, v), l < r * (m + n), kind, float(sigma))


def evaluate(x, inst):
    """delta_f, NMAE and the floor-rounded disagreement delta_x on the observed set.

    NMAE is defined as 0 when the observations are constant.
    """
    omega = inst.omega
    if len(omega) == 0:
        raise ValueError("empty observation set")
    rec = np.einsum("ij,ij->i", x[0][omega.rows], x[1][omega.cols])
    b = inst.b
    diff = rec - b
    bn = np.linalg.norm(b)
    delta_f = float(np.linalg.norm(diff) / bn) if bn > 0 else float(np.linalg.norm(diff))
    spread = float(b.max() - b.min())
    nmae = float(np.abs(diff).sum() / (spread * len(omega))) if spread > 0 else 0.0
    delta_x = float(np.abs(np.floor(rec) - b).sum() / len(omega))
    return Metrics(delta_f, nmae, delta_x)


def gen_symmetric(m, r, seed, indefinite=False):
    """Symmetric test matrix.

    PSD case: B = U U^T with Gaussian U (m x r).  Indefinite case: r positive
    eigenvalues 1 + i plus m - r negative ones in [-2, -0.1], on a random
    orthonormal basis; its best rank-r PSD approximation keeps the positive
    part.

    Returns:
        (b, u_true) where ``u_true`` spans the positive part.
    """
    rng = np.random.default_rng(seed)
    if not indefinite:
        u = rng.standard_normal((m, r))
        return u @ u.T, u
    q = _random_orthonormal(rng, m, m)
    pos = 1.0 + np.arange(r, 0, -1, dtype=np.float64)
    neg = -rng.uniform(0.1, 2.0, m - r)
    b = (q * np.r_[pos, neg]) @ q.T
    b = 0.5 * (b + b.T)
    return b, q[:, :r] * np.sqrt(pos)


def gen_sparse_corruption(m, n, r, fraction, magnitude, seed):
    """Rank-r Gaussian matrix plus +/-``magnitude`` spikes on ``fraction`` of the entries.

    Returns:
        (b, low_rank, spikes)
    """
    rng = np.random.default_rng(seed)
    low = rng.standard_normal((m, r)) @ rng.standard_normal((n, r)).T
    spikes = np.zeros((m, n))
    count = matlab_round(fraction * m * n)
    idx = rng.choice(m * n, size=count, replace=False)
    spikes.flat[idx] = magnitude * rng.choice([-1.0, 1.0], size=count)
    return low + spikes, low, spikes
