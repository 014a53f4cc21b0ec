"""Convex costs phi and the composite objective Phi(U, V) = phi(A(U V^T) - B)."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch
from .linalg_core import as_matrix


@dataclass(frozen=True)
class SmoothObjective:
    """A convex, L-smooth cost on R^l.

    ``prox(c, t)`` is optional and, when present, returns
    ``argmin_w phi(w) + ||w - c||^2 / (2 t)``.
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    l_phi: float
    mu_phi: float = 0.0
    prox: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    name: str = "custom"


def least_squares():
    """phi(r) = 0.5 ||r||^2 with L_phi = mu_phi = 1."""
    return SmoothObjective(
        value=lambda r: 0.5 * float(np.dot(r, r)),
        gradient=lambda r: np.array(r, dtype=np.float64, copy=True),
        l_phi=1.0,
        mu_phi=1.0,
        prox=lambda c, t: c / (1.0 + t),
        name="least_squares",
    )


def prox_l1(q, t):
    """Entrywise soft thresholding at level ``t``."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    q = np.asarray(q, dtype=np.float64)
    return np.sign(q) * np.maximum(np.abs(q) - t, 0.0)


@dataclass
class CompositeObjective:
    """Phi(U, V) = phi(A(U V^T) - B) together with its derivatives."""

    op: object
    b: np.ndarray
    phi: SmoothObjective = field(default_factory=least_squares)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if self.b.size != self.op.out_len:
            raise DimensionMismatch(f"b has length {self.b.size}, operator outputs {self.op.out_len}")

    @cached_property
    def lipschitz(self):
        """L = L_phi ||A||^2, computed once."""
        return self.phi.l_phi * self.op.norm**2

    @cached_property
    def b_norm(self):
        return float(np.linalg.norm(self.b))

    def _check(self, u, v):
        u = as_matrix(u, "u")
        v = as_matrix(v, "v")
        if u.shape[0] != self.op.m or v.shape[0] != self.op.n or u.shape[1] != v.shape[1]:
            raise DimensionMismatch(
                f"factors {u.shape}, {v.shape} do not match operator input {self.op.in_shape}"
            )
        return u, v

    def residual(self, u, v):
        u, v = self._check(u, v)
        return self.op.apply_lowrank(u, v) - self.b

    def value(self, u, v):
        return self.phi.value(self.residual(u, v))

    def phi_prime(self, u, v):
        """A*(grad phi(A(U V^T) - B)) as an m-by-n matrix."""
        return self.op.adjoint(self.phi.gradient(self.residual(u, v)))

    def grad_blocks(self, u, v):
        """Gradient blocks (Phi' V, Phi'^T U) with respect to U and V."""
        u, v = self._check(u, v)
        g = self.phi_prime(u, v)
        return g @ v, g.T @ u


def phi_prime(co, u, v):
    return co.phi_prime(u, v)


def grad_blocks(co, u, v):
    return co.grad_blocks(u, v)
