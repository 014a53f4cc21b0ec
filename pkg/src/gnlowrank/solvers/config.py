from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Optional

import numpy as np

from ..errors import DimensionMismatch, ValidationError
from ..objectives import CompositeObjective, SmoothObjective, least_squares

GOLDEN_BETA = (np.sqrt(5.0) - 1.0) / (np.sqrt(5.0) + 1.0)

W_OPTIONS = ("prox", "gradient")
D_HAT_CHOICES = ("half", "zero")
DUAL_STEPS = ("unit", "rho")


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs shared by every scheme.

    ``rho=None`` selects the penalty automatically.  ``residual_stop``
    enables the zero-residual stopping rule, which is only meaningful for
    least squares with a zero optimal value.
    """

    max_iters: int = 500
    eps1: float = 1e-6
    eps2: float = 1e-4
    c1: float = 0.5
    beta: float = GOLDEN_BETA
    alpha0: float = 1.0
    rho: Optional[float] = None
    option: str = "prox"
    gamma_u: float = 1e-3
    gamma_v: float = 1e-3
    linesearch_cap: int = 50
    seed: int = 0
    residual_stop: bool = True
    linesearch: bool = True
    d_hat: str = "half"
    dual_step: str = "unit"
    rho_adapt: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (isinstance(self.max_iters, (int, np.integer)) and self.max_iters >= 0):
            raise ValidationError("max_iters", "must be a nonnegative integer")
        if not 0 < self.beta < 1:
            raise ValidationError("beta", "must lie in (0, 1)")
        if not 0 < self.c1 < 1:
            raise ValidationError("c1", "must lie in (0, 1)")
        for key in ("eps1", "eps2", "alpha0", "gamma_u", "gamma_v"):
            if not getattr(self, key) > 0:
                raise ValidationError(key, "must be positive")
        if self.rho is not None and not self.rho > 0:
            raise ValidationError("rho", "must be positive")
        if not (isinstance(self.linesearch_cap, (int, np.integer)) and self.linesearch_cap >= 0):
            raise ValidationError("linesearch_cap", "must be a nonnegative integer")
        if self.option not in W_OPTIONS:
            raise ValidationError("option", f"must be one of {W_OPTIONS}")
        if self.d_hat not in D_HAT_CHOICES:
            raise ValidationError("d_hat", f"must be one of {D_HAT_CHOICES}")
        if self.dual_step not in DUAL_STEPS:
            raise ValidationError("dual_step", f"must be one of {DUAL_STEPS}")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class Problem:
    """min_{U,V} phi(A(U V^T) - B) at fixed rank r."""

    op: object
    b: np.ndarray
    rank: int
    phi: SmoothObjective = field(default_factory=least_squares)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if not 1 <= self.rank <= min(self.m, self.n):
            raise DimensionMismatch(f"rank {self.rank} outside [1, {min(self.m, self.n)}]")
        if self.b.size != self.op.out_len:
            raise DimensionMismatch(f"b has length {self.b.size}, operator outputs {self.op.out_len}")

    @property
    def m(self):
        return self.op.m

    @property
    def n(self):
        return self.op.n

    @cached_property
    def objective(self):
        return CompositeObjective(self.op, self.b, self.phi)

    @property
    def lipschitz(self):
        return self.objective.lipschitz

    @property
    def b_norm(self):
        return self.objective.b_norm

    def value(self, u, v):
        return self.objective.value(u, v)
