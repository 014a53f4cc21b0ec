"""Backtracking linesearch and the stopping rules shared by all solvers."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import LinesearchExhausted
from ..linalg_core import qr_economy

STOP_RULES = ("cond1", "cond2", "cond3", "cond4")


def armijo_measure(x, g, lipschitz):
    """Sufficient-decrease measure (||P_U G||^2 + ||G P_V||^2) / L.

    With orthonormal factors and L = 1 this equals ||grad Phi||^2.  Unlike the
    raw gradient norm it is invariant to rebalancing U and V, and the
    directional derivative of the GN direction lies between -S and -S/2, so
    backtracking on it always terminates.
    """
    qu, _ = qr_economy(x[0])
    qv, _ = qr_economy(x[1])
    pu = qu.T @ g
    pv = g @ qv
    return float(np.sum(pu * pu) + np.sum(pv * pv)) / lipschitz


def linesearch(prob, x, direction, grad_norm2, cfg, f0=None, value=None):
    """Find the smallest i with f(x + beta^i alpha0 d) <= f(x) - 0.5 c1 alpha grad_norm2.

    Args:
        prob: anything with ``value(u, v)``; overridden by ``value`` if given.
        x: current factors.
        direction: a descent direction.
        grad_norm2: the sufficient-decrease measure.
        cfg: supplies ``alpha0``, ``beta``, ``c1`` and ``linesearch_cap``.
        f0: objective at ``x`` if already known.

    Returns:
        (alpha, i_k, f_new)

    Raises:
        LinesearchExhausted: no acceptable step within ``linesearch_cap`` reductions.
    """
    fval = value if value is not None else prob.value
    u, v = x
    if f0 is None:
        f0 = fval(u, v)
    alpha = cfg.alpha0
    if grad_norm2 == 0.0 and not (np.any(direction.d_u) or np.any(direction.d_v)):
        # zero step: nothing to test
        return alpha, 0, f0
    for i in range(cfg.linesearch_cap + 1):
        f1 = fval(u + alpha * direction.d_u, v + alpha * direction.d_v)
        if f1 <= f0 - 0.5 * cfg.c1 * alpha * grad_norm2:
            return alpha, i, f1
        alpha *= cfg.beta
    raise LinesearchExhausted(f"no sufficient decrease after {cfg.linesearch_cap} reductions")


@dataclass(frozen=True)
class StopState:
    """Norms examined by ``check_stop``; ``None`` marks a rule that does not apply."""

    scale: float
    opt_norm: Optional[float] = None
    dir_norm: Optional[float] = None
    feasibility: Optional[float] = None
    residual: Optional[float] = None


def check_stop(state, cfg):
    """Return the first satisfied stopping rule, or ``None``.

    cond1: max(||U^T Phi'||, ||Phi' V||) <= eps1 s
    cond2: max(||D_U||, ||D_V||) <= eps1 s
    cond3: feasibility <= eps1 s
    cond4: ||A(U V^T) - B|| <= eps2 s   (only when ``cfg.residual_stop``)
    """
    tol1 = cfg.eps1 * state.scale
    if state.opt_norm is not None and state.opt_norm <= tol1:
        return "cond1"
    if state.dir_norm is not None and state.dir_norm <= tol1:
        return "cond2"
    if state.feasibility is not None and state.feasibility <= tol1:
        return "cond3"
    if cfg.residual_stop and state.residual is not None and state.residual <= cfg.eps2 * state.scale:
        return "cond4"
    return None
