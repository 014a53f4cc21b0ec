"""Gauss-Newton family: linesearch GN, full-step GN, the ADM baseline and the symmetric variant."""

import math
import time

import numpy as np

from ..errors import DimensionMismatch, LinesearchExhausted, RankDeficient
from ..gn_direction import Direction, FactorPair, gn_direction, gn_direction_general, symmetric_direction
from ..linalg_core import as_matrix, pseudo_inverse, qr_economy
from .linesearch import StopState, armijo_measure, check_stop, linesearch
from .trace import IterationRecord, IterationTrace


def _copy_factors(prob, x0):
    u = np.array(as_matrix(x0[0], "u0"), copy=True)
    v = np.array(as_matrix(x0[1], "v0"), copy=True)
    if u.shape != (prob.m, prob.rank) or v.shape != (prob.n, prob.rank):
        raise DimensionMismatch(
            f"x0 shapes {u.shape}, {v.shape} do not match ({prob.m}, {prob.rank}), ({prob.n}, {prob.rank})"
        )
    return u, v


def _fro2(a):
    return float(np.sum(a * a))


def _run(prob, x0, cfg, name, step):
    """Shared outer loop.

    ``step(u, v, g, f)`` returns ``(dir_norm, advance)`` where ``advance()``
    yields ``(u1, v1, alpha, i_k, extras)``.  ``step`` may raise
    RankDeficient; ``advance`` may raise RankDeficient or LinesearchExhausted.
    """
    co = prob.objective
    u, v = _copy_factors(prob, x0)
    scale = max(1.0, prob.b_norm)
    trace = IterationTrace(solver=name, params={"lipschitz": prob.lipschitz})
    for k in range(cfg.max_iters + 1):
        t0 = time.perf_counter()
        res = co.op.apply_lowrank(u, v) - co.b
        f = co.phi.value(res)
        g = co.op.adjoint(co.phi.gradient(res))
        gv = g @ v
        gu = g.T @ u
        grad_norm = math.sqrt(_fro2(gv) + _fro2(gu))
        opt_norm = max(math.sqrt(_fro2(gu)), math.sqrt(_fro2(gv)))
        resid = float(np.linalg.norm(res))
        try:
            dir_norm, advance = step(u, v, g, f)
        except RankDeficient:
            dir_norm, advance = None, None
        rule = check_stop(StopState(scale, opt_norm, dir_norm, None, resid), cfg)
        rec = IterationRecord(k=k, objective=f, grad_norm=grad_norm, extras={"residual": resid})
        if dir_norm is not None:
            rec.extras["dir_norm"] = dir_norm
        status = None
        if rule is not None:
            status = "converged"
        elif advance is None:
            status = "rank_deficient"
        elif k == cfg.max_iters:
            status = "max_iters"
        else:
            try:
                u1, v1, alpha, i_k, extras = advance()
            except RankDeficient:
                status = "rank_deficient"
            except LinesearchExhausted:
                status = "linesearch_exhausted"
        rec.wall_ms = 1e3 * (time.perf_counter() - t0)
        if status is not None:
            trace.append(rec)
            trace.status = status
            trace.stop_rule = rule or ""
            break
        rec.alpha = alpha
        rec.linesearch = i_k
        rec.extras.update(extras)
        trace.append(rec)
        u, v = u1, v1
    return FactorPair(u, v), trace


def _direction_norm(d):
    return max(float(np.linalg.norm(d.d_u)), float(np.linalg.norm(d.d_v)))


def solve_lsgn(prob, x0, cfg):
    """Linesearch Gauss-Newton.

    Each step moves along the GN direction for Z = -Phi'/L and backtracks
    until ``Phi(x + a d) <= Phi(x) - 0.5 c1 a S`` where ``S`` is the
    scale-invariant measure from :func:`armijo_measure` (logged as
    ``armijo_measure`` in the trace extras).
    """
    lip = prob.lipschitz

    def step(u, v, g, f):
        d = gn_direction((u, v), -g / lip)

        def advance():
            s = armijo_measure((u, v), g, lip)
            alpha, i_k, f1 = linesearch(prob, (u, v), d, s, cfg, f0=f)
            return u + alpha * d.d_u, v + alpha * d.d_v, alpha, i_k, {"armijo_measure": s}

        return _direction_norm(d), advance

    return _run(prob, x0, cfg, "lsgn", step)


def solve_fsgn(prob, x0, cfg):
    """Full-step Gauss-Newton (alpha = 1, no linesearch).

    ``cfg.d_hat='half'`` uses the particular direction; ``'zero'`` uses the
    D_hat = 0 member, which on the identity operator is the alternating
    factorization recursion V+^T = U^+ B, U+ = U + (B - U V+^T)(V^+)^T.
    """
    lip = prob.lipschitz

    def step(u, v, g, f):
        z = -g / lip
        if cfg.d_hat == "zero":
            d = gn_direction_general((u, v), z, np.zeros((u.shape[1], u.shape[1])))
        else:
            d = gn_direction((u, v), z)

        def advance():
            return u + d.d_u, v + d.d_v, 1.0, 0, {}

        return _direction_norm(d), advance

    return _run(prob, x0, cfg, "fsgn", step)


def solve_adm(prob, x0, cfg):
    """Alternating least squares on the surrogate 0.5 ||U V^T - (U_k V_k^T + Z_k)||^2."""
    lip = prob.lipschitz

    def step(u, v, g, f):
        mat = u @ v.T - g / lip
        u1 = mat @ pseudo_inverse(v).T
        v1 = (pseudo_inverse(u1) @ mat).T
        dnorm = max(float(np.linalg.norm(u1 - u)), float(np.linalg.norm(v1 - v)))

        def advance():
            return u1, v1, 1.0, 0, {}

        return dnorm, advance

    return _run(prob, x0, cfg, "adm", step)


def solve_slsgn(prob_sym, u0, cfg):
    """Symmetric linesearch GN for phi(A(U U^T) - B).

    Stops on ||U^T Phi'|| <= eps1 max(1, ||B||) (stationarity),
    ||D_U|| <= eps1 max(1, ||U||) or the zero-residual rule.

    Raises:
        AsymmetricInput: if Phi'(U U^T) is not symmetric (operator or data
            not symmetric).
    """
    co = prob_sym.objective
    if co.op.m != co.op.n:
        raise DimensionMismatch("symmetric model needs a square operator domain")
    u = np.array(as_matrix(u0, "u0"), copy=True)
    if u.shape != (co.op.m, prob_sym.rank):
        raise DimensionMismatch(f"u0 is {u.shape}, expected {(co.op.m, prob_sym.rank)}")
    lip = prob_sym.lipschitz
    scale = max(1.0, prob_sym.b_norm)
    trace = IterationTrace(solver="slsgn", params={"lipschitz": lip})

    def fval(a, _b):
        return co.phi.value(co.op.apply_lowrank(a, a) - co.b)

    for k in range(cfg.max_iters + 1):
        t0 = time.perf_counter()
        res = co.op.apply_lowrank(u, u) - co.b
        f = co.phi.value(res)
        g = co.op.adjoint(co.phi.gradient(res))
        gs = g + g.T
        grad_norm = float(np.linalg.norm(gs @ u))
        opt_norm = float(np.linalg.norm(u.T @ g))
        resid = float(np.linalg.norm(res))
        rec = IterationRecord(k=k, objective=f, grad_norm=grad_norm, extras={"residual": resid})
        status, rule, d = None, None, None
        try:
            d = symmetric_direction(u, -g / lip)
        except RankDeficient:
            pass
        if d is not None:
            dn = float(np.linalg.norm(d))
            rec.extras["dir_norm"] = dn
            # cond2 here is relative to ||U||, so it is evaluated separately
            tol_d = cfg.eps1 * max(1.0, float(np.linalg.norm(u)))
        rule = check_stop(StopState(scale, opt_norm=opt_norm), cfg)
        if rule is None and d is not None and dn <= tol_d:
            rule = "cond2"
        if rule is None:
            rule = check_stop(StopState(scale, residual=resid), cfg)
        if rule is not None:
            status = "converged"
        elif d is None:
            status = "rank_deficient"
        elif k == cfg.max_iters:
            status = "max_iters"
        else:
            qu, _ = qr_economy(u)
            pg = qu.T @ g
            s = 2.0 * _fro2(pg) / lip
            try:
                alpha, i_k, _ = linesearch(None, (u, u), Direction(d, d), s, cfg, f0=f, value=fval)
            except LinesearchExhausted:
                status = "linesearch_exhausted"
        rec.wall_ms = 1e3 * (time.perf_counter() - t0)
        if status is not None:
            trace.append(rec)
            trace.status = status
            trace.stop_rule = rule or ""
            break
        rec.alpha = alpha
        rec.linesearch = i_k
        rec.extras["armijo_measure"] = s
        trace.append(rec)
        u = u + alpha * d
    return u, trace


__all__ = ["solve_lsgn", "solve_fsgn", "solve_adm", "solve_slsgn"]
