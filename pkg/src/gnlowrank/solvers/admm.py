"""Splitting schemes on min phi(W) s.t. A(U V^T) - W = B.

The augmented Lagrangian is
L_rho = phi(W) + <Lam, A(U V^T) - W - B> + (rho/2) ||A(U V^T) - W - B||^2.
"""

import math
import time

import numpy as np

from ..errors import DimensionMismatch, LinesearchExhausted, RankDeficient, ValidationError
from ..gn_direction import FactorPair, gn_direction
from ..linalg_core import pseudo_inverse
from ..objectives import prox_l1
from .gauss_newton import _copy_factors
from .linesearch import StopState, armijo_measure, check_stop, linesearch
from .trace import IterationRecord, IterationTrace

RHO_SAFETY = 1.01
RHO_GRADIENT_FACTOR = 3.01
RHO_GROWTH = 1.1
RHO_MAX = 1e6
RHO_WINDOW = 10


def auto_rho(phi, option):
    """Smallest-safe penalty, 1% above the theoretical threshold for each W-step option."""
    if option == "prox":
        return RHO_SAFETY * 0.5 * (math.sqrt(phi.mu_phi + 8.0 * phi.l_phi**2) + phi.mu_phi)
    return RHO_GRADIENT_FACTOR * phi.l_phi


def lyapunov_coefficients(phi, rho, option):
    """(eta1, eta0) in the per-iteration decrease of the augmented Lagrangian."""
    lp, mu = phi.l_phi, phi.mu_phi
    if option == "prox":
        return (rho * rho + mu * rho - 2.0 * lp * lp) / rho, 0.0
    return (rho * rho + lp * rho - 4.0 * lp * lp) / rho, 8.0 * lp * lp / rho


def _fro2(a):
    return float(np.sum(a * a))


def _admm(prob, x0, cfg, name, uv_step):
    co = prob.objective
    op, b, phi = co.op, co.b, co.phi
    if cfg.option == "prox" and phi.prox is None:
        raise ValidationError("option", "the prox W-step needs a cost with a proximal operator")
    u, v = _copy_factors(prob, x0)
    l_a = op.norm**2
    rho = cfg.rho if cfg.rho is not None else auto_rho(phi, cfg.option)
    eta1, eta0 = lyapunov_coefficients(phi, rho, cfg.option)
    scale = max(1.0, prob.b_norm)
    trace = IterationTrace(
        solver=name,
        params={"lipschitz": prob.lipschitz, "rho": rho, "eta1": eta1, "eta0": eta0, "l_a": l_a, "c1": cfg.c1, "option": cfg.option},
    )
    y = op.apply_lowrank(u, v) - b
    w = y.copy()
    lam = np.zeros_like(b)
    dw2_prev = 0.0
    feas_hist = []
    for k in range(cfg.max_iters + 1):
        t0 = time.perf_counter()
        c = y - w
        feas = float(np.linalg.norm(c))
        lag = phi.value(w) + float(np.dot(lam, c)) + 0.5 * rho * feas * feas
        f = phi.value(y)
        g = op.adjoint(phi.gradient(y))
        gu = g.T @ u
        gv = g @ v
        grad_norm = math.sqrt(_fro2(gu) + _fro2(gv))
        opt_norm = max(math.sqrt(_fro2(gu)), math.sqrt(_fro2(gv)))
        resid = float(np.linalg.norm(y))
        rec = IterationRecord(
            k=k,
            objective=f,
            grad_norm=grad_norm,
            feasibility=feas,
            lagrangian=lag,
            extras={"residual": resid, "rho": rho, "dw2_prev": dw2_prev, "lyapunov": lag + 0.5 * eta0 * dw2_prev},
        )
        # feasibility alone is trivially met at k = 0, so it must pair with cond1 or cond4
        rule = None
        if check_stop(StopState(scale, feasibility=feas), cfg) == "cond3":
            other = check_stop(StopState(scale, opt_norm=opt_norm, residual=resid), cfg)
            if other is not None:
                rule = "cond3+" + other
        status = None
        if rule is not None:
            status = "converged"
        elif k == cfg.max_iters:
            status = "max_iters"
        else:
            e = c + lam / rho
            try:
                u1, v1, alpha, i_k, extras = uv_step(u, v, w, lam, rho, e, l_a)
            except RankDeficient:
                status = "rank_deficient"
            except LinesearchExhausted:
                status = "linesearch_exhausted"
        if status is not None:
            rec.wall_ms = 1e3 * (time.perf_counter() - t0)
            trace.append(rec)
            trace.status = status
            trace.stop_rule = rule or ""
            break
        y1 = op.apply_lowrank(u1, v1) - b
        if cfg.option == "prox":
            w1 = phi.prox(y1 + lam / rho, 1.0 / rho)
        else:
            w1 = (phi.l_phi * w - phi.gradient(w) + lam + rho * y1) / (rho + phi.l_phi)
        lam1 = lam + rho * (y1 - w1)
        dw2 = _fro2(w1 - w)
        rec.alpha = alpha
        rec.linesearch = i_k
        rec.extras.update(extras)
        rec.extras["dw2"] = dw2
        rec.extras["dlam"] = float(np.linalg.norm(lam1 - lam))
        rec.wall_ms = 1e3 * (time.perf_counter() - t0)
        trace.append(rec)
        u, v, w, lam, y = u1, v1, w1, lam1, y1
        dw2_prev = dw2
        if cfg.rho_adapt:
            feas_hist.append(float(np.linalg.norm(y - w)))
            if len(feas_hist) > RHO_WINDOW and feas_hist[-1] > 0.95 * feas_hist[-1 - RHO_WINDOW]:
                rho = min(RHO_MAX, RHO_GROWTH * rho)
                feas_hist.clear()
    return FactorPair(u, v), trace


def _surrogate(op, b, w, lam, rho):
    shift = b + w - lam / rho

    def q(u, v):
        r = op.apply_lowrank(u, v) - shift
        return 0.5 * float(np.dot(r, r))

    return q


def solve_gn_admm(prob, x0, cfg):
    """ADMM with one damped Gauss-Newton step on the (U, V) block.

    W starts at A(U0 V0^T) - B and the multiplier at zero.  The linesearch
    runs on Q_k(U, V) = 0.5 ||A(U V^T) - W_k - B + Lam_k / rho||^2 with the
    measure of :func:`armijo_measure` applied to A*(e_k) / L_A; the same
    quantity is logged as ``delta2`` for the Lagrangian decrease check.
    """
    op, b = prob.op, prob.b

    def uv_step(u, v, w, lam, rho, e, l_a):
        ge = op.adjoint(e)
        d = gn_direction((u, v), -ge / l_a)
        s = armijo_measure((u, v), ge, l_a)
        q = _surrogate(op, b, w, lam, rho)
        q0 = q(u, v)
        alpha, i_k, q1 = linesearch(None, (u, v), d, s, cfg, f0=q0, value=q)
        extras = {"armijo_measure": s, "delta2": s, "q_before": q0, "q_after": q1}
        return u + alpha * d.d_u, v + alpha * d.d_v, alpha, i_k, extras

    return _admm(prob, x0, cfg, "gn_admm", uv_step)


def solve_rad_admm(prob, x0, cfg):
    """ADMM whose (U, V) block takes ridge-regularized alternating solves.

    With target M_k = U_k V_k^T + Z_k, Z_k = -A*(e_k) / L_A:
    U+ = (M V + gu U)(V^T V + gu I)^-1 and V+ = (M^T U+ + gv V)(U+^T U+ + gv I)^-1.
    The surrogate values before and after and the squared factor moves are
    logged so the per-step decrease can be re-checked.
    """
    op, b = prob.op, prob.b
    gam_u, gam_v = cfg.gamma_u, cfg.gamma_v

    def uv_step(u, v, w, lam, rho, e, l_a):
        r = u.shape[1]
        eye = np.eye(r)
        mat = u @ v.T - op.adjoint(e) / l_a
        u1 = np.linalg.solve(v.T @ v + gam_u * eye, (mat @ v + gam_u * u).T).T
        v1 = np.linalg.solve(u1.T @ u1 + gam_v * eye, (mat.T @ u1 + gam_v * v).T).T
        q = _surrogate(op, b, w, lam, rho)
        extras = {
            "q_before": 0.5 * float(np.dot(e, e)),
            "q_after": q(u1, v1),
            "du2": _fro2(u1 - u),
            "dv2": _fro2(v1 - v),
        }
        return u1, v1, 1.0, 0, extras

    return _admm(prob, x0, cfg, "rad_admm", uv_step)


def l1_start(m, n, r):
    """Initial factors [I_r; 0] for both U and V."""
    return FactorPair(np.eye(m, r), np.eye(n, r))


def solve_l1(prob, x0, cfg):
    """Splitting scheme for min ||U V^T - B||_1 with slack W = U V^T - B.

    Per iteration, with T = B + W - Lam:
    V+^T = U^+ T, U+ = U + (T - U V+^T)(V^+)^T,
    W+ = soft(U+ V+^T + Lam - B, 1/rho), Lam+ = Lam + s (U+ V+^T - B - W+)
    where s is 1 (``dual_step='unit'``) or rho.  ``rho=None`` picks
    rho = 1 / mean|B|, so the threshold matches the data scale.  The trace
    objective is the relative l1 error ||U V^T - B||_1 / ||B||_1.
    """
    if prob.op.kind != "identity":
        raise DimensionMismatch("the l1 scheme needs the identity operator")
    bm = prob.op.adjoint(prob.b)
    b_l1 = float(np.abs(bm).sum())
    if b_l1 == 0.0:
        raise ValueError("B is identically zero")
    rho = cfg.rho if cfg.rho is not None else bm.size / b_l1
    step = 1.0 if cfg.dual_step == "unit" else rho
    u, v = _copy_factors(prob, x0)
    w = np.zeros_like(bm)
    lam = np.zeros_like(bm)
    scale = max(1.0, prob.b_norm)
    trace = IterationTrace(solver="l1", params={"rho": rho, "dual_step": cfg.dual_step})
    for k in range(cfg.max_iters + 1):
        t0 = time.perf_counter()
        x = u @ v.T
        feas = float(np.linalg.norm(x - bm - w))
        rel = float(np.abs(x - bm).sum()) / b_l1
        rec = IterationRecord(k=k, objective=rel, feasibility=feas)
        status = None
        if k == cfg.max_iters:
            status = "max_iters"
        else:
            t = bm + w - lam
            try:
                v1 = (pseudo_inverse(u) @ t).T
                u1 = u + (t - u @ v1.T) @ pseudo_inverse(v).T
            except RankDeficient:
                status = "rank_deficient"
        if status is None:
            dnorm = max(float(np.linalg.norm(u1 - u)), float(np.linalg.norm(v1 - v)))
            rec.extras["dir_norm"] = dnorm
            if feas <= cfg.eps1 * scale and dnorm <= cfg.eps1 * scale:
                status, trace.stop_rule = "converged", "cond3+cond2"
        if status is not None:
            rec.wall_ms = 1e3 * (time.perf_counter() - t0)
            trace.append(rec)
            trace.status = status
            break
        x1 = u1 @ v1.T
        w = prox_l1(x1 + lam - bm, 1.0 / rho)
        lam = lam + step * (x1 - bm - w)
        u, v = u1, v1
        rec.alpha = 1.0
        rec.wall_ms = 1e3 * (time.perf_counter() - t0)
        trace.append(rec)
    return FactorPair(u, v), trace
