"""Fast invariant checks across all modules, used by ``gnlowrank selftest``."""

import os
import tempfile

import numpy as np

from .gn_direction import gn_direction, linearized_residual, step_size_bound, subproblem_value
from .io import format_config, parse_config, read_matrix_market, write_matrix_market
from .linalg_core import pseudo_inverse, rayleigh_ritz, truncated_svd
from .objectives import CompositeObjective
from .operators import IdentityOperator, SelectionOperator, make_dense_gaussian, make_sparse_gaussian, sample_index_set
from .problems import gen_lowrank_clustered, gen_mc_integer, gen_symmetric
from .solvers import (
    IterationTrace,
    Problem,
    SolverConfig,
    factorize,
    init_point,
    solve_gn_admm,
    solve_lsgn,
    solve_slsgn,
)


def _operators(rng):
    yield IdentityOperator(6, 5)
    yield SelectionOperator(sample_index_set(6, 5, 0.5, rng))
    yield make_dense_gaussian(6, 5, 20, rng)
    yield make_sparse_gaussian(6, 5, 20, 0.3, rng)


def check_adjoints(rng):
    worst = 0.0
    for op in _operators(rng):
        x = rng.standard_normal(op.in_shape)
        y = rng.standard_normal(op.out_len)
        lhs = float(np.dot(op.apply(x), y))
        rhs = float(np.sum(x * op.adjoint(y)))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst <= 1e-10, f"max adjoint mismatch {worst:.2e}"


def check_gradients(rng):
    worst = 0.0
    h = 1e-6
    for op in _operators(rng):
        co = CompositeObjective(op, rng.standard_normal(op.out_len))
        u = rng.standard_normal((op.m, 2))
        v = rng.standard_normal((op.n, 2))
        gu, gv = co.grad_blocks(u, v)
        du = rng.standard_normal(u.shape)
        dv = rng.standard_normal(v.shape)
        fd = (co.value(u + h * du, v + h * dv) - co.value(u - h * du, v - h * dv)) / (2 * h)
        an = float(np.sum(gu * du) + np.sum(gv * dv))
        worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    return worst <= 1e-6, f"max finite-difference mismatch {worst:.2e}"


def check_directions(rng):
    worst = 0.0
    for _ in range(20):
        m, n, r = 9, 7, 3
        u = rng.standard_normal((m, r))
        v = rng.standard_normal((n, r))
        z = rng.standard_normal((m, n))
        d = gn_direction((u, v), z)
        res = linearized_residual((u, v), d, z)
        # normal equations: res V = 0 and res^T U = 0
        ne = np.linalg.norm(res @ v) + np.linalg.norm(res.T @ u)
        worst = max(worst, ne / np.linalg.norm(z))
        gap = abs(subproblem_value((u, v), z) - 0.5 * np.sum(res**2))
        worst = max(worst, gap / np.sum(z**2))
    return worst <= 1e-9, f"max normal-equation residual {worst:.2e}"


def check_step_bound(rng):
    bad = 0
    for _ in range(20):
        op = IdentityOperator(8, 6)
        co = CompositeObjective(op, rng.standard_normal(op.out_len))
        u = rng.standard_normal((8, 2))
        v = rng.standard_normal((6, 2))
        g = co.phi_prime(u, v)
        gu, gv = co.grad_blocks(u, v)
        gn = float(np.sqrt(np.sum(gu**2) + np.sum(gv**2)))
        a = step_size_bound((u, v), gn, float(np.linalg.norm(g)), co.lipschitz)
        d = gn_direction((u, v), -g / co.lipschitz)
        if co.value(u + a * d.d_u, v + a * d.d_v) > co.value(u, v):
            bad += 1
    return bad == 0, f"{bad} non-descent steps"


def check_linalg(rng):
    b = rng.standard_normal((12, 5)) @ rng.standard_normal((5, 10))
    x = rng.standard_normal((12, 4))
    ok = np.allclose(pseudo_inverse(x), np.linalg.pinv(x), atol=1e-10)
    t = truncated_svd(b, 3)
    ref = np.linalg.svd(b, compute_uv=False)[:3]
    err = float(np.max(np.abs(t.sigma - ref) / ref))
    rr = rayleigh_ritz(t.u, t.v, b)
    err = max(err, float(np.max(np.abs(rr.sigma - ref) / ref)))
    return ok and err <= 1e-8, f"max singular value error {err:.2e}"


def check_solvers(rng):
    msgs = []
    inst = gen_mc_integer(30, 40, 2, 0.6, 0.0, 1)
    prob = inst.problem()
    _, tr = solve_lsgn(prob, init_point(prob), SolverConfig(max_iters=100))
    mono = bool(np.all(np.diff(tr.objectives) <= 0))
    msgs.append(f"lsgn {tr.status}")
    b, _ = gen_symmetric(10, 2, 2)
    sp = Problem(IdentityOperator(10, 10), b.ravel(order="F"), 2)
    _, ts = solve_slsgn(sp, rng.standard_normal((10, 2)), SolverConfig(max_iters=100))
    mono = mono and bool(np.all(np.diff(ts.objectives) <= 0))
    msgs.append(f"slsgn {ts.status}")
    _, ta = solve_gn_admm(prob, init_point(prob), SolverConfig(max_iters=200))
    msgs.append(f"gn_admm {ta.status}")
    bm, sig, _ = gen_lowrank_clustered(20, 20, 3, 3)
    svd, _, _ = factorize(bm, 3)
    err = float(np.max(np.abs(svd.sigma - np.linalg.svd(bm, compute_uv=False)[:3])))
    ok = mono and tr.converged and ts.converged and ta.converged and err <= 1e-8
    return ok, ", ".join(msgs) + f", factorize error {err:.1e}"


def check_io(rng):
    with tempfile.TemporaryDirectory() as tmp:
        omega = sample_index_set(5, 7, 0.4, rng)
        vals = rng.standard_normal(len(omega))
        path = os.path.join(tmp, "a.mtx")
        write_matrix_market(path, (omega, vals))
        o2, v2 = read_matrix_market(path)
        ok = o2 == omega and np.array_equal(v2, vals)
        dense = rng.standard_normal((4, 3))
        write_matrix_market(path, dense)
        ok = ok and np.array_equal(read_matrix_market(path), dense)
        text = format_config(parse_config("beta=0.25\nrho=3\nm=10\n"))
        ok = ok and format_config(parse_config(text)) == text
        _, trace = solve_lsgn(
            Problem(IdentityOperator(4, 4), rng.standard_normal(16), 1),
            (rng.standard_normal((4, 1)), rng.standard_normal((4, 1))),
            SolverConfig(max_iters=5),
        )
        tp = os.path.join(tmp, "t.csv")
        trace.to_csv(tp)
        back = IterationTrace.from_csv(tp)
        ok = ok and np.array_equal(back.objectives, trace.objectives) and back.status == trace.status
    return ok, "round trips"


def check_determinism(rng):
    a = gen_mc_integer(20, 30, 2, 0.5, 0.1, 7)
    b = gen_mc_integer(20, 30, 2, 0.5, 0.1, 7)
    ok = a.omega == b.omega and a.b.tobytes() == b.b.tobytes()
    pa, pb = a.problem(), b.problem()
    xa, _ = solve_lsgn(pa, init_point(pa), SolverConfig(max_iters=20))
    xb, _ = solve_lsgn(pb, init_point(pb), SolverConfig(max_iters=20))
    ok = ok and xa.u.tobytes() == xb.u.tobytes()
    return ok, "identical bytes" if ok else "outputs differ"


CHECKS = [
    ("operators.adjoint", check_adjoints),
    ("objectives.gradient", check_gradients),
    ("gn_direction.normal_equations", check_directions),
    ("gn_direction.step_bound", check_step_bound),
    ("linalg_core.svd", check_linalg),
    ("solvers.runs", check_solvers),
    ("io.round_trip", check_io),
    ("determinism", check_determinism),
]


def run(seed=0, out=print):
    """Run every check; returns the number of failures."""
    failures = 0
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash counts as a violation
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failures += not ok
        out(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return failures
