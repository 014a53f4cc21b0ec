"""Command-line front end.

Exit codes: 0 converged, 2 iteration cap reached, 3 numerical failure,
64 usage error.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import io as gio
from . import selftest
from .errors import LowRankError, ParseError, ValidationError
from .linalg_core import rayleigh_ritz
from .operators import IdentityOperator, SelectionOperator
from .problems import (
    evaluate,
    gen_lowrank_clustered,
    gen_mc_integer,
    gen_sensing,
    gen_sparse_corruption,
    gen_symmetric,
)
from .solvers import (
    Problem,
    SolverConfig,
    factorization_start,
    factorize,
    init_point,
    l1_start,
    solve_adm,
    solve_fsgn,
    solve_gn_admm,
    solve_l1,
    solve_lsgn,
    solve_rad_admm,
    solve_slsgn,
)

EXIT_OK = 0
EXIT_MAX_ITERS = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

SOLVERS = {
    "lsgn": solve_lsgn,
    "fsgn": solve_fsgn,
    "adm": solve_adm,
    "gn_admm": solve_gn_admm,
    "rad_admm": solve_rad_admm,
}

STATUS_CODES = {
    "converged": EXIT_OK,
    "max_iters": EXIT_MAX_ITERS,
    "rank_deficient": EXIT_NUMERICAL,
    "linesearch_exhausted": EXIT_NUMERICAL,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--config", help="key=value run configuration file")
    p.add_argument("--trace-out", help="write the iteration trace CSV here")
    p.add_argument("--result-out", help="write a key=value result summary here")
    p.add_argument("--max-iters", type=int, help="iteration cap")
    p.add_argument("--eps1", type=float, help="stationarity tolerance")
    p.add_argument("--eps2", type=float, help="residual tolerance")
    p.add_argument("--timing", action="store_true", help="record wall-clock times in the trace")


def build_parser():
    parser = _Parser(prog="gnlowrank", description="Gauss-Newton solvers for low-rank matrix problems.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("complete", help="matrix completion")
    _common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--fraction", type=float, help="observed fraction (default 0.5)")
    p.add_argument("--sigma", type=float, help="noise level (default 0)")
    p.add_argument("--input", help="observations as a Matrix Market coordinate file")
    p.add_argument("--solver", choices=sorted(SOLVERS))
    p.add_argument("--option", choices=("prox", "gradient"))
    p.add_argument("--rho", type=float)

    p = sub.add_parser("factorize", help="rank-r factorization of a dense matrix")
    _common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--input", help="dense matrix (CSV or Matrix Market array)")
    p.add_argument("--solver", choices=("fsgn", "lsgn"))

    p = sub.add_parser("recover-l1", help="low-rank recovery under sparse corruption")
    _common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--spike-fraction", type=float, default=0.02)
    p.add_argument("--spike", type=float, default=5.0, help="spike magnitude")
    p.add_argument("--input", help="dense matrix (CSV or Matrix Market array)")
    p.add_argument("--rho", type=float)
    p.add_argument("--dual-step", choices=("unit", "rho"))

    p = sub.add_parser("sym", help="symmetric low-rank approximation")
    _common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--indefinite", action="store_true")
    p.add_argument("--input", help="symmetric dense matrix (CSV or Matrix Market array)")

    p = sub.add_parser("sense-compare", help="full-step GN versus ADM on a sensing instance")
    _common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--l-ratio", type=float, help="l = ratio * r (m + n) (default 0.5)")
    p.add_argument("--kind", choices=("dense_gaussian", "sparse_gaussian"))
    p.add_argument("--sigma", type=float)
    p.add_argument("--iters", type=int, help="iteration budget for both schemes (default 300)")
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("inpaint", help="fill in unknown pixels of a low-rank image")
    _common(p)
    p.add_argument("--input", help="image as a dense matrix")
    p.add_argument("--mask", help="known pixels as a Matrix Market coordinate file")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--solver", choices=("lsgn", "gn_admm"))
    p.add_argument("--out", required=True, help="recovered image path (.csv or Matrix Market)")

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _load_config(args):
    if getattr(args, "config", None):
        cfg = gio.read_config(args.config)
    else:
        cfg = gio.RunConfig()
    for key in ("trace_out", "result_out", "mask", "input"):
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, cfg.problem.get(key))
    solver = gio.merge_solver(
        cfg.solver,
        max_iters=args.max_iters,
        eps1=args.eps1,
        eps2=args.eps2,
        seed=args.seed,
        rho=getattr(args, "rho", None),
        option=getattr(args, "option", None),
        dual_step=getattr(args, "dual_step", None),
    )
    return solver, cfg.problem


def _pick(args, problem, key, default=None, flag=None):
    val = getattr(args, key, None)
    if val is None:
        val = problem.get(key, default)
    if val is None:
        raise UsageError(f"missing --{flag or key.replace('_', '-')}")
    return val


def _write_result(path, items):
    if not path:
        return
    lines = []
    for key, val in items:
        if isinstance(val, (float, np.floating)):
            val = "%.17g" % val
        elif isinstance(val, (list, tuple, np.ndarray)):
            val = " ".join("%.17g" % x for x in np.asarray(val, dtype=float).ravel())
        lines.append(f"{key}={val}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _finish(args, trace, extra=()):
    out = getattr(args, "trace_out", None)
    if out:
        trace.to_csv(out, timing=args.timing)
    rec = trace.records[-1]
    items = [
        ("solver", trace.solver),
        ("status", trace.status),
        ("stop_rule", trace.stop_rule or "none"),
        ("iterations", rec.k),
        ("objective", rec.objective),
    ]
    _write_result(getattr(args, "result_out", None), items + list(extra))
    return STATUS_CODES[trace.status]


def cmd_complete(args):
    cfg, pc = _load_config(args)
    solver = args.solver or pc.get("solver", "lsgn")
    if solver not in SOLVERS:
        raise UsageError(f"--solver: unknown solver {solver!r}")
    inst = None
    if args.input or pc.get("input"):
        data = gio.read_matrix_market(args.input or pc["input"])
        if not isinstance(data, tuple):
            raise UsageError("--input: expected a coordinate file")
        omega, b = data
        if len(omega) == 0:
            raise UsageError("--input: no observed entries")
        r = _pick(args, pc, "r")
        prob = Problem(SelectionOperator(omega), b, r)
    else:
        m, n, r = (_pick(args, pc, k) for k in ("m", "n", "r"))
        inst = gen_mc_integer(
            m, n, r, _pick(args, pc, "fraction", 0.5), _pick(args, pc, "sigma", 0.0), cfg.seed
        )
        prob = inst.problem()
    x, trace = SOLVERS[solver](prob, init_point(prob, seed=cfg.seed), cfg)
    extra = []
    if inst is not None:
        met = evaluate(x, inst)
        extra = [("delta_f", met.delta_f), ("nmae", met.nmae), ("delta_x", met.delta_x)]
    return _finish(args, trace, extra)


def cmd_factorize(args):
    cfg, pc = _load_config(args)
    if args.max_iters is None and "max_iters" not in pc:
        cfg = replace(cfg, max_iters=min(cfg.max_iters, 200))
    cfg = replace(cfg, residual_stop=False, d_hat="zero")
    solver = args.solver or pc.get("solver", "fsgn")
    if args.input or pc.get("input"):
        b = gio.read_dense(args.input or pc["input"])
        r = _pick(args, pc, "r")
    else:
        m, n, r = (_pick(args, pc, k) for k in ("m", "n", "r"))
        if not 1 <= r <= min(m, n):
            raise UsageError("--r: must lie in [1, min(m, n)]")
        b, _, _ = gen_lowrank_clustered(m, n, r, cfg.seed)
    if solver == "fsgn":
        svd, x, trace = factorize(b, r, cfg)
    elif solver == "lsgn":
        prob = Problem(IdentityOperator(*b.shape), b.ravel(order="F"), r)
        x, trace = solve_lsgn(prob, factorization_start(*b.shape, r), cfg)
        svd = rayleigh_ritz(x.u, x.v, b)
    else:
        raise UsageError(f"--solver: unknown solver {solver!r}")
    return _finish(args, trace, [("singular_values", svd.sigma)])


def cmd_recover_l1(args):
    cfg, pc = _load_config(args)
    if args.input or pc.get("input"):
        b = gio.read_dense(args.input or pc["input"])
        r = _pick(args, pc, "r")
        low = None
    else:
        m, n, r = (_pick(args, pc, k) for k in ("m", "n", "r"))
        b, low, _ = gen_sparse_corruption(m, n, r, args.spike_fraction, args.spike, cfg.seed)
    m, n = b.shape
    if not 1 <= r <= min(m, n):
        raise UsageError("--r: must lie in [1, min(m, n)]")
    prob = Problem(IdentityOperator(m, n), b.ravel(order="F"), r)
    x, trace = solve_l1(prob, l1_start(m, n, r), cfg)
    extra = [("rho", trace.params["rho"])]
    if low is not None:
        extra.append(("low_rank_error", float(np.linalg.norm(x.u @ x.v.T - low) / np.linalg.norm(low))))
    return _finish(args, trace, extra)


def cmd_sym(args):
    cfg, pc = _load_config(args)
    if args.input or pc.get("input"):
        b = gio.read_dense(args.input or pc["input"])
        r = _pick(args, pc, "r")
    else:
        m, r = _pick(args, pc, "m"), _pick(args, pc, "r")
        b, _ = gen_symmetric(m, r, cfg.seed, indefinite=args.indefinite)
    m = b.shape[0]
    if b.shape[0] != b.shape[1]:
        raise UsageError("--input: matrix must be square")
    if not 1 <= r <= m:
        raise UsageError("--r: must lie in [1, m]")
    prob = Problem(IdentityOperator(m, m), b.ravel(order="F"), r)
    u0 = init_point(prob, seed=cfg.seed).u
    u, trace = solve_slsgn(prob, u0, cfg)
    resid = float(np.linalg.norm(u.T @ (u @ u.T - b)))
    return _finish(args, trace, [("stationarity", resid)])


def _split_out(path):
    stem, suffix = os.path.splitext(path)
    return stem, suffix or ".csv"


def cmd_sense_compare(args):
    cfg, pc = _load_config(args)
    m, n, r = (_pick(args, pc, k) for k in ("m", "n", "r"))
    ratio = _pick(args, pc, "l_ratio", 0.5, flag="l-ratio")
    iters = args.iters if args.iters is not None else (args.max_iters or 300)
    if args.repeats < 1:
        raise UsageError("--repeats: must be positive")
    l = int(round(ratio * r * (m + n)))
    if l < 1:
        raise UsageError("--l-ratio: gives no measurements")
    cfg = replace(cfg, max_iters=iters, residual_stop=False)
    kind = args.kind or pc.get("kind", "dense_gaussian")
    sigma = _pick(args, pc, "sigma", 0.0)

    def one(rep):
        inst = gen_sensing(m, n, r, l, kind, sigma, cfg.seed + rep)
        prob = inst.problem
        x0 = init_point(prob, seed=cfg.seed + rep)
        _, tf = solve_fsgn(prob, x0, cfg)
        _, ta = solve_adm(prob, x0, cfg)
        return tf, ta

    with ThreadPoolExecutor(max_workers=min(args.repeats, os.cpu_count() or 1)) as pool:
        results = list(pool.map(one, range(args.repeats)))
    if args.trace_out:
        stem, suffix = _split_out(args.trace_out)
        for rep, (tf, ta) in enumerate(results):
            tag = "" if args.repeats == 1 else f"_rep{rep}"
            tf.to_csv(f"{stem}_fsgn{tag}{suffix}", timing=args.timing)
            ta.to_csv(f"{stem}_adm{tag}{suffix}", timing=args.timing)
    extra = []
    for rep, (tf, ta) in enumerate(results):
        tag = "" if args.repeats == 1 else f"_rep{rep}"
        extra.append((f"fsgn_final{tag}", tf.records[-1].objective))
        extra.append((f"adm_final{tag}", ta.records[-1].objective))
    _write_result(args.result_out, [("l", l)] + extra)
    failed = any(t.status in ("rank_deficient", "linesearch_exhausted") for pair in results for t in pair)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_inpaint(args):
    cfg, pc = _load_config(args)
    if not args.input or not args.mask:
        raise UsageError("inpaint needs --input and --mask")
    img = gio.read_dense(args.input)
    mask = gio.read_matrix_market(args.mask)
    if not isinstance(mask, tuple):
        raise UsageError("--mask: expected a Matrix Market coordinate file")
    omega, _ = mask
    return inpaint(img, omega, args.r, args.solver or pc.get("solver", "lsgn"), args.out, cfg, args)


def inpaint(img, omega, r, solver, out_path, cfg=None, args=None):
    """Recover ``img`` from its pixels on ``omega`` at rank ``r`` and write it to ``out_path``.

    Returns the exit code.  The output is clamped to the input value range.
    """
    cfg = cfg or SolverConfig()
    if omega.shape != img.shape:
        raise UsageError(f"--mask: shape {omega.shape} does not match image {img.shape}")
    if len(omega) == 0:
        raise UsageError("--mask: no known pixels")
    if not 1 <= r <= min(img.shape):
        raise UsageError("--r: must lie in [1, min(image shape)]")
    if solver not in ("lsgn", "gn_admm"):
        raise UsageError(f"--solver: unknown solver {solver!r}")
    prob = Problem(SelectionOperator(omega), img[omega.rows, omega.cols], r)
    x, trace = SOLVERS[solver](prob, init_point(prob, seed=cfg.seed), cfg)
    rec = np.clip(x.u @ x.v.T, img.min(), img.max())
    if out_path.endswith(".csv"):
        gio.write_dense_csv(out_path, rec)
    else:
        gio.write_matrix_market(out_path, rec)
    if args is not None:
        return _finish(args, trace)
    return STATUS_CODES[trace.status]


def cmd_selftest(args):
    return 1 if selftest.run(seed=args.seed) else 0


COMMANDS = {
    "complete": cmd_complete,
    "factorize": cmd_factorize,
    "recover-l1": cmd_recover_l1,
    "sym": cmd_sym,
    "sense-compare": cmd_sense_compare,
    "inpaint": cmd_inpaint,
    "selftest": cmd_selftest,
}


def run(argv=None):
    """Parse ``argv`` and execute one subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ParseError, OSError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LowRankError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
