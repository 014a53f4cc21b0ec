"""File formats: Matrix Market, dense CSV, trace CSV and key=value run configs.

Every float is written with 17 significant digits so values round-trip
exactly.
"""

import csv
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import DuplicateEntry, OutOfBounds, ParseError, ValidationError
from .gn_direction import FactorPair
from .operators import IndexSet
from .problems import McInstance
from .solvers.config import SolverConfig
from .solvers.trace import IterationTrace

FLOAT_FMT = "%.17g"
MM_BANNER = "%%MatrixMarket"


def _fmt(x):
    return FLOAT_FMT % x


# ---------------------------------------------------------------- Matrix Market


def _parse_number(tok, lineno, kind=float):
    try:
        val = kind(tok)
    except ValueError:
        raise ParseError(f"cannot parse {tok!r} as {kind.__name__}", lineno) from None
    if kind is float and not math.isfinite(val):
        raise ParseError(f"non-finite value {tok!r}", lineno)
    return val


def _data_lines(lines, start):
    """Yield (1-based line number, tokens) for non-comment, non-blank lines."""
    for i in range(start, len(lines)):
        s = lines[i].strip()
        if not s or s.startswith("%"):
            continue
        yield i + 1, s.split()


def read_matrix_market(path):
    """Read a real general Matrix Market file.

    Returns ``(IndexSet, values)`` for coordinate files (``pattern`` files get
    unit values) and a dense array for array files.  File indices are
    1-based; the returned IndexSet is 0-based and sorted.

    Raises:
        ParseError: malformed header, size line or entry (with line number).
        DuplicateEntry: the same position listed twice.
        OutOfBounds: an index outside the declared shape.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0] != MM_BANNER or head[1].lower() != "matrix":
        raise ParseError("expected '%%MatrixMarket matrix <format> <field> general'", 1)
    fmt, fld, sym = (t.lower() for t in head[2:])
    if fmt not in ("coordinate", "array"):
        raise ParseError(f"unsupported format {fmt!r}", 1)
    if sym != "general":
        raise ParseError(f"unsupported symmetry {sym!r}", 1)
    allowed = ("real", "integer", "pattern") if fmt == "coordinate" else ("real", "integer")
    if fld not in allowed:
        raise ParseError(f"unsupported field {fld!r} for {fmt} format", 1)
    body = _data_lines(lines, 1)
    try:
        lineno, size = next(body)
    except StopIteration:
        raise ParseError("missing size line", len(lines)) from None
    want = 3 if fmt == "coordinate" else 2
    if len(size) != want:
        raise ParseError(f"size line needs {want} integers", lineno)
    dims = [_parse_number(t, lineno, int) for t in size]
    if any(d < 0 for d in dims):
        raise ParseError("negative size", lineno)
    m, n = dims[0], dims[1]
    if fmt == "array":
        vals = []
        for lineno, toks in body:
            if len(toks) != 1:
                raise ParseError("array entries need exactly one value per line", lineno)
            if len(vals) == m * n:
                raise ParseError(f"more than {m * n} entries", lineno)
            vals.append(_parse_number(toks[0], lineno))
        if len(vals) != m * n:
            raise ParseError(f"expected {m * n} entries, found {len(vals)}", len(lines))
        return np.array(vals, dtype=np.float64).reshape((m, n), order="F")
    nnz = dims[2]
    per = 2 if fld == "pattern" else 3
    rows, cols, vals, seen = [], [], [], {}
    for lineno, toks in body:
        if len(toks) != per:
            raise ParseError(f"entry needs {per} fields", lineno)
        if len(rows) == nnz:
            raise ParseError(f"more than {nnz} entries", lineno)
        i = _parse_number(toks[0], lineno, int)
        j = _parse_number(toks[1], lineno, int)
        if not (1 <= i <= m and 1 <= j <= n):
            raise OutOfBounds(f"index ({i}, {j}) outside {m}x{n}", lineno)
        key = (i - 1, j - 1)
        if key in seen:
            raise DuplicateEntry(f"entry ({i}, {j}) already given on line {seen[key]}", lineno)
        seen[key] = lineno
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(1.0 if fld == "pattern" else _parse_number(toks[2], lineno))
    if len(rows) != nnz:
        raise ParseError(f"expected {nnz} entries, found {len(rows)}", len(lines))
    rows = np.array(rows, dtype=np.int64)
    cols = np.array(cols, dtype=np.int64)
    order = np.lexsort((cols, rows))
    return IndexSet((m, n), rows[order], cols[order]), np.array(vals, dtype=np.float64)[order]


def write_matrix_market(path, data, comments=()):
    """Write ``(IndexSet, values)`` in coordinate format or a dense array in array format."""
    out = []
    if isinstance(data, tuple):
        omega, values = data
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if values.size != len(omega):
            raise ValueError("values and index set differ in length")
        out.append(f"{MM_BANNER} matrix coordinate real general")
        out.extend(f"% {c}" for c in comments)
        m, n = omega.shape
        out.append(f"{m} {n} {len(omega)}")
        for (i, j), x in zip(omega, values.tolist()):
            out.append(f"{i + 1} {j + 1} {_fmt(x)}")
    else:
        mat = np.asarray(data, dtype=np.float64)
        if mat.ndim != 2:
            raise ValueError("dense data must be two-dimensional")
        out.append(f"{MM_BANNER} matrix array real general")
        out.extend(f"% {c}" for c in comments)
        out.append(f"{mat.shape[0]} {mat.shape[1]}")
        out.extend(_fmt(x) for x in mat.ravel(order="F").tolist())
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def read_mm_comments(path):
    """Comment lines (without the leading '%') of a Matrix Market file."""
    with open(path) as fh:
        return [ln[1:].strip() for ln in fh.read().splitlines()[1:] if ln.startswith("%")]


# ---------------------------------------------------------------- dense CSV


def write_dense_csv(path, mat):
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError("dense data must be two-dimensional")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in mat.tolist():
            w.writerow([_fmt(x) for x in row])


def read_dense_csv(path):
    """Read a comma-separated dense matrix; every row must have the same length."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            vals = [_parse_number(c.strip(), lineno) for c in row]
            if rows and len(vals) != len(rows[0]):
                raise ParseError(f"row has {len(vals)} values, expected {len(rows[0])}", lineno)
            rows.append(vals)
    if not rows:
        raise ParseError("no data rows", 1)
    return np.array(rows, dtype=np.float64)


def read_dense(path):
    """Dense matrix from a Matrix Market array file or a CSV file."""
    with open(path) as fh:
        first = fh.readline()
    if first.startswith(MM_BANNER):
        data = read_matrix_market(path)
        if isinstance(data, tuple):
            omega, vals = data
            mat = np.zeros(omega.shape)
            mat[omega.rows, omega.cols] = vals
            return mat
        return data
    return read_dense_csv(path)


# ---------------------------------------------------------------- traces


def write_trace(path, trace, timing=True):
    trace.to_csv(path, timing=timing)


def read_trace(path):
    return IterationTrace.from_csv(path)


# ---------------------------------------------------------------- run config

PROBLEM_KEYS = {
    "generator": str,
    "m": int,
    "n": int,
    "r": int,
    "l": int,
    "l_ratio": float,
    "fraction": float,
    "sigma": float,
    "density": float,
    "kind": str,
    "solver": str,
    "input": str,
    "mask": str,
    "trace_out": str,
    "result_out": str,
}


def _solver_types():
    out = {}
    for f in fields(SolverConfig):
        default = f.default
        if f.name == "rho":
            out[f.name] = "rho"
        elif isinstance(default, bool):
            out[f.name] = bool
        elif isinstance(default, int):
            out[f.name] = int
        elif isinstance(default, float):
            out[f.name] = float
        else:
            out[f.name] = str
    return out


SOLVER_TYPES = _solver_types()


@dataclass
class RunConfig:
    """Solver settings plus problem selection and output paths."""

    solver: SolverConfig = field(default_factory=SolverConfig)
    problem: dict = field(default_factory=dict)

    def __post_init__(self):
        for key in self.problem:
            if key not in PROBLEM_KEYS:
                raise ValidationError(key, "unknown key")

    def get(self, key, default=None):
        return self.problem.get(key, default)


def _convert(key, kind, text, lineno):
    try:
        if kind == "rho":
            return None if text.lower() == "auto" else float(text)
        if kind is bool:
            low = text.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ValidationError(key, f"line {lineno}: cannot parse {text!r}") from None


def parse_config(text):
    solver_kw, problem = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key=value", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno)
        if key in solver_kw or key in problem:
            raise ParseError(f"key {key!r} repeated", lineno)
        if key in SOLVER_TYPES:
            solver_kw[key] = _convert(key, SOLVER_TYPES[key], val, lineno)
        elif key in PROBLEM_KEYS:
            problem[key] = _convert(key, PROBLEM_KEYS[key], val, lineno)
        else:
            raise ValidationError(key, f"line {lineno}: unknown key")
    return RunConfig(SolverConfig(**solver_kw), problem)


def read_config(path):
    """Parse a key=value file (``#`` starts a comment); missing keys take defaults.

    Raises:
        ParseError: a line without ``=`` or a repeated key.
        ValidationError: unknown key or out-of-range value, naming the key.
    """
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(cfg):
    out = []
    for name in SolverConfig.field_names():
        val = getattr(cfg.solver, name)
        if val is None:
            text = "auto"
        elif isinstance(val, bool):
            text = "true" if val else "false"
        elif isinstance(val, float):
            text = _fmt(val)
        else:
            text = str(val)
        out.append(f"{name}={text}")
    for name in PROBLEM_KEYS:
        if name in cfg.problem and cfg.problem[name] is not None:
            val = cfg.problem[name]
            out.append(f"{name}={_fmt(val) if isinstance(val, float) else val}")
    return "\n".join(out) + "\n"


def write_config(path, cfg):
    with open(path, "w", newline="\n") as fh:
        fh.write(format_config(cfg))


def merge_solver(cfg, **overrides):
    """SolverConfig with non-None overrides applied."""
    kw = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **kw) if kw else cfg


# ---------------------------------------------------------------- MC instances


def save_mc_instance(stem, inst):
    """Write ``{stem}_obs.mtx`` (observations), ``{stem}_u.csv`` and ``{stem}_v.csv``."""
    write_matrix_market(f"{stem}_obs.mtx", (inst.omega, inst.b), comments=[f"noise_sigma={_fmt(inst.noise_sigma)}"])
    write_dense_csv(f"{stem}_u.csv", inst.ground_truth.u)
    write_dense_csv(f"{stem}_v.csv", inst.ground_truth.v)
    return [f"{stem}_obs.mtx", f"{stem}_u.csv", f"{stem}_v.csv"]


def load_mc_instance(stem):
    omega, b = read_matrix_market(f"{stem}_obs.mtx")
    sigma = 0.0
    for c in read_mm_comments(f"{stem}_obs.mtx"):
        if c.startswith("noise_sigma="):
            sigma = float(c.split("=", 1)[1])
    u = read_dense_csv(f"{stem}_u.csv")
    v = read_dense_csv(f"{stem}_v.csv")
    return McInstance(FactorPair(u, v), omega, b, sigma)
