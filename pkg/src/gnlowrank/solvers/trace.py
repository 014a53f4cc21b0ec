"""Per-iteration records and their CSV form."""

import math
from dataclasses import dataclass, field

import numpy as np

CSV_COLUMNS = ("k", "objective", "grad_norm", "alpha", "linesearch", "feasibility", "lagrangian", "wall_ms")

STATUSES = ("converged", "max_iters", "rank_deficient", "linesearch_exhausted")


@dataclass
class IterationRecord:
    """State at iterate k plus the step taken from it.

    ``alpha`` is NaN on the terminal record (no step taken).  Solver-specific
    diagnostics go in ``extras``.
    """

    k: int
    objective: float
    grad_norm: float = math.nan
    alpha: float = math.nan
    linesearch: int = 0
    feasibility: float = math.nan
    lagrangian: float = math.nan
    wall_ms: float = 0.0
    extras: dict = field(default_factory=dict)


@dataclass
class IterationTrace:
    solver: str
    records: list = field(default_factory=list)
    status: str = "max_iters"
    stop_rule: str = ""
    params: dict = field(default_factory=dict)

    def append(self, record):
        if self.records and record.k <= self.records[-1].k:
            raise ValueError("iteration counter must increase")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        if name in CSV_COLUMNS:
            return np.array([getattr(r, name) for r in self.records], dtype=float)
        return np.array([r.extras.get(name, math.nan) for r in self.records], dtype=float)

    @property
    def objectives(self):
        return self.column("objective")

    @property
    def converged(self):
        return self.status == "converged"

    def to_csv(self, path, timing=True):
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for rec in self.records:
                row = [str(rec.k)]
                for name in CSV_COLUMNS[1:]:
                    val = getattr(rec, name)
                    if name == "wall_ms" and not timing:
                        val = 0.0
                    row.append(str(int(val)) if name == "linesearch" else _fmt(val))
                fh.write(",".join(row) + "\n")
            fh.write(f"#status={self.status},stop_rule={self.stop_rule or 'none'},solver={self.solver}\n")

    @classmethod
    def from_csv(cls, path):
        trace = cls(solver="")
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != CSV_COLUMNS:
                raise ValueError(f"unexpected trace header {header}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#status="):
                    meta = dict(item.split("=", 1) for item in line[1:].split(","))
                    trace.status = meta.get("status", "")
                    trace.stop_rule = "" if meta.get("stop_rule") == "none" else meta.get("stop_rule", "")
                    trace.solver = meta.get("solver", "")
                    continue
                vals = line.split(",")
                trace.records.append(
                    IterationRecord(
                        k=int(vals[0]),
                        objective=float(vals[1]),
                        grad_norm=float(vals[2]),
                        alpha=float(vals[3]),
                        linesearch=int(vals[4]),
                        feasibility=float(vals[5]),
                        lagrangian=float(vals[6]),
                        wall_ms=float(vals[7]),
                    )
                )
        return trace


def _fmt(x):
    return format(float(x), ".17g")
