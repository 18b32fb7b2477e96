"""Command-line driver: convergence sweeps, reports and field export.

Example::

    wgbiharmonic --problem example1 --k 2 --N 4,8,16,32 --eps2 1e-6,1e-10 \\
        --out results --format table,csv,json
"""

import argparse
from dataclasses import asdict, dataclass, field
import io
import json
import logging
import math
from pathlib import Path
import sys

from . import __version__
from ._validation import SUPPORTED_DEGREES, check_doubling
from .estimator import WeakGalerkinBiharmonic
from .export import export_mesh, export_solution, write_atomic
from .norms import convergence_orders
from .problems import PROBLEMS, get_problem
from .solver import METHODS

log = logging.getLogger("wgbiharmonic")

SCHEMA_VERSION = 1
FORMATS = ("csv", "json", "vtk", "table")
MODES = ("discrete", "exact")
# errors below this are reported as reproduced exactly (patch problems)
EXACT_FLOOR = 1e-8


@dataclass
class RunConfig:
    problem: str = "example1"
    k: int = 2
    N: list = field(default_factory=lambda: [4, 8, 16, 32, 64])
    eps2: list = field(default_factory=lambda: [1e-6, 1e-10])
    lam: float = None
    boundary: str = None
    solver: str = "cholesky"
    tol: float = 1e-10
    quad_tri_degree: int = None
    quad_edge_points: int = None
    out: str = None
    formats: list = field(default_factory=lambda: ["table"])
    grid: int = 101
    dump_matrix: bool = False

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.k not in SUPPORTED_DEGREES:
            raise ValueError(f"k must be one of {SUPPORTED_DEGREES}")
        self.N = check_doubling(self.N)
        if any(n < 4 or n % 4 for n in self.N):
            raise ValueError(f"N entries must be positive multiples of 4, got {self.N}")
        if any(not 0.0 < e <= 1.0 for e in self.eps2):
            raise ValueError(f"eps2 entries must lie in (0, 1], got {self.eps2}")
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ValueError(f"unknown output formats {sorted(bad)}; choose from {FORMATS}")
        if self.solver not in METHODS:
            raise ValueError(f"solver must be one of {METHODS}")
        if self.out is None and set(self.formats) - {"table"}:
            raise ValueError("--out is required for csv, json and vtk output")

    @property
    def lam_value(self):
        return float(self.k + 1 if self.lam is None else self.lam)


@dataclass
class CellResult:
    eps2: float
    N: int
    status: str
    n_dofs: int = None
    errors: dict = None     # mode -> ErrorBreakdown as dict
    solver: dict = None
    message: str = None


def _problem(config, eps2):
    kw = {} if config.boundary is None else {"boundary": config.boundary}
    return get_problem(config.problem, math.sqrt(eps2), **kw)


def _tag(config, eps2, N):
    return f"{config.problem}_k{config.k}_eps2_{eps2:g}_N{N}"


def run_cell(config, eps2, N):
    """Solve one (eps2, N) cell and measure both error modes."""
    problem = _problem(config, eps2)
    est = WeakGalerkinBiharmonic(
        k=config.k, N=N, lam=config.lam_value, quad_tri_degree=config.quad_tri_degree,
        quad_edge_points=config.quad_edge_points, solver=config.solver, tol=config.tol,
    ).fit(problem)
    errors = {}
    if problem.exact is not None:
        errors = {m: est.error(m).as_dict() for m in MODES}
    if config.out is not None:
        out = Path(config.out)
        tag = _tag(config, eps2, N)
        if "vtk" in config.formats:
            export_mesh(est.mesh_, out / f"{tag}_mesh")
            exact = problem.exact.u if problem.exact is not None else None
            export_solution(est.mesh_, est.interior_coef_, config.k, out / f"{tag}_solution",
                            n=config.grid, exact=exact)
        if config.dump_matrix:
            out.mkdir(parents=True, exist_ok=True)
            est.system_.dump(out / f"{tag}_matrix.mtx")
    return CellResult(eps2, N, "ok", est.n_dofs_, errors, est.solve_report_.as_dict(timing=False))


def run_sweep(config):
    """Run every (eps2, N) cell in config order; failures are recorded, not raised."""
    cells = []
    for eps2 in config.eps2:
        for N in config.N:
            log.info("solving %s k=%d eps2=%g N=%d", config.problem, config.k, eps2, N)
            try:
                cells.append(run_cell(config, eps2, N))
            except Exception as exc:  # keep going; the summary reports it
                msg = f"{type(exc).__name__}: {exc} (eps={math.sqrt(eps2):.3e}, N={N}, k={config.k})"
                log.error("cell failed: %s", msg)
                cells.append(CellResult(eps2, N, "failed", message=msg))
    return cells


def _orders(cells, eps2, mode):
    """Order for each N (None for the first row or after a gap)."""
    rows = [c for c in cells if c.eps2 == eps2]
    out = {}
    for prev, cur in zip(rows, rows[1:]):
        if prev.status != "ok" or cur.status != "ok" or not cur.errors:
            continue
        e1, e2 = prev.errors[mode]["total"], cur.errors[mode]["total"]
        if e1 < EXACT_FLOOR and e2 < EXACT_FLOOR:
            out[cur.N] = "exact"
        else:
            out[cur.N] = convergence_orders([(prev.N, e1), (cur.N, e2)])[0]
    return out


def _fmt_order(o):
    if o is None:
        return "-"
    return o if isinstance(o, str) else f"{o:.3f}"


def format_table(config, cells):
    """Plain-text table: one row per N, error and order per eps2 and norm mode."""
    heads = []
    for eps2 in config.eps2:
        heads += [f"|||I_h u-u_N||| eps2={eps2:g}", "order", f"|||u-u_N||| eps2={eps2:g}", "order"]
    orders = {(e, m): _orders(cells, e, m) for e in config.eps2 for m in MODES}
    lookup = {(c.eps2, c.N): c for c in cells}
    rows = []
    for N in config.N:
        row = [str(N)]
        for eps2 in config.eps2:
            c = lookup.get((eps2, N))
            for m in MODES:
                if c is None or c.status != "ok" or not c.errors:
                    row += ["failed" if c is not None and c.status != "ok" else "n/a", "-"]
                else:
                    row += [f"{c.errors[m]['total']:.5e}", _fmt_order(orders[eps2, m].get(N))]
        rows.append(row)
    widths = [max(len(h), *(len(r[i + 1]) for r in rows)) for i, h in enumerate(heads)]
    title = (f"{config.problem}  k={config.k}  lambda={config.lam_value:g}  "
             f"solver={config.solver}")
    lines = [title, "  N  " + "  ".join(h.rjust(w) for h, w in zip(heads, widths))]
    for r in rows:
        lines.append(r[0].rjust(3) + "  " + "  ".join(v.rjust(w) for v, w in zip(r[1:], widths)))
    return "\n".join(lines) + "\n"


def format_csv(config, cells):
    buf = io.StringIO()
    cols = ["problem", "k", "eps2", "N", "status", "n_dofs"]
    for m in MODES:
        cols += [f"{m}_{p}" for p in ("laplacian", "gradient", "reaction", "stabilizer", "total")]
        cols.append(f"{m}_order")
    cols += ["energy", "residual"]
    buf.write(",".join(cols) + "\n")
    orders = {(e, m): _orders(cells, e, m) for e in config.eps2 for m in MODES}
    for c in cells:
        row = [config.problem, str(config.k), f"{c.eps2:.6e}", str(c.N), c.status,
               "" if c.n_dofs is None else str(c.n_dofs)]
        for m in MODES:
            b = (c.errors or {}).get(m)
            if b is None:
                row += [""] * 6
                continue
            row += [f"{b[p]:.10e}" for p in ("laplacian", "gradient", "reaction", "stabilizer", "total")]
            o = orders[c.eps2, m].get(c.N)
            row.append("" if o is None else (o if isinstance(o, str) else f"{o:.6f}"))
        energy = (c.errors or {}).get("discrete", {}).get("energy")
        row.append("" if energy is None else f"{energy:.10e}")
        row.append("" if c.solver is None else f"{c.solver['residual']:.3e}")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def format_json(config, cells):
    orders = {m: {f"{e:g}": {str(n): o for n, o in _orders(cells, e, m).items()}
                  for e in config.eps2} for m in MODES}
    doc = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": {k: v for k, v in asdict(config).items() if k not in ("out",)},
        "lambda": config.lam_value,
        "cells": [asdict(c) for c in cells],
        "orders": orders,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_reports(config, cells):
    """Emit the requested reports; returns the table text (also printed by ``main``)."""
    table = format_table(config, cells)
    if config.out is not None:
        out = Path(config.out)
        stem = f"{config.problem}_k{config.k}"
        if "table" in config.formats:
            write_atomic(out / f"{stem}_table.txt", table)
        if "csv" in config.formats:
            write_atomic(out / f"{stem}_convergence.csv", format_csv(config, cells))
        if "json" in config.formats:
            write_atomic(out / f"{stem}_convergence.json", format_json(config, cells))
    return table


def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _formats(s):
    return [v.strip() for v in s.split(",") if v.strip()]


def build_parser():
    p = argparse.ArgumentParser(
        prog="wgbiharmonic",
        description="Weak Galerkin convergence sweeps for eps^2 Lap^2 u - Lap u + a u = g "
                    "on Shishkin meshes.",
    )
    p.add_argument("--problem", default="example1", choices=sorted(PROBLEMS))
    p.add_argument("--k", type=int, default=2, choices=SUPPORTED_DEGREES)
    p.add_argument("--N", type=_ints, default=[4, 8, 16, 32, 64],
                   help="comma-separated, doubling multiples of 4 (default 4,8,16,32,64)")
    p.add_argument("--eps2", type=_floats, default=[1e-6, 1e-10],
                   help="comma-separated values of eps^2 (default 1e-6,1e-10)")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="mesh transition constant (default k+1)")
    p.add_argument("--boundary", choices=("exact", "homogeneous"), default=None,
                   help="boundary data for u_b, u_g (default: the problem's own)")
    p.add_argument("--solver", choices=METHODS, default="cholesky")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--quad-tri-degree", type=int, default=None)
    p.add_argument("--quad-edge-points", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--format", dest="formats", type=_formats, default=["table"],
                   help=f"comma-separated subset of {','.join(FORMATS)} (default table)")
    p.add_argument("--grid", type=int, default=101, help="samples per direction for vtk export")
    p.add_argument("--dump-matrix", action="store_true",
                   help="write each reduced matrix in MatrixMarket format")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    opts = vars(args)
    opts.pop("verbose")
    try:
        config = RunConfig(**opts)
    except ValueError as exc:
        print(f"wgbiharmonic: error: {exc}", file=sys.stderr)
        return 2
    cells = run_sweep(config)
    table = write_reports(config, cells)
    sys.stdout.write(table)
    failed = [c for c in cells if c.status != "ok"]
    if failed:
        print(f"{len(failed)} of {len(cells)} cells failed:", file=sys.stderr)
        for c in failed:
            print(f"  eps2={c.eps2:g} N={c.N}: {c.message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
