"""Mesh and field export: legacy ASCII VTK and CSV, written atomically."""

import csv
import io
import os
from pathlib import Path
import tempfile

import numpy as np

from .basis import tri_basis


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def evaluate_interior(mesh, coefs, k, pts):
    """Evaluate the piecewise P_k field with nodal ``coefs`` (nT, dim P_k) at ``pts``.

    Each point is assigned to one closed triangle containing it; on shared
    edges and nodes the choice follows ``mesh.locate``.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    t = mesh.locate(pts)
    v = mesh.nodes[mesh.triangles[t]]
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
    ref = np.linalg.solve(J, (pts - v[:, 0])[..., None])[..., 0]
    phi = tri_basis(k).ref_derivative(ref, 0, 0)
    return np.einsum("pn,pn->p", phi, coefs[t])


def sample_grid(n=101):
    s = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(s, s, indexing="xy")
    return X, Y


def sample_solution(mesh, coefs, k, n=101, exact=None):
    """u0 (and the exact u when given) on a uniform n x n grid, rows ordered by y."""
    X, Y = sample_grid(n)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    out = {"x": pts[:, 0], "y": pts[:, 1], "u_h": evaluate_interior(mesh, coefs, k, pts)}
    if exact is not None:
        out["u_exact"] = np.asarray(exact(pts[:, 0], pts[:, 1]), dtype=float)
    return out


def _fmt(a):
    return [f"{v:.12e}" for v in a]


def samples_csv(samples):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = list(samples)
    w.writerow(cols)
    for row in zip(*(_fmt(samples[c]) for c in cols)):
        w.writerow(row)
    return buf.getvalue()


def samples_vtk(samples, n, title="wg solution"):
    h = 1.0 / (n - 1)
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {n} {n} 1",
        "ORIGIN 0 0 0",
        f"SPACING {h:.17g} {h:.17g} 1",
        f"POINT_DATA {n * n}",
    ]
    for name in samples:
        if name in ("x", "y"):
            continue
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += _fmt(samples[name])
    return "\n".join(lines) + "\n"


def mesh_vtk(mesh, title="shishkin mesh"):
    nodes, tris = mesh.nodes, mesh.triangles
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {len(nodes)} double",
    ]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in nodes]
    lines.append(f"POLYGONS {len(tris)} {4 * len(tris)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in tris]
    lines += [f"CELL_DATA {len(tris)}", "SCALARS region int 1", "LOOKUP_TABLE default"]
    lines += [str(int(r)) for r in mesh.region]
    return "\n".join(lines) + "\n"


def mesh_csv(mesh):
    """One row per triangle: index, the three vertex coordinates and the region tag."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["triangle", "x0", "y0", "x1", "y1", "x2", "y2", "region"])
    v = mesh.nodes[mesh.triangles]
    for t in range(mesh.n_triangles):
        w.writerow([t, *(f"{c:.17g}" for c in v[t].ravel()), int(mesh.region[t])])
    return buf.getvalue()


def _with_ext(stem, ext):
    stem = Path(stem)
    return stem.parent / (stem.name + ext)


def export_mesh(mesh, stem):
    """Write ``stem.vtk`` and ``stem.csv``; returns the two paths."""
    return (write_atomic(_with_ext(stem, ".vtk"), mesh_vtk(mesh)),
            write_atomic(_with_ext(stem, ".csv"), mesh_csv(mesh)))


def export_solution(mesh, coefs, k, stem, n=101, exact=None):
    """Sample u0 on an n x n grid and write ``stem.csv`` and ``stem.vtk``."""
    s = sample_solution(mesh, coefs, k, n, exact)
    return (write_atomic(_with_ext(stem, ".csv"), samples_csv(s)),
            write_atomic(_with_ext(stem, ".vtk"), samples_vtk(s, n)))
