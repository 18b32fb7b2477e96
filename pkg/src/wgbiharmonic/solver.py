"""Sparse SPD solves for the reduced WG system.

The layer penalties spread the diagonal of the reduced matrix over some
sixteen orders of magnitude, so the raw residual of the best double-precision
solution is bounded below by roughly ``u * || |A| |x| || / ||b||``.  Both
methods therefore work on the symmetrically equilibrated system
``D A D y = D b`` with ``D = diag(A)^(-1/2)``, which is a rescaling of the
basis and leaves the discrete solution unchanged.  The tolerance applies to
that system; the raw residual is reported alongside.
"""

from dataclasses import asdict, dataclass
import logging
import math
import time

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

METHODS = ("cholesky", "cg")


class SolverError(RuntimeError):
    """Raised when a solve breaks down or the matrix is detectably not SPD."""


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    wall_time: float
    min_pivot: float = None
    raw_residual: float = None

    def as_dict(self, timing=True):
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return d


def relative_residual(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return 0.0 if nb == 0.0 and r == 0.0 else r / (nb if nb > 0 else 1.0)


def equilibrate(A):
    """Return ``(D A D, d)`` with ``d = diag(A)^(-1/2)``; rejects non-positive diagonals."""
    A = sps.csr_matrix(A)
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        i = int(np.argmin(diag))
        raise SolverError(f"matrix is not SPD: diagonal entry {i} is {diag[i]:.3e}")
    d = 1.0 / np.sqrt(diag)
    D = sps.diags(d)
    return (D @ A @ D).tocsc(), d


def solve_direct(A, b, tol=0.0, refine=3):
    """Symmetric-mode sparse LU; the pivots are the LDL^T diagonal, so SPD means all positive.

    A few steps of iterative refinement reuse the factors while the residual
    still improves and exceeds ``tol``.  Returns ``(x, min_pivot, steps)``.
    """
    A = sps.csc_matrix(A)
    lu = spla.splu(
        A,
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options=dict(SymmetricMode=True),
    )
    piv = lu.U.diagonal()
    min_pivot = float(piv.min()) if len(piv) else math.inf
    if np.array_equal(lu.perm_r, lu.perm_c) and min_pivot <= 0.0:
        raise SolverError(f"matrix is not SPD: smallest pivot {min_pivot:.3e}")
    x = lu.solve(b)
    res = relative_residual(A, x, b)
    steps = 0
    while res > tol and steps < refine:
        x_new = x + lu.solve(b - A @ x)
        res_new = relative_residual(A, x_new, b)
        steps += 1
        if res_new >= res:
            break
        x, res = x_new, res_new
    return x, min_pivot, steps


def solve_cg(A, b, tol, maxiter=None):
    """Conjugate gradients; on an equilibrated matrix this is Jacobi-preconditioned CG."""
    A = sps.csr_matrix(A)
    if maxiter is None:
        maxiter = int(50 * math.sqrt(A.shape[0])) + 1
    its = 0

    def count(_):
        nonlocal its
        its += 1

    x, info = spla.cg(A, b, rtol=tol, atol=0.0, maxiter=maxiter, callback=count)
    if info < 0:
        raise SolverError(f"CG breakdown (info={info})")
    return x, its, info


def solve(A, b, tol=1e-10, method="cholesky"):
    """Solve A x = b for sparse SPD ``A``; returns (x, SolveReport).

    ``method`` is "cholesky" (direct) or "cg" (Jacobi-preconditioned CG).
    """
    if method not in METHODS:
        raise ValueError(f"unknown solver method {method!r}; choose from {METHODS}")
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != len(b):
        raise ValueError(f"dimension mismatch: A {A.shape}, b {b.shape}")
    t0 = time.perf_counter()
    if not np.any(b):
        return np.zeros_like(b), SolveReport(method, 0, 0.0, time.perf_counter() - t0, None, 0.0)
    As, d = equilibrate(A)
    bs = d * b
    if method == "cholesky":
        y, min_pivot, its = solve_direct(As, bs, tol)
    else:
        y, its, info = solve_cg(As, bs, tol)
        min_pivot = None
    x = d * y
    res = relative_residual(As, y, bs)
    report = SolveReport(method, its, res, time.perf_counter() - t0, min_pivot,
                         relative_residual(A, x, b))
    if not np.all(np.isfinite(x)) or res > tol:
        raise SolverError(
            f"{method}: relative residual {res:.3e} exceeds tolerance {tol:.1e}"
            + (f" after {its} iterations" if method == "cg" else "")
        )
    return x, report
