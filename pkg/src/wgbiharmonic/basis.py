"""Polynomial bases, quadrature rules and local interpolation on triangles and edges.

Everything element-local goes through an affine map from the reference
triangle with vertices (0, 0), (1, 0), (0, 1).  Triangle bases are nodal
(Lagrange) on the principal lattice; edge bases are shifted Legendre
polynomials in the edge parameter ``t in [0, 1]``.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial import legendre
from scipy.linalg import cho_factor, cho_solve
from scipy.special import roots_jacobi

MAX_TRI_DEGREE = 40


@dataclass(frozen=True)
class QuadRule:
    """Quadrature rule on a reference domain.

    ``points`` has shape (n, 2) on the reference triangle and (n,) on the
    reference interval [0, 1].  ``weights`` sum to the reference measure.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def tri_quadrature(degree):
    """Positive-weight rule on the reference triangle exact for P_degree.

    Collapsed (Duffy) tensor rule: Gauss-Legendre in the collapsed direction
    times Gauss-Jacobi(1, 0) across it.
    """
    degree = int(degree)
    if degree < 1 or degree > MAX_TRI_DEGREE:
        raise ValueError(f"unsupported triangle quadrature degree {degree}")
    n = (degree + 2) // 2
    s, ws = legendre.leggauss(n)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    u, wu = roots_jacobi(n, 1.0, 0.0)
    t = 0.5 * (u + 1.0)
    wt = 0.25 * wu
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws, wt)
    pts = np.column_stack([(S * (1.0 - T)).ravel(), T.ravel()])
    rule = QuadRule(pts, W.ravel(), degree)
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


@lru_cache(maxsize=None)
def edge_quadrature(npts):
    """Gauss-Legendre rule with ``npts`` points on [0, 1]."""
    npts = int(npts)
    if npts < 1:
        raise ValueError("npts must be >= 1")
    x, w = legendre.leggauss(npts)
    rule = QuadRule(0.5 * (x + 1.0), 0.5 * w, 2 * npts - 1)
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def dim_pk(k):
    return (k + 1) * (k + 2) // 2


def monomial_exponents(k):
    return [(a, d - a) for d in range(k + 1) for a in range(d, -1, -1)]


def lattice_nodes(k):
    """Principal lattice of degree ``k`` on the reference triangle.

    Degree 0 uses the centroid.  Ordering: vertices, then edge nodes
    (edge v0-v1, v1-v2, v2-v0), then interior nodes.
    """
    if k == 0:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]])
    verts = [(0, 0), (k, 0), (0, k)]
    pts = list(verts)
    for (i0, j0), (i1, j1) in [(verts[0], verts[1]), (verts[1], verts[2]), (verts[2], verts[0])]:
        for m in range(1, k):
            pts.append((i0 + (i1 - i0) * m // k, j0 + (j1 - j0) * m // k))
    for j in range(1, k):
        for i in range(1, k - j):
            pts.append((i, j))
    return np.array(pts, dtype=float) / k


def _falling(n, r):
    out = 1
    for i in range(r):
        out *= n - i
    return out


class TriBasis:
    """Lagrange basis of P_k on the reference triangle.

    Stored as monomial coefficients ``coef`` with shape (n_mono, dim) so that
    ``basis_j(xi) = sum_m coef[m, j] * xi**a_m * eta**b_m``.
    """

    def __init__(self, degree):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        self.degree = degree
        self.dim = dim_pk(degree)
        self.exponents = monomial_exponents(degree)
        self.nodes = lattice_nodes(degree)
        V = self._monomials(self.nodes, 0, 0)
        self.coef = np.linalg.solve(V, np.eye(self.dim))

    def __repr__(self):
        return f"TriBasis(degree={self.degree})"

    def _monomials(self, pts, dx, dy):
        xi = pts[:, 0][:, None]
        eta = pts[:, 1][:, None]
        out = np.empty((len(pts), len(self.exponents)))
        for m, (a, b) in enumerate(self.exponents):
            if a < dx or b < dy:
                out[:, m] = 0.0
                continue
            c = _falling(a, dx) * _falling(b, dy)
            out[:, m] = c * xi[:, 0] ** (a - dx) * eta[:, 0] ** (b - dy)
        return out

    def ref_derivative(self, pts, dx, dy):
        """Reference-coordinate derivative d^{dx}_xi d^{dy}_eta of every basis function."""
        return self._monomials(np.atleast_2d(pts), dx, dy) @ self.coef

    def ref_tabulate(self, pts, order=1):
        """Reference derivative tensors up to ``order`` (max 3).

        Returns a list ``[val, d1, d2, d3]`` truncated at ``order``, with shapes
        (nq, n), (nq, n, 2), (nq, n, 2, 2), (nq, n, 2, 2, 2).
        """
        pts = np.atleast_2d(pts)
        out = [self.ref_derivative(pts, 0, 0)]
        for r in range(1, order + 1):
            shape = (len(pts), self.dim) + (2,) * r
            T = np.empty(shape)
            for idx in np.ndindex(*(2,) * r):
                dy = sum(idx)
                T[(Ellipsis,) + idx] = self.ref_derivative(pts, r - dy, dy)
            out.append(T)
        return out


@lru_cache(maxsize=None)
def tri_basis(degree):
    return TriBasis(degree)


class Triangle:
    """Affine image of the reference triangle."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.shape != (3, 2):
            raise ValueError("triangle needs 3 vertices in 2D")
        self.vertices = v
        self.J = np.column_stack([v[1] - v[0], v[2] - v[0]])
        self.detJ = float(np.linalg.det(self.J))
        if abs(self.detJ) <= 0.0:
            raise ValueError("degenerate triangle")
        self.Jinv = np.linalg.inv(self.J)
        self.area = 0.5 * abs(self.detJ)

    def to_physical(self, ref_pts):
        return self.vertices[0] + np.atleast_2d(ref_pts) @ self.J.T

    def to_reference(self, pts):
        return (np.atleast_2d(pts) - self.vertices[0]) @ self.Jinv.T

    def edges(self):
        """Local edges (v0->v1, v1->v2, v2->v0) as (start, end, length, outward normal)."""
        v = self.vertices
        sgn = 1.0 if self.detJ > 0 else -1.0
        out = []
        for a, b in ((0, 1), (1, 2), (2, 0)):
            d = v[b] - v[a]
            L = float(np.hypot(*d))
            n = sgn * np.array([d[1], -d[0]]) / L
            out.append((v[a], v[b], L, n))
        return out


@dataclass
class Tabulation:
    """Physical values and derivatives of a triangle basis at a set of points."""

    value: np.ndarray
    grad: np.ndarray = None
    hess: np.ndarray = None
    third: np.ndarray = None

    @property
    def laplacian(self):
        return self.hess[..., 0, 0] + self.hess[..., 1, 1]

    @property
    def grad_laplacian(self):
        return self.third[..., 0, 0, :] + self.third[..., 1, 1, :]


def tabulate(basis, tri, ref_pts, order=1):
    """Evaluate ``basis`` mapped onto ``tri`` at reference points ``ref_pts``."""
    ref = basis.ref_tabulate(ref_pts, order)
    G = tri.Jinv
    out = Tabulation(ref[0])
    if order >= 1:
        out.grad = np.einsum("qni,ia->qna", ref[1], G)
    if order >= 2:
        out.hess = np.einsum("qnij,ia,jb->qnab", ref[2], G, G)
    if order >= 3:
        out.third = np.einsum("qnijl,ia,jb,lc->qnabc", ref[3], G, G, G)
    return out


def evaluate(coefs, basis, tri, pts):
    """Evaluate the polynomial with nodal coefficients ``coefs`` at physical ``pts``."""
    vals = basis.ref_derivative(tri.to_reference(pts), 0, 0)
    return vals @ np.asarray(coefs)


class EdgeBasis:
    """Shifted Legendre basis of P_d on an edge parametrised by t in [0, 1]."""

    def __init__(self, degree):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        self.degree = degree
        self.dim = degree + 1

    def __repr__(self):
        return f"EdgeBasis(degree={self.degree})"

    def __call__(self, t):
        return legendre.legvander(2.0 * np.asarray(t, dtype=float) - 1.0, self.degree)

    def mass(self, length):
        return length * np.diag(1.0 / (2.0 * np.arange(self.dim) + 1.0))


def lagrange_interpolate_on_tri(f, tri, k):
    """Nodal coefficients of the Lagrange interpolant of ``f(x, y)`` in P_k(tri)."""
    basis = tri_basis(k)
    X = tri.to_physical(basis.nodes)
    return np.asarray(f(X[:, 0], X[:, 1]), dtype=float) * np.ones(basis.dim)


def l2_project_on_edge(f, start, end, degree, npts=None):
    """L2 projection of ``f(x, y)`` onto P_degree of the segment start->end.

    Returns shifted-Legendre coefficients in the parameter running from
    ``start`` (t = 0) to ``end`` (t = 1).
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    L = float(np.hypot(*(end - start)))
    if npts is None:
        npts = degree + 2
    rule = edge_quadrature(npts)
    X = start + rule.points[:, None] * (end - start)
    B = EdgeBasis(degree)(rule.points)
    fv = np.asarray(f(X[:, 0], X[:, 1]), dtype=float) * np.ones(len(rule))
    M = L * (B.T * rule.weights) @ B
    rhs = L * (B.T * rule.weights) @ fv
    return cho_solve(cho_factor(M), rhs)


def monomial_integral(m, n):
    """Exact integral of x^m y^n over the reference triangle."""
    return 1.0 / ((m + n + 2) * (m + n + 1) * comb(m + n, m))
