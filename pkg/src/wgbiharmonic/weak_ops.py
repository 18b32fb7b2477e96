"""Element-local discrete weak Laplacian and weak gradient.

Local degrees of freedom on a triangle are ordered as

    [u0 (dim P_k) | u_b on local edges 0, 1, 2 ((k+1) each) | u_g on local edges 0, 1, 2 (k each)]

with local edge ``i`` running from vertex ``i`` to vertex ``(i+1) % 3``.  Edge
unknowns are expressed in the shifted Legendre basis of the *global* edge
parameter, so ``reversed_[i]`` says whether local edge ``i`` is traversed
against it.  ``signs[i]`` is n_e . n_outward for the globally fixed normal.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import (
    EdgeBasis,
    edge_quadrature,
    l2_project_on_edge,
    lagrange_interpolate_on_tri,
    tabulate,
    tri_basis,
    tri_quadrature,
)


@dataclass(frozen=True)
class Discretization:
    """Polynomial degrees and quadrature settings shared by all element routines."""

    k: int = 2
    grad_degree: int = None
    tri_degree: int = None
    edge_points: int = None

    @property
    def l(self):
        return self.k - 1 if self.grad_degree is None else self.grad_degree

    @property
    def m(self):
        return self.k - 2

    @property
    def quad_tri_degree(self):
        return 2 * self.k + 4 if self.tri_degree is None else self.tri_degree

    @property
    def quad_edge_points(self):
        return self.k + 2 if self.edge_points is None else self.edge_points

    @property
    def n0(self):
        return (self.k + 1) * (self.k + 2) // 2

    @property
    def nb(self):
        return 3 * (self.k + 1)

    @property
    def ng(self):
        return 3 * self.k

    @property
    def n_local(self):
        return self.n0 + self.nb + self.ng

    def slices(self):
        n0, nb = self.n0, self.nb
        return slice(0, n0), slice(n0, n0 + nb), slice(n0 + nb, self.n_local)


@dataclass
class EdgeData:
    """Quadrature data for one local edge of a triangle."""

    ref_points: np.ndarray
    weights: np.ndarray      # already scaled by edge length
    normal: np.ndarray       # outward unit normal
    length: float
    trace: np.ndarray        # (nq, k+1) trace basis in the global parameter
    flux: np.ndarray         # (nq, k) flux basis in the global parameter


def edge_data(tri, disc, reversed_=(False, False, False)):
    rule = edge_quadrature(disc.quad_edge_points)
    bb, gb = EdgeBasis(disc.k), EdgeBasis(disc.k - 1)
    out = []
    for le, (p, q, L, n) in enumerate(tri.edges()):
        X = p + rule.points[:, None] * (q - p)
        t = 1.0 - rule.points if reversed_[le] else rule.points
        out.append(EdgeData(tri.to_reference(X), L * rule.weights, n, L, bb(t), gb(t)))
    return out


@dataclass
class WeakLaplacianOp:
    """Coefficient matrices of the weak Laplacian in the P_{k-2}(T) Lagrange basis.

    Row ``i`` of ``C0`` holds the coefficients of the weak Laplacian of the
    i-th interior basis function (likewise ``Cb``, ``Cg``), so for a local DOF
    vector the weak Laplacian has coefficients ``C0.T @ u0 + Cb.T @ ub + Cg.T @ ug``.
    """

    C0: np.ndarray
    Cb: np.ndarray
    Cg: np.ndarray
    mass: np.ndarray

    @property
    def C(self):
        return np.vstack([self.C0, self.Cb, self.Cg])

    def apply(self, v, disc):
        s0, sb, sg = disc.slices()
        return self.C0.T @ v[s0] + self.Cb.T @ v[sb] + self.Cg.T @ v[sg]


@dataclass
class WeakGradientOp:
    """D grad_w v = -E v0 + F vb over the vector space [P_l(T)]^2.

    Vector basis index ``c * dim P_l + i`` is ``e_c * psi_i``.
    """

    D: np.ndarray
    E: np.ndarray
    F: np.ndarray

    def apply(self, v, disc):
        s0, sb, _ = disc.slices()
        return np.linalg.solve(self.D, -self.E @ v[s0] + self.F @ v[sb])


def weak_laplacian_op(tri, disc, signs, reversed_=(False, False, False)):
    k = disc.k
    if k < 2:
        raise ValueError("weak Laplacian requires k >= 2")
    W = tri_basis(disc.m)
    P = tri_basis(k)
    rule = tri_quadrature(disc.quad_tri_degree)
    wq = rule.weights * tri.area * 2.0
    tw = tabulate(W, tri, rule.points, order=2)
    tp = tabulate(P, tri, rule.points, order=0)

    M = (tw.value.T * wq) @ tw.value
    R0 = (tw.laplacian.T * wq) @ tp.value

    nw = W.dim
    Rb = np.zeros((nw, 3 * (k + 1)))
    Rg = np.zeros((nw, 3 * k))
    for le, ed in enumerate(edge_data(tri, disc, reversed_)):
        te = tabulate(W, tri, ed.ref_points, order=1)
        dn = te.grad @ ed.normal
        Rb[:, le * (k + 1):(le + 1) * (k + 1)] = -(dn.T * ed.weights) @ ed.trace
        Rg[:, le * k:(le + 1) * k] = signs[le] * (te.value.T * ed.weights) @ ed.flux

    cf = cho_factor(M)
    return WeakLaplacianOp(
        C0=cho_solve(cf, R0).T,
        Cb=cho_solve(cf, Rb).T,
        Cg=cho_solve(cf, Rg).T,
        mass=M,
    )


def vector_mass(tri, degree, rule):
    G = tri_basis(degree)
    tg = tabulate(G, tri, rule.points, order=0)
    wq = rule.weights * tri.area * 2.0
    M = (tg.value.T * wq) @ tg.value
    Z = np.zeros_like(M)
    return np.block([[M, Z], [Z, M]])


def weak_gradient_op(tri, disc, reversed_=(False, False, False)):
    k, l = disc.k, disc.l
    G = tri_basis(l)
    P = tri_basis(k)
    rule = tri_quadrature(disc.quad_tri_degree)
    wq = rule.weights * tri.area * 2.0
    tg = tabulate(G, tri, rule.points, order=1)
    tp = tabulate(P, tri, rule.points, order=0)

    D = vector_mass(tri, l, rule)
    # E[(c, i), j] = (phi_j, d_c psi_i)
    E = np.vstack([(tg.grad[..., c].T * wq) @ tp.value for c in range(2)])

    ng = G.dim
    F = np.zeros((2 * ng, 3 * (k + 1)))
    for le, ed in enumerate(edge_data(tri, disc, reversed_)):
        te = tabulate(G, tri, ed.ref_points, order=0)
        blk = (te.value.T * ed.weights) @ ed.trace
        cols = slice(le * (k + 1), (le + 1) * (k + 1))
        F[:ng, cols] = ed.normal[0] * blk
        F[ng:, cols] = ed.normal[1] * blk
    return WeakGradientOp(D=D, E=E, F=F)


def lift_polynomial(p, grad_p, tri, disc, signs, reversed_=(False, False, False)):
    """Local DOFs {I0 p, I_b p, I_g (grad p . n_e)} of a smooth function on ``tri``.

    ``p(x, y)`` and ``grad_p(x, y) -> (px, py)`` act on coordinate arrays.  The
    global edge normal is recovered from ``signs`` and the outward normals.
    """
    k = disc.k
    u0 = lagrange_interpolate_on_tri(p, tri, k)
    ub, ug = [], []
    for le, (a, b, L, n) in enumerate(tri.edges()):
        start, end = (b, a) if reversed_[le] else (a, b)
        ne = signs[le] * n
        ub.append(l2_project_on_edge(p, start, end, k, disc.quad_edge_points))

        def flux(x, y, ne=ne):
            gx, gy = grad_p(x, y)
            return gx * ne[0] + gy * ne[1]

        ug.append(l2_project_on_edge(flux, start, end, k - 1, disc.quad_edge_points))
    return np.concatenate([u0] + ub + ug)
