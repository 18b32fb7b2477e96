"""Local stiffness blocks, stabilizer and global assembly of the WG system."""

from dataclasses import dataclass
import logging
import math

import numpy as np
import scipy.io
import scipy.sparse as sps

from .basis import Triangle, l2_project_on_edge, tabulate, tri_basis, tri_quadrature
from .mesh import Region
from .weak_ops import edge_data, vector_mass, weak_gradient_op, weak_laplacian_op

log = logging.getLogger(__name__)


class DofMap:
    """Global numbering: all interior blocks, then edge traces, then edge fluxes."""

    def __init__(self, mesh, disc):
        k = disc.k
        self.disc = disc
        self.n_tri = mesh.n_triangles
        self.n_edge = mesh.n_edges
        self.n0 = disc.n0
        self.off_b = self.n_tri * self.n0
        self.off_g = self.off_b + self.n_edge * (k + 1)
        self.n_dofs = self.off_g + self.n_edge * k

        t = np.arange(self.n_tri)
        te = mesh.tri_edges
        cols = [t[:, None] * self.n0 + np.arange(self.n0)]
        cols += [self.off_b + te[:, le:le + 1] * (k + 1) + np.arange(k + 1) for le in range(3)]
        cols += [self.off_g + te[:, le:le + 1] * k + np.arange(k) for le in range(3)]
        self.local_to_global = np.hstack(cols)

        self.boundary = np.zeros(self.n_dofs, dtype=bool)
        be = np.flatnonzero(mesh.boundary_edge)
        self.boundary[(self.off_b + be[:, None] * (k + 1) + np.arange(k + 1)).ravel()] = True
        self.boundary[(self.off_g + be[:, None] * k + np.arange(k)).ravel()] = True
        self.free = np.flatnonzero(~self.boundary)

    def interior(self, x):
        return x[:self.off_b].reshape(self.n_tri, self.n0)

    def trace(self, x):
        return x[self.off_b:self.off_g].reshape(self.n_edge, -1)

    def flux(self, x):
        return x[self.off_g:].reshape(self.n_edge, -1)


def element_matrices(tri, disc, epsilon, a):
    """(A_T, B_T, C_T): eps^2-scaled P_{k-2} mass, [P_l]^2 mass, a-weighted P_k mass."""
    rule = tri_quadrature(disc.quad_tri_degree)
    wq = rule.weights * tri.area * 2.0
    W = tabulate(tri_basis(disc.m), tri, rule.points, order=0).value
    P = tabulate(tri_basis(disc.k), tri, rule.points, order=0).value
    X = tri.to_physical(rule.points)
    aq = np.asarray(a(X[:, 0], X[:, 1]), dtype=float) * np.ones(len(wq))
    A_T = epsilon**2 * (W.T * wq) @ W
    B_T = vector_mass(tri, disc.l, rule)
    C_T = (P.T * (wq * aq)) @ P
    return A_T, B_T, C_T


@dataclass
class LocalStiffness:
    """3x3 block local matrix; ``blocks[(r, c)]`` for r, c in '0', 'b', 'g'."""

    blocks: dict
    stabilizer: np.ndarray = None

    @property
    def matrix(self):
        S = np.block([[self.blocks[r + c] for c in "0bg"] for r in "0bg"])
        if self.stabilizer is not None:
            S = S + self.stabilizer
        return S


def local_stiffness(tri, disc, epsilon, a, signs, reversed_=(False, False, False),
                    rho=None, sigma=None):
    """Assemble the nine blocks of S_T from the weak-operator coefficient matrices."""
    lap = weak_laplacian_op(tri, disc, signs, reversed_)
    grad = weak_gradient_op(tri, disc, reversed_)
    A_T, B_T, C_T = element_matrices(tri, disc, epsilon, a)
    C0, Cb, Cg = lap.C0, lap.Cb, lap.Cg
    Dinv_E = np.linalg.solve(grad.D, grad.E)
    Dinv_F = np.linalg.solve(grad.D, grad.F)
    EBE = Dinv_E.T @ B_T @ Dinv_E
    EBF = Dinv_E.T @ B_T @ Dinv_F
    FBF = Dinv_F.T @ B_T @ Dinv_F
    blocks = {
        "00": C0 @ A_T @ C0.T + EBE + C_T,
        "0b": C0 @ A_T @ Cb.T - EBF,
        "0g": C0 @ A_T @ Cg.T,
        "b0": Cb @ A_T @ C0.T - EBF.T,
        "bb": Cb @ A_T @ Cb.T + FBF,
        "bg": Cb @ A_T @ Cg.T,
        "g0": Cg @ A_T @ C0.T,
        "gb": Cg @ A_T @ Cb.T,
        "gg": Cg @ A_T @ Cg.T,
    }
    stab = None
    if rho is not None:
        stab = stabilizer_local(tri, disc, rho, sigma, signs, reversed_)
    return LocalStiffness(blocks, stab)


def stabilizer_parameters(region, epsilon, N):
    """(rho_T, sigma_T) for a triangle in ``region``."""
    if Region(region) == Region.OMEGA0:
        return epsilon * N, float(N)
    r = N / math.log(N)
    return epsilon * r, r**3 / epsilon


def stabilizer_jumps(tri, disc, signs, reversed_=(False, False, False)):
    """Per local edge: (weights, flux-jump rows, trace-jump rows) on local DOFs.

    The flux jump is grad v0 . n_e - v_g and the trace jump is v0 - v_b.
    """
    k = disc.k
    P = tri_basis(k)
    s0, sb, sg = disc.slices()
    out = []
    for le, ed in enumerate(edge_data(tri, disc, reversed_)):
        tp = tabulate(P, tri, ed.ref_points, order=1)
        ne = signs[le] * ed.normal
        nq = len(ed.weights)
        J1 = np.zeros((nq, disc.n_local))
        J2 = np.zeros((nq, disc.n_local))
        J1[:, s0] = tp.grad @ ne
        J1[:, sg.start + le * k: sg.start + (le + 1) * k] = -ed.flux
        J2[:, s0] = tp.value
        J2[:, sb.start + le * (k + 1): sb.start + (le + 1) * (k + 1)] = -ed.trace
        out.append((ed.weights, J1, J2))
    return out


def stabilizer_local(tri, disc, rho, sigma, signs, reversed_=(False, False, False)):
    S = np.zeros((disc.n_local, disc.n_local))
    for w, J1, J2 in stabilizer_jumps(tri, disc, signs, reversed_):
        S += rho * (J1.T * w) @ J1 + sigma * (J2.T * w) @ J2
    return S


def canonical_triangle(hx, hy, upper):
    """Half of the rectangle [0, hx] x [0, hy] split along its off-diagonal."""
    if upper:
        return Triangle([[hx, hy], [0.0, hy], [hx, 0.0]])
    return Triangle([[0.0, 0.0], [hx, 0.0], [0.0, hy]])


@dataclass
class ElementGroups:
    """Elements sharing geometry, region and edge orientation, hence one local matrix."""

    keys: list
    index: np.ndarray  # group id per triangle


def group_elements(mesh):
    upper = np.arange(mesh.n_triangles) % 2
    table = np.column_stack(
        [mesh.hx, mesh.hy, upper, mesh.region, mesh.tri_edge_sign, mesh.tri_edge_reversed]
    )
    keys, index = np.unique(table, axis=0, return_inverse=True)
    return ElementGroups([tuple(r) for r in keys], index.ravel())


def _key_parts(key):
    hx, hy, upper, region = key[0], key[1], bool(key[2]), int(key[3])
    signs = np.array(key[4:7], dtype=float)
    rev = tuple(bool(r) for r in key[7:10])
    return hx, hy, upper, region, signs, rev


def _zero_a(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def group_matrices(mesh, disc, epsilon, with_stabilizer=True):
    """Local stiffness without the reaction term, one per element group."""
    groups = group_elements(mesh)
    mats = []
    for key in groups.keys:
        hx, hy, upper, region, signs, rev = _key_parts(key)
        tri = canonical_triangle(hx, hy, upper)
        rho = sigma = None
        if with_stabilizer:
            rho, sigma = stabilizer_parameters(region, epsilon, mesh.N)
            if sigma * max(hx, hy) > 1e12:
                log.info("conditioning: sigma_T * h = %.3e on region %s", sigma * max(hx, hy),
                         Region(region).name)
        mats.append(local_stiffness(tri, disc, epsilon, _zero_a, signs, rev, rho, sigma).matrix)
    return groups, np.array(mats)


def physical_quadrature(mesh, disc, rule=None):
    """Quadrature points (nT, nq, 2) and weights (nT, nq) on every triangle."""
    rule = rule or tri_quadrature(disc.quad_tri_degree)
    v = mesh.nodes[mesh.triangles]
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
    detJ = np.abs(J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0])
    X = v[:, None, 0, :] + np.einsum("tcr,qr->tqc", J, rule.points)
    return X, detJ[:, None] * rule.weights[None, :], rule


def reaction_and_load(mesh, disc, problem):
    """Per-element a-weighted mass matrices (nT, n0, n0) and loads (nT, n0)."""
    X, W, rule = physical_quadrature(mesh, disc)
    Phi = tri_basis(disc.k).ref_derivative(rule.points, 0, 0)
    aq = np.broadcast_to(problem.a(X[..., 0], X[..., 1]), W.shape)
    gq = np.broadcast_to(problem.g(X[..., 0], X[..., 1]), W.shape)
    C = np.einsum("tq,qi,qj->tij", W * aq, Phi, Phi)
    b = np.einsum("tq,qi->ti", W * gq, Phi)
    return C, b


@dataclass
class GlobalSystem:
    """Assembled operator on S_N and its reduction to the free DOFs."""

    A_full: sps.csr_matrix
    b_full: np.ndarray
    dofmap: DofMap
    boundary_values: np.ndarray
    A: sps.csr_matrix
    b: np.ndarray
    local: np.ndarray = None  # per-element local matrices (nT, n_loc, n_loc)

    def expand(self, x_free):
        x = self.boundary_values.copy()
        x[self.dofmap.free] = x_free
        return x

    def dump(self, path):
        scipy.io.mmwrite(str(path), self.A, comment="reduced WG stiffness matrix")


def scatter(local, l2g, n):
    """Sum per-element dense matrices into a CSR matrix, in element order."""
    nl = l2g.shape[1]
    rows = np.repeat(l2g, nl, axis=1).ravel()
    cols = np.tile(l2g, (1, nl)).ravel()
    A = sps.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def boundary_data(mesh, disc, dofmap, problem):
    """Full-length vector holding the essential trace and flux values."""
    x = np.zeros(dofmap.n_dofs)
    if problem.boundary != "exact":
        return x
    k = disc.k
    ex = problem.exact
    for e in np.flatnonzero(mesh.boundary_edge):
        a, b = mesh.nodes[mesh.edges[e]]
        n = mesh.edge_normals[e]

        def flux(xx, yy, n=n):
            gx, gy = ex.grad(xx, yy)
            return gx * n[0] + gy * n[1]

        x[dofmap.off_b + e * (k + 1): dofmap.off_b + (e + 1) * (k + 1)] = \
            l2_project_on_edge(ex.u, a, b, k, disc.quad_edge_points)
        x[dofmap.off_g + e * k: dofmap.off_g + (e + 1) * k] = \
            l2_project_on_edge(flux, a, b, k - 1, disc.quad_edge_points)
    return x


def assemble(mesh, disc, problem, keep_local=False):
    """Build the global WG system for ``problem`` on ``mesh``.

    Essential data on boundary traces and fluxes is eliminated, so the
    reduced matrix acts on S_N^0 (plus a lifting for inhomogeneous data).
    """
    dofmap = DofMap(mesh, disc)
    groups, mats = group_matrices(mesh, disc, problem.epsilon)
    C, b0 = reaction_and_load(mesh, disc, problem)
    local = mats[groups.index]
    if np.any(C):
        local[:, :disc.n0, :disc.n0] += C
    local = 0.5 * (local + local.transpose(0, 2, 1))
    l2g = dofmap.local_to_global
    A_full = scatter(local, l2g, dofmap.n_dofs)

    b_full = np.zeros(dofmap.n_dofs)
    b_full[:dofmap.off_b] = b0.ravel()

    xd = boundary_data(mesh, disc, dofmap, problem)
    free = dofmap.free
    A = A_full[free][:, free]
    b = b_full[free] - A_full[free] @ xd
    return GlobalSystem(A_full, b_full, dofmap, xd, A.tocsr(), b, local if keep_local else None)
