"""Interpolants of exact solutions, discrete H^2-type error norms and observed orders."""

from dataclasses import asdict, dataclass
import math

import numpy as np

from .assembly import group_elements, _key_parts, canonical_triangle, physical_quadrature
from .assembly import stabilizer_jumps, stabilizer_parameters
from .basis import EdgeBasis, edge_quadrature, tri_basis


@dataclass
class ErrorBreakdown:
    """Squared contributions to |||e|||_M and the resulting norm."""

    laplacian: float
    gradient: float
    reaction: float
    stabilizer: float
    total: float
    energy: float = None

    def as_dict(self):
        return asdict(self)


def _element_jacobians(mesh):
    v = mesh.nodes[mesh.triangles]
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
    return v, J, np.linalg.inv(J)


def interpolate_interior(f, mesh, k):
    """Lagrange interpolation of ``f`` on every triangle, shape (nT, dim P_k)."""
    v, J, _ = _element_jacobians(mesh)
    nodes = tri_basis(k).nodes
    X = v[:, None, 0, :] + np.einsum("tcr,nr->tnc", J, nodes)
    return np.asarray(f(X[..., 0], X[..., 1]), dtype=float) * np.ones(X.shape[:2])


def project_edges(f, mesh, degree, npts, edges=None):
    """L2 projection of ``f(x, y, normal)`` onto P_degree of each edge (Legendre coefficients)."""
    edges = np.arange(mesh.n_edges) if edges is None else edges
    rule = edge_quadrature(npts)
    P = mesh.nodes[mesh.edges[edges, 0]]
    Q = mesh.nodes[mesh.edges[edges, 1]]
    X = P[:, None, :] + rule.points[None, :, None] * (Q - P)[:, None, :]
    n = mesh.edge_normals[edges]
    fv = np.asarray(f(X[..., 0], X[..., 1], n[:, None, :]), dtype=float) * np.ones(X.shape[:2])
    B = EdgeBasis(degree)(rule.points)
    # shifted Legendre: edge mass is diag(L / (2i + 1)) and the rule integrates it exactly
    scale = 2.0 * np.arange(degree + 1) + 1.0
    return (fv * rule.weights) @ B * scale


def interpolate(problem, mesh, disc, dofmap):
    """Full DOF vector of I_h u = {I0 u, I_b u, I_g (grad u . n_e)}."""
    ex = problem.exact
    if ex is None:
        raise ValueError("problem has no exact solution")
    k = disc.k
    x = np.zeros(dofmap.n_dofs)
    x[:dofmap.off_b] = interpolate_interior(ex.u, mesh, k).ravel()
    npts = disc.quad_edge_points
    x[dofmap.off_b:dofmap.off_g] = project_edges(
        lambda xx, yy, n: ex.u(xx, yy), mesh, k, npts).ravel()

    def flux(xx, yy, n):
        gx, gy = ex.grad(xx, yy)
        return gx * n[..., 0] + gy * n[..., 1]

    x[dofmap.off_g:] = project_edges(flux, mesh, k - 1, npts).ravel()
    return x


def group_stabilizer_jumps(mesh, disc, epsilon):
    """Per element group: stacked jump rows scaled by sqrt(rho w) and sqrt(sigma w)."""
    groups = group_elements(mesh)
    ops = []
    for key in groups.keys:
        hx, hy, upper, region, signs, rev = _key_parts(key)
        rho, sigma = stabilizer_parameters(region, epsilon, mesh.N)
        tri = canonical_triangle(hx, hy, upper)
        rows = []
        for w, J1, J2 in stabilizer_jumps(tri, disc, signs, rev):
            rows.append(np.sqrt(rho * w)[:, None] * J1)
            rows.append(np.sqrt(sigma * w)[:, None] * J2)
        ops.append(np.vstack(rows))
    return groups, np.array(ops)


def stabilizer_energy(x, mesh, disc, dofmap, epsilon):
    """s(x, x) summed as weighted squared jumps (never negative)."""
    groups, ops = group_stabilizer_jumps(mesh, disc, epsilon)
    xl = x[dofmap.local_to_global]
    jumps = np.einsum("tqi,ti->tq", ops[groups.index], xl)
    return float(np.sum(jumps**2))


def _interior_fields(coefs, mesh, disc):
    """Values, gradients and Laplacians of piecewise P_k functions at quadrature points."""
    X, W, rule = physical_quadrature(mesh, disc)
    _, _, Jinv = _element_jacobians(mesh)
    ref = tri_basis(disc.k).ref_tabulate(rule.points, order=2)
    val = ref[0] @ coefs.T  # (nq, nT)
    g_ref = np.einsum("qni,tn->tqi", ref[1], coefs)
    grad = np.einsum("tqi,tia->tqa", g_ref, Jinv)
    h_ref = np.einsum("qnij,tn->tqij", ref[2], coefs)
    hess = np.einsum("tqij,tia,tjb->tqab", h_ref, Jinv, Jinv)
    lap = hess[..., 0, 0] + hess[..., 1, 1]
    return X, W, val.T, grad, lap


def triple_norm_M(x, mesh, disc, dofmap, problem, mode="discrete"):
    """|||e|||_M with its parts.

    ``mode="discrete"``: ``x`` is a DOF vector of the discrete difference e.
    ``mode="exact"``: ``x`` is the discrete solution u_N and e = u - u_N with
    the interior terms integrated against the closed-form u; the stabilizer
    part then reduces to the jumps of u_N itself.
    """
    eps = problem.epsilon
    coefs = dofmap.interior(x)
    X, W, val, grad, lap = _interior_fields(coefs, mesh, disc)
    if mode == "exact":
        ex = problem.exact
        xs, ys = X[..., 0], X[..., 1]
        val = ex.u(xs, ys) - val
        gx, gy = ex.grad(xs, ys)
        grad = np.stack([gx, gy], axis=-1) - grad
        lap = ex.laplacian(xs, ys) - lap
    elif mode != "discrete":
        raise ValueError(f"unknown norm mode {mode!r}")
    aq = problem.a(X[..., 0], X[..., 1])
    t_lap = eps**2 * float(np.sum(W * lap**2))
    t_grad = float(np.sum(W * (grad**2).sum(axis=-1)))
    t_rea = float(np.sum(W * (aq * val) ** 2))
    t_stab = stabilizer_energy(x, mesh, disc, dofmap, eps)
    total = math.sqrt(t_lap + t_grad + t_rea + t_stab)
    return ErrorBreakdown(t_lap, t_grad, t_rea, t_stab, total)


def energy_norm(x, system):
    q = float(x @ (system.A_full @ x))
    if q < -1e-12 * max(1.0, abs(q)):
        raise ArithmeticError(f"negative quadratic form {q:.3e}: assembly is broken")
    return math.sqrt(max(q, 0.0))


def convergence_orders(errors):
    """log2(e_N / e_2N) for a list of (N, e_N) pairs with doubling N."""
    out = []
    for (n1, e1), (n2, e2) in zip(errors, errors[1:]):
        if e1 <= 0 or e2 <= 0:
            raise ValueError("errors must be positive")
        if n2 != 2 * n1:
            raise ValueError(f"N must double between entries, got {n1} -> {n2}")
        out.append(math.log2(e1 / e2))
    return out
