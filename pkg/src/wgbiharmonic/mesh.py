"""Layer-adapted Shishkin triangulation of the unit square."""

from dataclasses import dataclass, field
from enum import IntEnum
import math

import numpy as np

from ._validation import check_mesh_params


class Region(IntEnum):
    OMEGA0 = 0
    EDGE_LAYER = 1
    CORNER_LAYER = 2


@dataclass(frozen=True)
class MeshParams:
    N: int
    epsilon: float
    lam: float = 3.0

    def __post_init__(self):
        check_mesh_params(self.N, self.epsilon, self.lam)


def transition_parameter(params):
    """tau = min(1/4, epsilon * lambda * ln N)."""
    return min(0.25, params.epsilon * params.lam * math.log(params.N))


def mesh_sizes(N, tau):
    return 4.0 * tau / N, 2.0 * (1.0 - 2.0 * tau) / N


def axis_points(N, tau):
    """Piecewise-uniform 1D Shishkin points x_0 = 0 < ... < x_N = 1."""
    if not 0.0 < tau <= 0.25:
        raise ValueError(f"tau must lie in (0, 1/4], got {tau}")
    if N < 4 or N % 4:
        raise ValueError(f"N must be a positive multiple of 4, got {N}")
    h1, h2 = mesh_sizes(N, tau)
    q = N // 4
    i = np.arange(N + 1)
    x = np.where(
        i <= q,
        i * h1,
        np.where(i <= 3 * q, tau + (i - q) * h2, 1.0 - tau + (i - 3 * q) * h1),
    )
    x[0], x[-1] = 0.0, 1.0
    return x


@dataclass
class ShishkinMesh:
    """Off-diagonal triangulation of the tensor-product Shishkin mesh.

    Triangle ``t`` of cell (i, j) (0-based) is ``2 * (j * N + i) + s`` with
    ``s = 0`` for the lower-left half and ``s = 1`` for the upper-right half.
    Edges are stored with ``edges[e] = (a, b)``, ``a < b``; the edge parameter
    runs from node a to node b.
    """

    params: MeshParams
    tau: float
    x: np.ndarray
    y: np.ndarray
    nodes: np.ndarray
    triangles: np.ndarray
    cells: np.ndarray
    hx: np.ndarray
    hy: np.ndarray
    region: np.ndarray
    edges: np.ndarray = None
    edge_normals: np.ndarray = None
    edge_triangles: np.ndarray = None
    tri_edges: np.ndarray = None
    tri_edge_sign: np.ndarray = None
    tri_edge_reversed: np.ndarray = None
    boundary_edge: np.ndarray = None
    _edge_lookup: dict = field(default=None, repr=False)

    @property
    def N(self):
        return self.params.N

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_nodes(self):
        return len(self.nodes)

    def areas(self):
        return 0.5 * self.hx * self.hy

    def barycenters(self):
        return self.nodes[self.triangles].mean(axis=1)

    def edge_lengths(self):
        d = self.nodes[self.edges[:, 1]] - self.nodes[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def locate(self, pts):
        """Index of a triangle containing each point (closed triangles)."""
        pts = np.atleast_2d(pts)
        N = self.N
        i = np.clip(np.searchsorted(self.x, pts[:, 0], side="right") - 1, 0, N - 1)
        j = np.clip(np.searchsorted(self.y, pts[:, 1], side="right") - 1, 0, N - 1)
        sx = (pts[:, 0] - self.x[i]) / (self.x[i + 1] - self.x[i])
        sy = (pts[:, 1] - self.y[j]) / (self.y[j + 1] - self.y[j])
        upper = (sx + sy) > 1.0
        return 2 * (j * N + i) + upper.astype(int)


def classify(xc, yc, tau):
    lx = (xc < tau) | (xc > 1.0 - tau)
    ly = (yc < tau) | (yc > 1.0 - tau)
    reg = np.full(len(xc), Region.OMEGA0, dtype=np.int8)
    reg[lx ^ ly] = Region.EDGE_LAYER
    reg[lx & ly] = Region.CORNER_LAYER
    return reg


def build_mesh(params):
    """Build the Shishkin triangulation for ``params`` with edge normals assigned."""
    N = params.N
    tau = transition_parameter(params)
    h1, h2 = mesh_sizes(N, tau)
    x = axis_points(N, tau)
    y = x.copy()
    X, Y = np.meshgrid(x, y, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    q = N // 4
    idx = np.arange(N)
    hcell = np.where((idx < q) | (idx >= 3 * q), h1, h2)

    jj, ii = np.meshgrid(idx, idx, indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    n00 = jj * (N + 1) + ii
    n10 = n00 + 1
    n01 = n00 + N + 1
    n11 = n01 + 1
    tris = np.empty((2 * N * N, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([n00, n10, n01])
    tris[1::2] = np.column_stack([n11, n01, n10])
    cells = np.repeat(np.column_stack([ii, jj]), 2, axis=0)
    hx = hcell[cells[:, 0]]
    hy = hcell[cells[:, 1]]

    bc = nodes[tris].mean(axis=1)
    region = classify(bc[:, 0], bc[:, 1], tau)

    mesh = ShishkinMesh(params, tau, x, y, nodes, tris, cells, hx, hy, region)
    _build_edges(mesh)
    assign_edge_normals(mesh)
    return mesh


def _build_edges(mesh):
    tris = mesh.triangles
    lookup = {}
    edges = []
    adj = []
    tri_edges = np.empty((len(tris), 3), dtype=np.int64)
    for t, (a, b, c) in enumerate(tris):
        for le, (p, q) in enumerate(((a, b), (b, c), (c, a))):
            key = (p, q) if p < q else (q, p)
            e = lookup.get(key)
            if e is None:
                e = len(edges)
                lookup[key] = e
                edges.append(key)
                adj.append([t, -1])
            else:
                adj[e][1] = t
            tri_edges[t, le] = e
    mesh.edges = np.array(edges, dtype=np.int64)
    mesh.edge_triangles = np.array(adj, dtype=np.int64)
    mesh.tri_edges = tri_edges
    mesh.boundary_edge = mesh.edge_triangles[:, 1] < 0
    mesh._edge_lookup = lookup
    start = tris
    end = np.roll(tris, -1, axis=1)
    mesh.tri_edge_reversed = start > end


def assign_edge_normals(mesh):
    """Fix one unit normal per edge and record the sign n_e . n_outward per triangle.

    Convention: positive x-component, or positive y-component for horizontal edges.
    """
    P = mesh.nodes[mesh.edges[:, 0]]
    Q = mesh.nodes[mesh.edges[:, 1]]
    d = Q - P
    L = np.hypot(d[:, 0], d[:, 1])
    n = np.column_stack([d[:, 1], -d[:, 0]]) / L[:, None]
    flip = (n[:, 0] < 0) | ((n[:, 0] == 0) & (n[:, 1] < 0))
    n[flip] *= -1.0
    n += 0.0  # no negative zeros
    mesh.edge_normals = n

    v = mesh.nodes[mesh.triangles]
    w = np.roll(v, -1, axis=1) - v
    # counterclockwise triangles: outward normal of edge a->b is (dy, -dx)
    outward = np.stack([w[..., 1], -w[..., 0]], axis=-1)
    dots = np.einsum("tec,tec->te", outward, n[mesh.tri_edges])
    mesh.tri_edge_sign = np.where(dots > 0, 1, -1).astype(np.int8)
    return mesh
