import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wgbiharmonic.basis import Triangle  # noqa: E402
from wgbiharmonic.mesh import MeshParams, build_mesh  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def sample_elements(n, seed=0, N=8, epsilons=(0.3, 1e-3, 1e-5), k=2, shift=True):
    """Random mesh triangles covering every region type.

    Each element is returned as (vertices, signs, reversed, region); with
    ``shift`` the vertices are translated so the bounding box starts at the
    origin, which removes coordinate rounding on tiny layer elements.
    """
    rng = np.random.default_rng(seed)
    out = []
    meshes = [build_mesh(MeshParams(N, e, k + 1)) for e in epsilons]
    regions_seen = set()
    while len(out) < n:
        m = meshes[len(out) % len(meshes)]
        t = int(rng.integers(m.n_triangles))
        # force coverage of all three regions in the first picks
        if len(regions_seen) < 3 and int(m.region[t]) in regions_seen:
            continue
        regions_seen.add(int(m.region[t]))
        V = m.nodes[m.triangles[t]].copy()
        if shift:
            V -= V.min(axis=0)
        out.append((V, m.tri_edge_sign[t].copy(), tuple(bool(r) for r in m.tri_edge_reversed[t]),
                    int(m.region[t])))
    return out


def as_triangle(V):
    return Triangle(V)
