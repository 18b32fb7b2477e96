import math

import numpy as np
import pytest
import scipy.sparse as sps

from wgbiharmonic.assembly import assemble
from wgbiharmonic.mesh import MeshParams, build_mesh
from wgbiharmonic.norms import energy_norm
from wgbiharmonic.problems import example1, example2
from wgbiharmonic.solver import SolverError, equilibrate, relative_residual, solve
from wgbiharmonic.weak_ops import Discretization


@pytest.mark.parametrize("method", ["cholesky", "cg"])
def test_identity(method, rng):
    b = rng.normal(size=7)
    x, rep = solve(sps.identity(7, format="csr"), b, method=method)
    np.testing.assert_allclose(x, b, rtol=1e-15)
    assert rep.residual <= 1e-10


@pytest.mark.parametrize("method", ["cholesky", "cg"])
def test_two_by_two(method):
    A = sps.csr_matrix([[4.0, 1.0], [1.0, 3.0]])
    x, rep = solve(A, np.array([1.0, 2.0]), method=method)
    np.testing.assert_allclose(x, [1 / 11, 7 / 11], rtol=1e-13)
    assert rep.method == method


def test_zero_rhs():
    x, rep = solve(sps.csr_matrix([[2.0, 0.0], [0.0, 5.0]]), np.zeros(2))
    assert not np.any(x) and rep.residual == 0.0 and rep.iterations == 0


def test_direct_reports_zero_iterations_when_converged():
    A = sps.diags([2.0, 3.0, 4.0]).tocsr()
    _, rep = solve(A, np.ones(3))
    assert rep.iterations == 0 and rep.min_pivot > 0


def test_indefinite_rejected():
    A = sps.csr_matrix([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(SolverError, match="pivot|SPD"):
        solve(A, np.array([1.0, 0.0]))


def test_negative_diagonal_rejected():
    A = sps.diags([1.0, -1.0]).tocsr()
    with pytest.raises(SolverError, match="diagonal"):
        solve(A, np.ones(2))


def test_cg_iteration_cap_reported():
    n = 400
    A = sps.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n)).tocsr()
    # cap 50 sqrt(n) + 1 = 1001 is enough here; a tolerance below roundoff is not
    with pytest.raises(SolverError, match="exceeds tolerance"):
        solve(A, np.ones(n), tol=1e-30, method="cg")


def test_bad_arguments():
    A = sps.identity(3, format="csr")
    with pytest.raises(ValueError):
        solve(A, np.ones(3), method="lu")
    with pytest.raises(ValueError):
        solve(A, np.ones(4))


def test_equilibration_unit_diagonal():
    A = sps.csr_matrix([[4.0, 1.0], [1.0, 9.0]])
    As, d = equilibrate(A)
    np.testing.assert_allclose(As.diagonal(), 1.0)
    np.testing.assert_allclose(d, [0.5, 1 / 3])


def test_deterministic_direct():
    m = build_mesh(MeshParams(8, 1e-3, 3.0))
    s = assemble(m, Discretization(2), example1(1e-3))
    x1, _ = solve(s.A, s.b)
    x2, _ = solve(s.A, s.b)
    assert x1.tobytes() == x2.tobytes()


@pytest.mark.parametrize("eps2", [1e-6, 1e-10])
def test_direct_and_cg_agree_in_energy(eps2):
    m = build_mesh(MeshParams(8, math.sqrt(eps2), 3.0))
    s = assemble(m, Discretization(2), example2(math.sqrt(eps2)))
    xd, _ = solve(s.A, s.b, method="cholesky")
    xc, rep = solve(s.A, s.b, method="cg")
    assert rep.iterations > 0
    diff = energy_norm(s.expand(xd) - s.expand(xc), s)
    assert diff <= 1e-8 * energy_norm(s.expand(xd), s)


@pytest.mark.slow
@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("eps2", [1e-6, 1e-10])
@pytest.mark.parametrize("N", [16, 64])
def test_residual_contract_on_assembled_systems(k, eps2, N):
    eps = math.sqrt(eps2)
    m = build_mesh(MeshParams(N, eps, k + 1))
    prob = (example1 if k == 2 else example2)(eps)
    s = assemble(m, Discretization(k), prob)
    x, rep = solve(s.A, s.b)
    assert rep.residual <= 1e-10
    assert np.all(np.isfinite(x))
    assert rep.raw_residual == pytest.approx(relative_residual(s.A, x, s.b), rel=1e-12)
