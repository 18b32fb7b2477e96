"""Estimator-style front end: fit on a problem, predict the interior field."""

import logging

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_degree, check_mesh_params, check_points
from .assembly import assemble
from .export import evaluate_interior
from .mesh import MeshParams, build_mesh
from .norms import energy_norm, interpolate, triple_norm_M
from .problems import ProblemSpec
from .solver import METHODS, solve
from .weak_ops import Discretization

log = logging.getLogger(__name__)


class WeakGalerkinBiharmonic(RegressorMixin, BaseEstimator):
    """Weak Galerkin solver for eps^2 Lap^2 u - Lap u + a u = g on a Shishkin mesh.

    ``fit`` takes a :class:`ProblemSpec` in place of training data, builds the
    mesh, assembles and solves.  ``predict`` evaluates the interior component
    u0 at points of the unit square, so ``score(X, u(X))`` is the R^2 of the
    discrete solution against sampled values.

    Parameters
    ----------
    k : int
        Polynomial degree of the interior space, 2 or 3.
    N : int
        Number of mesh intervals per direction, a multiple of 4.
    lam : float or None
        Transition constant of the mesh; ``None`` means k + 1.
    quad_tri_degree, quad_edge_points : int or None
        Quadrature overrides; ``None`` keeps the defaults 2k + 4 and k + 2.
    solver : {"cholesky", "cg"}
    tol : float
        Relative residual tolerance of the linear solve.
    """

    def __init__(self, k=2, N=16, lam=None, quad_tri_degree=None, quad_edge_points=None,
                 solver="cholesky", tol=1e-10):
        self.k = k
        self.N = N
        self.lam = lam
        self.quad_tri_degree = quad_tri_degree
        self.quad_edge_points = quad_edge_points
        self.solver = solver
        self.tol = tol

    def _validate(self, problem):
        if not isinstance(problem, ProblemSpec):
            raise TypeError(f"fit expects a ProblemSpec, got {type(problem).__name__}")
        k = check_degree(self.k)
        lam = float(k + 1 if self.lam is None else self.lam)
        check_mesh_params(self.N, problem.epsilon, lam)
        if self.solver not in METHODS:
            raise ValueError(f"solver must be one of {METHODS}, got {self.solver!r}")
        if not 0.0 < self.tol < 1.0:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol!r}")
        return k, lam

    def fit(self, problem, y=None):
        k, lam = self._validate(problem)
        self.problem_ = problem
        self.disc_ = Discretization(k, tri_degree=self.quad_tri_degree,
                                    edge_points=self.quad_edge_points)
        self.mesh_ = build_mesh(MeshParams(int(self.N), problem.epsilon, lam))
        self.system_ = assemble(self.mesh_, self.disc_, problem)
        x, self.solve_report_ = solve(self.system_.A, self.system_.b, self.tol, self.solver)
        self.coef_ = self.system_.expand(x)
        self.n_dofs_ = len(x)
        log.debug("fitted N=%d k=%d eps=%.3e: %d free DOFs", self.N, k, problem.epsilon, len(x))
        return self

    @property
    def interior_coef_(self):
        return self.system_.dofmap.interior(self.coef_)

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_points(X)
        return evaluate_interior(self.mesh_, self.interior_coef_, self.disc_.k, X)

    def interpolant(self):
        """DOF vector of I_h u for the fitted problem's exact solution."""
        check_is_fitted(self, "coef_")
        return interpolate(self.problem_, self.mesh_, self.disc_, self.system_.dofmap)

    def error(self, mode="discrete"):
        """Breakdown of |||I_h u - u_N|||_M (``"discrete"``) or |||u - u_N|||_M (``"exact"``)."""
        check_is_fitted(self, "coef_")
        args = (self.mesh_, self.disc_, self.system_.dofmap, self.problem_)
        if mode == "discrete":
            e = self.interpolant() - self.coef_
            out = triple_norm_M(e, *args, mode="discrete")
            out.energy = energy_norm(e, self.system_)
            return out
        return triple_norm_M(self.coef_, *args, mode=mode)
