"""Weak Galerkin finite elements for singularly perturbed fourth-order problems.

Solves eps^2 Lap^2 u - Lap u + a u = g on the unit square with clamped
boundary conditions, on layer-adapted Shishkin triangulations.
"""

__version__ = "0.1.0"

from .assembly import DofMap, GlobalSystem, assemble
from .estimator import WeakGalerkinBiharmonic
from .mesh import MeshParams, Region, ShishkinMesh, build_mesh
from .norms import ErrorBreakdown, convergence_orders, interpolate, triple_norm_M
from .problems import ProblemSpec, example1, example2, get_problem, patch_problem
from .solver import SolveReport, SolverError, solve
from .weak_ops import Discretization

__all__ = [
    "DofMap", "Discretization", "ErrorBreakdown", "GlobalSystem", "MeshParams",
    "ProblemSpec", "Region", "ShishkinMesh", "SolveReport", "SolverError",
    "WeakGalerkinBiharmonic", "assemble", "build_mesh", "convergence_orders",
    "example1", "example2", "get_problem", "interpolate", "patch_problem", "solve",
    "triple_norm_M",
]
