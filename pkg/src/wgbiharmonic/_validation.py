"""Input validation shared by the estimator, the CLI and the mesh builder."""

import numbers

import numpy as np
from sklearn.utils import check_array

SUPPORTED_DEGREES = (2, 3)


def check_mesh_params(N, epsilon, lam):
    if not isinstance(N, numbers.Integral) or N < 4 or N % 4:
        raise ValueError(f"N must be a positive multiple of 4, got {N!r}")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam!r}")


def check_degree(k):
    if k not in SUPPORTED_DEGREES:
        raise ValueError(f"polynomial degree k must be one of {SUPPORTED_DEGREES}, got {k!r}")
    return int(k)


def check_points(X):
    """Validate an (n, 2) array of points inside the closed unit square."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected points with 2 columns, got {X.shape[1]}")
    if np.any(X < 0.0) or np.any(X > 1.0):
        raise ValueError("points must lie in the closed unit square")
    return X


def check_doubling(Ns):
    Ns = [int(n) for n in Ns]
    for a, b in zip(Ns, Ns[1:]):
        if b != 2 * a:
            raise ValueError(f"N sequence must double, got {Ns}")
    return Ns
