"""Model problems eps^2 Lap^2 u - Lap u + a u = g on the unit square.

Sources are manufactured from closed-form exact solutions.  Derivatives are
taken symbolically once per problem family and compiled to numpy; nothing is
differentiated numerically at run time.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

_x, _y, _eps = sp.symbols("x y epsilon", real=True)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form u with the derivatives needed by the solver and the norms.

    Every callable takes coordinate arrays ``(x, y)``; ``grad`` and
    ``grad_laplacian`` return a pair of arrays.
    """

    u: callable
    grad: callable
    laplacian: callable
    grad_laplacian: callable
    bilaplacian: callable


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    epsilon: float
    a: callable
    g: callable
    exact: ExactSolution = None
    boundary: str = "homogeneous"
    a_bounds: tuple = field(default=(0.0, 1.0))

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.boundary not in ("homogeneous", "exact"):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")
        if self.boundary == "exact" and self.exact is None:
            raise ValueError("boundary mode 'exact' needs an exact solution")

    def residual(self, x, y):
        """eps^2 Lap^2 u - Lap u + a u - g at the given points."""
        e = self.exact
        return (self.epsilon**2 * e.bilaplacian(x, y) - e.laplacian(x, y)
                + self.a(x, y) * e.u(x, y) - self.g(x, y))


def _broadcast(f):
    def wrapped(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(under="ignore"):
            return np.broadcast_to(f(x, y), np.broadcast(x, y).shape).astype(float)

    return wrapped


@lru_cache(maxsize=None)
def _compile(expr_u):
    """Compile u and its derivatives; returns functions of (x, y, eps)."""
    ux, uy = sp.diff(expr_u, _x), sp.diff(expr_u, _y)
    lap = sp.diff(ux, _x) + sp.diff(uy, _y)
    lx, ly = sp.diff(lap, _x), sp.diff(lap, _y)
    bilap = sp.diff(lx, _x) + sp.diff(ly, _y)
    args = (_x, _y, _eps)
    names = dict(u=expr_u, ux=ux, uy=uy, lap=lap, lx=lx, ly=ly, bilap=bilap)
    return {k: sp.lambdify(args, v, modules="numpy", cse=True) for k, v in names.items()}


def _exact_from(expr_u, epsilon):
    fns = _compile(expr_u)

    def bind(name):
        f = fns[name]
        return _broadcast(lambda x, y: f(x, y, epsilon))

    u, ux, uy = bind("u"), bind("ux"), bind("uy")
    lx, ly = bind("lx"), bind("ly")
    return ExactSolution(
        u=u,
        grad=lambda x, y: (ux(x, y), uy(x, y)),
        laplacian=bind("lap"),
        grad_laplacian=lambda x, y: (lx(x, y), ly(x, y)),
        bilaplacian=bind("bilap"),
    )


def _manufacture(name, epsilon, expr_u, a, boundary="homogeneous", a_bounds=(0.0, 1.0)):
    exact = _exact_from(expr_u, epsilon)
    eps2 = epsilon**2

    def g(x, y):
        return eps2 * exact.bilaplacian(x, y) - exact.laplacian(x, y) + a(x, y) * exact.u(x, y)

    return ProblemSpec(name, epsilon, a, g, exact, boundary, a_bounds)


def _zero(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


def _one(x, y):
    return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)


def _ax(x, y):
    return np.asarray(x, dtype=float) + 0.0 * np.asarray(y, dtype=float)


def example1_solution():
    """Symbolic exact solution of the first model problem (a = 0)."""
    E = sp.exp(-1 / _eps)
    d1, d2 = 1 - E, 1 + E
    X = sp.sin(sp.pi * _x) + sp.pi * _eps / (1 - E) * (
        sp.exp(-_x / _eps) + sp.exp((_x - 1) / _eps) - 1 - E)
    Y = 2 * _y * (1 - _y**2) + _eps * (
        d1 * d2 * (1 - 2 * _y) - 3 * d2 / d1
        + (3 / d1 - d2) * sp.exp(-_y / _eps)
        + (3 / d1 + d2) * sp.exp((_y - 1) / _eps))
    return X * Y


def example2_solution():
    """Symbolic exact solution of the second model problem (a = x)."""
    P = _eps * (sp.exp(-_x / _eps) + sp.exp(-_y / _eps)) - _x**2 * _y
    Q = _eps * (sp.exp(-(1 - _x) / _eps) + sp.exp(-(1 - _y) / _eps)) - _x**2 * _y
    return 250 * P * Q * _x * _y * (1 - _x) * (1 - _y)


def example1(epsilon, boundary="exact"):
    """First model problem, a = 0.

    The closed form is not exactly clamped (its normal derivative on y = 0, 1
    is about -2 eps), so boundary data default to the traces of u itself.
    """
    return _manufacture("example1", epsilon, example1_solution(), _zero, boundary, (0.0, 0.0))


def example2(epsilon, boundary="exact"):
    """Second model problem, a = x.

    u vanishes on the boundary but its normal derivative does not on x = 1 and
    y = 1, so boundary data default to the traces of u itself.
    """
    return _manufacture("example2", epsilon, example2_solution(), _ax, boundary, (0.0, 1.0))


PATCH_POLYNOMIALS = {
    2: _x**2 + _x * _y,
    3: _x**3,
}


def patch_problem(k, epsilon, a=None, boundary="exact"):
    """Polynomial solution of degree k, by default with boundary data taken from it.

    ``a`` defaults to the constant 1.
    """
    if k not in PATCH_POLYNOMIALS:
        raise ValueError(f"no patch polynomial for k={k}")
    a = _one if a is None else a
    return _manufacture(f"patch-k{k}", epsilon, PATCH_POLYNOMIALS[k], a, boundary)


PROBLEMS = {
    "example1": example1,
    "example2": example2,
    "patch-k2": lambda epsilon, **kw: patch_problem(2, epsilon, **kw),
    "patch-k3": lambda epsilon, **kw: patch_problem(3, epsilon, **kw),
}


def get_problem(name, epsilon, **kwargs):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory(epsilon, **kwargs)
