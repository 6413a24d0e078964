"""Parametric nonlinear systems G(u, lambda) = 0 and the benchmark discretizations.

All benchmarks use second-order central finite differences on the unit
reference domain with boundary values eliminated, so ``u`` holds interior
(unknown) nodes only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import ParamVec


def _lam(lam) -> np.ndarray:
    return lam.values if isinstance(lam, ParamVec) else np.asarray(lam, dtype=float)


@dataclass(frozen=True)
class Grid:
    dim: int
    n_interior: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.n_interior < 1:
            raise ValueError("n_interior must be positive")

    @property
    def h(self) -> float:
        return 1.0 / (self.n_interior + 1)

    @property
    def dof_count(self) -> int:
        return self.n_interior**self.dim

    def nodes(self) -> np.ndarray:
        """Interior node coordinates, shape (N,) in 1D or (N, 2) as (x1, x2) in 2D."""
        x = self.h * np.arange(1, self.n_interior + 1)
        if self.dim == 1:
            return x
        # row-major ordering: index = i2 * n + i1
        x2, x1 = np.meshgrid(x, x, indexing="ij")
        return np.column_stack([x1.ravel(), x2.ravel()])


def laplacian_1d(n: int, h: float) -> np.ndarray:
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    return (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / h**2


def build_laplacian(grid: Grid) -> np.ndarray:
    """Dense Dirichlet FD Laplacian on [0,1]^dim (Kronecker sum in 2D)."""
    L1 = laplacian_1d(grid.n_interior, grid.h)
    if grid.dim == 1:
        return L1
    eye = np.eye(grid.n_interior)
    return np.kron(eye, L1) + np.kron(L1, eye)


def build_mixed_laplacian(n: int) -> np.ndarray:
    """1D Laplacian with u'(0) = 0 (ghost node) and u(1) = 0.

    Unknowns sit at x_j = j/n for j = 0..n-1, so h = 1/n.
    """
    h = 1.0 / n
    L = laplacian_1d(n, h)
    L[0, 1] = 2.0 / h**2
    return L


def nearest_node(coords: np.ndarray, target) -> int:
    """Index of the node nearest to ``target``; ties go to the lower index."""
    coords = np.asarray(coords, dtype=float)
    target = np.asarray(target, dtype=float)
    if coords.ndim == 1:
        dist = np.abs(coords - target)
    else:
        dist = np.sqrt(((coords - target) ** 2).sum(axis=1))
    return int(np.argmin(dist))  # argmin returns the first minimum


class Problem:
    """Interface for a discretized parametric system G(u, lambda) = 0.

    Subclasses provide ``residual``, ``jacobian_u``, ``jacobian_lambda`` and
    ``output``. Evaluation methods are pure.
    """

    name = "problem"
    param_names: tuple[str, ...] = ()
    param_bounds: tuple[tuple[float, float], ...] = ()
    default_lambda: tuple[float, ...] = ()
    dof_count: int = 0

    @property
    def param_count(self) -> int:
        return len(self.param_names)

    def params(self, values=None, **named) -> ParamVec:
        vals = list(self.default_lambda if values is None else values)
        for key, v in named.items():
            vals[self.param_names.index(key)] = v
        return ParamVec(vals, self.param_names)

    def residual(self, u, lam) -> np.ndarray:
        raise NotImplementedError

    def jacobian_u(self, u, lam) -> np.ndarray:
        raise NotImplementedError

    def jacobian_lambda(self, u, lam, i: int) -> np.ndarray:
        raise NotImplementedError

    def jacobian_lambda_all(self, u, lam) -> np.ndarray:
        return np.column_stack([self.jacobian_lambda(u, lam, i) for i in range(self.param_count)])

    def output(self, u, lam) -> float:
        return float(np.max(np.abs(u)))

    def boundary_lift(self, lam) -> np.ndarray:
        """Simplest state consistent with the boundary data; a neutral initial guess."""
        return np.zeros(self.dof_count)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, N={self.dof_count})"


class FunctionProblem(Problem):
    """Problem assembled from plain callables; handy for small analytic systems.

    ``jac_lam(u, lam)`` must return an (N, p) array.
    """

    def __init__(
        self,
        residual: Callable,
        jac_u: Callable,
        jac_lam: Callable,
        dof_count: int,
        param_count: int,
        output: Callable | None = None,
        name: str = "function",
        default_lambda=None,
        param_bounds=None,
    ):
        self._res, self._ju, self._jl, self._out = residual, jac_u, jac_lam, output
        self.dof_count = dof_count
        self.name = name
        self.param_names = tuple(f"lambda_{i + 1}" for i in range(param_count))
        self.default_lambda = tuple(default_lambda or [0.0] * param_count)
        self.param_bounds = tuple(param_bounds or [(-np.inf, np.inf)] * param_count)

    def residual(self, u, lam):
        return np.atleast_1d(np.asarray(self._res(np.asarray(u, float), _lam(lam)), dtype=float))

    def jacobian_u(self, u, lam):
        n = self.dof_count
        return np.asarray(self._ju(np.asarray(u, float), _lam(lam)), dtype=float).reshape(n, n)

    def jacobian_lambda(self, u, lam, i):
        return self.jacobian_lambda_all(u, lam)[:, i]

    def jacobian_lambda_all(self, u, lam):
        n, p = self.dof_count, self.param_count
        return np.asarray(self._jl(np.asarray(u, float), _lam(lam)), dtype=float).reshape(n, p)

    def output(self, u, lam):
        if self._out is None:
            return super().output(u, lam)
        return float(self._out(np.asarray(u, float), _lam(lam)))


class Bratu(Problem):
    """lambda_2 * Lap(u) + lambda_1 * exp(u) = 0 with u = lambda_3 on the boundary."""

    param_names = ("lambda_1", "lambda_2", "lambda_3")
    default_lambda = (0.1, 1.0, 0.0)

    def __init__(self, grid: Grid):
        self.grid = grid
        self.name = f"bratu{grid.dim}d"
        self.dof_count = grid.dof_count
        self.L = build_laplacian(grid)
        # boundary coupling per unit Dirichlet value: count of boundary neighbours / h^2
        self.bvec = -self.L.sum(axis=1)
        self.param_bounds = ((0.0, 4.0), (0.0, 10.0), (0.0, 1.5)) if grid.dim == 1 else (
            (0.0, 7.0), (0.0, 6.0), (0.0, 1.5))

    def _diffusion(self, u, l3):
        return self.L @ u + l3 * self.bvec

    def residual(self, u, lam):
        l1, l2, l3 = _lam(lam)
        with np.errstate(over="ignore", invalid="ignore"):
            return l2 * self._diffusion(u, l3) + l1 * np.exp(u)

    def jacobian_u(self, u, lam):
        l1, l2, _ = _lam(lam)
        with np.errstate(over="ignore", invalid="ignore"):
            return l2 * self.L + np.diag(l1 * np.exp(u))

    def boundary_lift(self, lam):
        return np.full(self.dof_count, float(_lam(lam)[2]))

    def jacobian_lambda(self, u, lam, i):
        l1, l2, l3 = _lam(lam)
        if i == 0:
            with np.errstate(over="ignore"):
                return np.exp(u)
        if i == 1:
            return self._diffusion(u, l3)
        if i == 2:
            return l2 * self.bvec
        raise IndexError(i)


class AllenCahn(Problem):
    """lambda_2 * Lap(u) - u (u^2 - lambda_1) = 0 on [0, lambda_3]^d, u = 0 on the boundary.

    The domain length enters as a 1/lambda_3^2 factor on the reference Laplacian.
    """

    param_names = ("lambda_1", "lambda_2", "lambda_3")
    default_lambda = (0.0, 1.0, np.pi)
    probe_physical = {1: (2.19,), 2: (0.02, 2.19)}

    def __init__(self, grid: Grid):
        self.grid = grid
        self.name = f"allencahn{grid.dim}d"
        self.dof_count = grid.dof_count
        self.L = build_laplacian(grid)
        self._nodes = grid.nodes()
        self.param_bounds = ((0.0, 14.0), (1.0, 10.0), (np.pi, 3.8)) if grid.dim == 1 else (
            (0.0, 12.0), (1.0, 8.0), (np.pi, 3.8))

    @staticmethod
    def _check(l3):
        if not l3 > 0:
            raise ValueError("lambda_3 (domain length) must be positive")

    def residual(self, u, lam):
        l1, l2, l3 = _lam(lam)
        self._check(l3)
        return (l2 / l3**2) * (self.L @ u) - u * (u * u - l1)

    def jacobian_u(self, u, lam):
        l1, l2, l3 = _lam(lam)
        self._check(l3)
        return (l2 / l3**2) * self.L - np.diag(3.0 * u * u - l1)

    def jacobian_lambda(self, u, lam, i):
        l1, l2, l3 = _lam(lam)
        self._check(l3)
        if i == 0:
            return np.array(u, dtype=float)
        if i == 1:
            return (self.L @ u) / l3**2
        if i == 2:
            return -2.0 * l2 / l3**3 * (self.L @ u)
        raise IndexError(i)

    def probe_index(self, lam) -> int:
        l3 = _lam(lam)[2]
        target = np.array(self.probe_physical[self.grid.dim]) / l3
        return nearest_node(self._nodes, target if self.grid.dim == 2 else target[0])

    def output(self, u, lam):
        u = np.asarray(u)
        v = u[self.probe_index(lam)]
        sign = -1.0 if v < 0 else 1.0
        return sign * float(np.max(np.abs(u)))


class ModifiedAllenCahn(Problem):
    """rho(lambda_2) u'' - u (u^2 - lambda_1) = 0 on [0,1], u'(0) = 0, u(1) = 0,
    with rho(lambda_2) = 3 - (lambda_2 - 1)^2."""

    param_names = ("lambda_1", "lambda_2")
    default_lambda = (0.0, 1.0)
    param_bounds = ((0.0, 10.0), (0.0, 2.0))

    def __init__(self, grid: Grid):
        if grid.dim != 1:
            raise ValueError("modified Allen-Cahn is one-dimensional only")
        self.grid = grid
        self.name = "allencahn-mod1d"
        self.dof_count = grid.n_interior
        self.L = build_mixed_laplacian(grid.n_interior)

    @staticmethod
    def rho(l2):
        return 3.0 - (l2 - 1.0) ** 2

    def residual(self, u, lam):
        l1, l2 = _lam(lam)
        return self.rho(l2) * (self.L @ u) - u * (u * u - l1)

    def jacobian_u(self, u, lam):
        l1, l2 = _lam(lam)
        return self.rho(l2) * self.L - np.diag(3.0 * u * u - l1)

    def jacobian_lambda(self, u, lam, i):
        l1, l2 = _lam(lam)
        if i == 0:
            return np.array(u, dtype=float)
        if i == 1:
            return -2.0 * (l2 - 1.0) * (self.L @ u)
        raise IndexError(i)

    def output(self, u, lam):
        u = np.asarray(u)
        sign = -1.0 if u[0] < 0 else 1.0
        return sign * float(np.max(np.abs(u)))


def node_coordinates(problem: Problem) -> np.ndarray:
    """Reference-domain coordinates of the unknowns of a benchmark problem."""
    if isinstance(problem, ModifiedAllenCahn):
        return np.arange(problem.dof_count) / problem.dof_count
    return problem.grid.nodes()


def bump_seed(problem: Problem, center=None, width: float | None = None,
              amplitude: float = 0.1) -> np.ndarray:
    """Small off-centre Gaussian bump, an exploration guess for deflation.

    The bump is deliberately asymmetric so it overlaps both even and odd
    modes. Defaults: centre 0.15 (1D) or (0.3, 0.15) (2D), width 0.05 (1D)
    or 0.1 (2D).
    """
    x = node_coordinates(problem)
    if x.ndim == 1:
        c = 0.15 if center is None else float(center)
        w = 0.05 if width is None else width
        return amplitude * np.exp(-(((x - c) / w) ** 2))
    c = np.array((0.3, 0.15) if center is None else center, dtype=float)
    w = 0.1 if width is None else width
    return amplitude * np.exp(-((x - c) ** 2).sum(axis=1) / w**2)


def bratu_problem(grid: Grid) -> Bratu:
    return Bratu(grid)


def allen_cahn_problem(grid: Grid) -> AllenCahn:
    return AllenCahn(grid)


def modified_allen_cahn_problem(grid: Grid) -> ModifiedAllenCahn:
    return ModifiedAllenCahn(grid)


# default resolutions: 32 unknowns in 1D, 8x8 = 64 in 2D
PROBLEMS: dict[str, Callable[[], Problem]] = {
    "bratu1d": lambda: Bratu(Grid(1, 32)),
    "bratu2d": lambda: Bratu(Grid(2, 8)),
    "allencahn1d": lambda: AllenCahn(Grid(1, 32)),
    "allencahn2d": lambda: AllenCahn(Grid(2, 8)),
    "allencahn-mod1d": lambda: ModifiedAllenCahn(Grid(1, 32)),
}


def get_problem(problem_id: str) -> Problem:
    try:
        return PROBLEMS[problem_id]()
    except KeyError:
        raise KeyError(f"unknown problem {problem_id!r}; choose from {sorted(PROBLEMS)}") from None
