"""Dense Newton solver used as the corrector for continuation and deflation."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .core import NewtonConfig

DIVERGENCE_LIMIT = 1e12
PIVOT_RTOL = 1e-14


class Status(str, enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    MAX_ITER = "max_iter_exceeded"
    SINGULAR = "singular_jacobian"


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class StepRejected(Exception):
    """Raised by a step transform to abort the iteration as diverged."""


@dataclass(frozen=True, eq=False)
class NewtonResult:
    status: Status
    solution: np.ndarray | None
    iterations: int
    final_residual_norm: float

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def lu_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting, rejecting tiny pivots."""
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrixError
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    scale = np.max(np.abs(A))
    if not np.isfinite(scale) or np.min(np.abs(np.diag(lu))) < PIVOT_RTOL * max(scale, 1e-300):
        raise SingularMatrixError("singular matrix")
    return sla.lu_solve((lu, piv), b, check_finite=False)


def newton_solve(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    jacobian_fn: Callable[[np.ndarray], np.ndarray],
    u0,
    cfg: NewtonConfig = NewtonConfig(),
    step_transform: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    accept: Callable[[np.ndarray], bool] | None = None,
) -> NewtonResult:
    """Newton iteration u <- u + du with J(u) du = -G(u).

    ``step_transform(du, u)`` may rescale the step (deflation) or raise
    ``StepRejected``; ``accept(u)`` can veto convergence to a given root,
    in which case the solve reports divergence.
    """
    u = np.array(u0, dtype=float).reshape(-1)
    if not np.all(np.isfinite(u)):
        return NewtonResult(Status.DIVERGED, None, 0, np.inf)
    r = np.atleast_1d(residual_fn(u))
    rnorm = float(np.linalg.norm(r))
    for it in range(cfg.max_iter + 1):
        if not np.isfinite(rnorm) or rnorm > DIVERGENCE_LIMIT:
            return NewtonResult(Status.DIVERGED, None, it, rnorm)
        if rnorm <= cfg.tol:
            if accept is not None and not accept(u):
                return NewtonResult(Status.DIVERGED, None, it, rnorm)
            return NewtonResult(Status.CONVERGED, u, it, rnorm)
        if it == cfg.max_iter:
            break
        try:
            du = lu_solve(np.atleast_2d(jacobian_fn(u)), -r)
        except (SingularMatrixError, ValueError):
            return NewtonResult(Status.SINGULAR, None, it, rnorm)
        if step_transform is not None:
            try:
                du = step_transform(du, u)
            except StepRejected:
                return NewtonResult(Status.DIVERGED, None, it, rnorm)
        u = u + du
        if not np.all(np.isfinite(u)) or np.linalg.norm(u) > DIVERGENCE_LIMIT:
            return NewtonResult(Status.DIVERGED, None, it + 1, np.inf)
        r = np.atleast_1d(residual_fn(u))
        rnorm = float(np.linalg.norm(r))
    return NewtonResult(Status.MAX_ITER, None, cfg.max_iter, rnorm)
