"""Pseudo-arclength predictor-corrector along paths in parameter space.

With p parameters the path is the curve cut out by p-1 scalar constraints
g_i(lambda) = 0. The extended unknown is (u, lambda) of size N + p, closed
by the constraints and the hyperplane condition

    N(u, lambda) = du0.(u - u0) + dlam0.(lambda - lambda0) - ds = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import ContinuationConfig, NewtonConfig, ParamVec, Point, Tangent
from .newton import NewtonResult, SingularMatrixError, lu_solve, newton_solve


class TangentError(np.linalg.LinAlgError):
    pass


class StepFailed(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PathConstraint:
    """Scalar constraint g(lambda) = 0 with analytic gradient over the full parameter vector."""

    fn: Callable[[np.ndarray], float]
    grad_fn: Callable[[np.ndarray], np.ndarray]
    label: str = "g"

    def eval(self, lam) -> float:
        return float(self.fn(_vals(lam)))

    def grad(self, lam) -> np.ndarray:
        return np.asarray(self.grad_fn(_vals(lam)), dtype=float)

    __call__ = eval


def _vals(lam) -> np.ndarray:
    return lam.values if isinstance(lam, ParamVec) else np.asarray(lam, dtype=float)


def _unit(p: int, i: int, scale: float = 1.0) -> np.ndarray:
    e = np.zeros(p)
    e[i] = scale
    return e


def freeze(index: int, value: float, label: str | None = None) -> PathConstraint:
    """Constraint lambda_index = value."""
    return PathConstraint(
        lambda v: v[index] - value,
        lambda v: _unit(len(v), index),
        label or f"lambda_{index + 1}={value:g}",
    )


def line_through(point, direction) -> PathConstraint:
    """Straight line in the (lambda_1, lambda_2) plane through ``point`` along ``direction``."""
    p1, p2 = map(float, point)
    d1, d2 = map(float, direction)
    # normal (-d2, d1)
    return PathConstraint(
        lambda v: d1 * (v[1] - p2) - d2 * (v[0] - p1),
        lambda v: _plane_grad(len(v), -d2, d1),
        f"line({p1:g},{p2:g};{d1:g},{d2:g})",
    )


def _plane_grad(p: int, g1: float, g2: float) -> np.ndarray:
    g = np.zeros(p)
    g[0], g[1] = g1, g2
    return g


PATH_KINDS = ("horizontal", "diagonal", "elliptic")


def path_family(kind: str, bounds, n: int) -> list[PathConstraint]:
    """The n+1 horizontal / diagonal / elliptic paths over the box [a,b] x [c,d].

    Level i uses the intercepts c + i*(d-c)/n on the lambda_2 axis and
    a + i*(b-a)/n on the lambda_1 axis.
    """
    a, b, c, d = map(float, bounds)
    if not (a < b and c < d):
        raise ValueError("need a < b and c < d")
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind not in PATH_KINDS:
        raise ValueError(f"unknown path family {kind!r}")
    h1, h2 = (d - c) / n, (b - a) / n
    out = []
    for i in range(n + 1):
        l2i, l1i = c + i * h1, a + i * h2
        if kind == "horizontal":
            out.append(PathConstraint(
                lambda v, l2i=l2i: v[1] - l2i,
                lambda v: _plane_grad(len(v), 0.0, 1.0),
                f"horizontal[{i}]"))
            continue
        if l2i == 0.0 or l1i == 0.0:
            raise ValueError(f"{kind} path {i} has a zero intercept")
        if kind == "diagonal":
            out.append(PathConstraint(
                lambda v, l1i=l1i, l2i=l2i: v[1] / l2i + v[0] / l1i - 1.0,
                lambda v, l1i=l1i, l2i=l2i: _plane_grad(len(v), 1.0 / l1i, 1.0 / l2i),
                f"diagonal[{i}]"))
        else:
            out.append(PathConstraint(
                lambda v, l1i=l1i, l2i=l2i: v[1] ** 2 / l2i**2 + v[0] ** 2 / l1i**2 - 1.0,
                lambda v, l1i=l1i, l2i=l2i: _plane_grad(
                    len(v), 2.0 * v[0] / l1i**2, 2.0 * v[1] / l2i**2),
                f"elliptic[{i}]"))
    return out


def complete_constraints(param_count: int, constraints: Sequence[PathConstraint],
                         lam: ParamVec) -> list[PathConstraint]:
    """Pad ``constraints`` to p-1 entries by freezing the trailing parameters at ``lam``."""
    cons = list(constraints)
    if len(cons) > param_count - 1:
        raise ValueError(f"{len(cons)} constraints given for {param_count} parameters")
    for idx in range(param_count - 1, 0, -1):
        if len(cons) == param_count - 1:
            break
        if any(abs(c.grad(lam)[idx]) > 0 and np.count_nonzero(c.grad(lam)) == 1 for c in cons):
            continue  # already pinned
        cons.append(freeze(idx, lam[idx]))
    return cons


@dataclass(frozen=True, eq=False)
class ExtendedPoint:
    point: Point
    tangent: Tangent


def _orient(t: Tangent, prev: Tangent | None, direction: int) -> Tangent:
    if prev is not None:
        return t if t.dot(prev) >= 0 else -t
    comps = np.concatenate([t.dlam, t.du])
    lead = int(np.argmax(np.abs(comps) > 1e-12))
    return t if comps[lead] * direction >= 0 else -t


def tangent_single(problem, point: Point, prev_tangent: Tangent | None = None,
                   direction: int = 1, free: int = 0) -> Tangent:
    """Closed-form tangent with one free parameter (others held fixed).

    Solves w = G_u^{-1} G_lambda, |dlam| = (1 + |w|^2)^{-1/2}, du = -w dlam.
    Fails at turning points where G_u is singular.
    """
    Gu = problem.jacobian_u(point.u, point.lam)
    Gl = problem.jacobian_lambda(point.u, point.lam, free)
    try:
        w = lu_solve(Gu, Gl)
    except SingularMatrixError as exc:
        raise TangentError("turning point tangent undefined") from exc
    dl = 1.0 / np.sqrt(1.0 + w @ w)
    dlam = _unit(problem.param_count, free, dl)
    return _orient(Tangent(-w * dl, dlam), prev_tangent, direction)


def tangent_matrix(problem, point: Point, constraints: Sequence[PathConstraint]) -> np.ndarray:
    """(N+p-1) x (N+p) matrix [[G_u, G_lambda], [0, grad g_i]]."""
    N, p = problem.dof_count, problem.param_count
    A = np.zeros((N + len(constraints), N + p))
    A[:N, :N] = problem.jacobian_u(point.u, point.lam)
    A[:N, N:] = problem.jacobian_lambda_all(point.u, point.lam)
    for k, c in enumerate(constraints):
        A[N + k, N:] = c.grad(point.lam)
    return A


def tangent_multi(problem, point: Point, constraints: Sequence[PathConstraint],
                  prev_tangent: Tangent | None = None, direction: int = 1) -> Tangent:
    """Unit null vector of the differentiated residual and constraint rows."""
    N, p = problem.dof_count, problem.param_count
    if len(constraints) != p - 1:
        raise ValueError(f"need exactly {p - 1} path constraints, got {len(constraints)}")
    A = tangent_matrix(problem, point, constraints)
    x = None
    if prev_tangent is not None:
        B = np.vstack([A, prev_tangent.vector()])
        rhs = np.zeros(N + p)
        rhs[-1] = 1.0
        try:
            x = lu_solve(B, rhs)
        except SingularMatrixError:
            x = None
    if x is None:
        _, sv, vt = np.linalg.svd(A)
        if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
            raise TangentError(f"tangent undefined: rank deficient (singular values {sv[-2:]})")
        x = vt[-1]
    return _orient(Tangent(x[:N], x[N:]), prev_tangent, direction)


def predictor(ext: ExtendedPoint, ds: float) -> Point:
    pt, t = ext.point, ext.tangent
    return Point(pt.u + ds * t.du, pt.lam.replace(pt.lam.values + ds * t.dlam), pt.s + ds)


def hyperplane(ext: ExtendedPoint, u, lam, ds: float) -> float:
    pt, t = ext.point, ext.tangent
    return float(t.du @ (u - pt.u) + t.dlam @ (_vals(lam) - pt.lam.values) - ds)


@dataclass(frozen=True, eq=False)
class CorrectorResult:
    result: NewtonResult
    point: Point | None

    @property
    def converged(self) -> bool:
        return self.result.converged


def corrector(problem, constraints: Sequence[PathConstraint], ext: ExtendedPoint, ds: float,
              newton_cfg: NewtonConfig = NewtonConfig()) -> CorrectorResult:
    """Newton on the bordered system [G; g_1..g_{p-1}; N] in the unknown (u, lambda)."""
    N, p = problem.dof_count, problem.param_count
    names = ext.point.lam.names
    t = ext.tangent
    border = t.vector()

    def split(z):
        return z[:N], z[N:]

    def residual(z):
        u, lv = split(z)
        rows = [problem.residual(u, lv), [c.eval(lv) for c in constraints],
                [hyperplane(ext, u, lv, ds)]]
        return np.concatenate([np.asarray(r, dtype=float) for r in rows])

    def jacobian(z):
        u, lv = split(z)
        A = tangent_matrix(problem, Point(u, ParamVec(lv, names)), constraints)
        return np.vstack([A, border])

    pred = predictor(ext, ds)
    z0 = np.concatenate([pred.u, pred.lam.values])
    res = newton_solve(residual, jacobian, z0, newton_cfg)
    if not res.converged:
        return CorrectorResult(res, None)
    u, lv = split(res.solution)
    return CorrectorResult(res, Point(u, ParamVec(lv, names), ext.point.s + ds))


def start(problem, u, lam: ParamVec, constraints: Sequence[PathConstraint],
          direction: int = 1) -> ExtendedPoint:
    pt = Point(np.asarray(u, dtype=float), lam, 0.0)
    return ExtendedPoint(pt, tangent_multi(problem, pt, constraints, None, direction))


def arclength_step(problem, constraints: Sequence[PathConstraint], ext: ExtendedPoint,
                   cfg: ContinuationConfig = ContinuationConfig(),
                   newton_cfg: NewtonConfig = NewtonConfig(), ds: float | None = None
                   ) -> ExtendedPoint:
    """One predictor-corrector step; halves ds on failure down to cfg.ds_min.

    The tangent at the new point is the bordered null vector oriented along
    the old tangent. Raises StepFailed when no step size succeeds.
    """
    ds = cfg.ds if ds is None else ds
    while ds >= cfg.ds_min * (1 - 1e-12):
        cr = corrector(problem, constraints, ext, ds, newton_cfg)
        if cr.converged:
            try:
                t = tangent_multi(problem, cr.point, constraints, ext.tangent)
            except TangentError:
                t = None
            if t is not None:
                return ExtendedPoint(cr.point, t)
        ds /= 2
    raise StepFailed(f"arclength step failed down to ds_min={cfg.ds_min:g}")
