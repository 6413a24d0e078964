"""Brute-force reference values that do not touch the continuation code.

Only the problem definitions and the plain Newton solver are used here, so
these numbers can independently check what the diagram and detector report.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .core import NewtonConfig, ParamVec
from .newton import newton_solve

MULTIPLICITY_RTOL = 1e-8


@dataclass(frozen=True)
class OracleReport:
    quantity: str
    value: float
    method: str
    resolution: dict = field(default_factory=dict)
    values: tuple = ()

    def to_dict(self) -> dict:
        return asdict(self)


def _params(problem, lam) -> ParamVec:
    return lam if isinstance(lam, ParamVec) else problem.params(lam)


def eigen_bifurcation_oracle(problem, lam=None, index: int = 0, max_value: float | None = None
                             ) -> list[float]:
    """Parameter values where the linearization about u = 0 turns singular.

    Requires G(0, lambda) = 0 and a Jacobian at zero of the form
    A(other params) + lambda_index * I. Values are sorted ascending and
    repeated according to multiplicity.
    """
    lam = _params(problem, lam)
    zero = np.zeros(problem.dof_count)
    base = lam.with_value(index, 0.0)
    unit = lam.with_value(index, 1.0)
    if np.linalg.norm(problem.residual(zero, base)) > 0 or np.linalg.norm(
            problem.residual(zero, unit)) > 0:
        raise ValueError("u = 0 is not a solution for every parameter value; no trivial branch")
    J0 = problem.jacobian_u(zero, base)
    shift = problem.jacobian_u(zero, unit) - J0
    if not np.allclose(shift, np.eye(problem.dof_count), atol=1e-12):
        raise ValueError("linearization is not affine in the parameter with unit coefficient")
    if np.allclose(J0, J0.T, atol=1e-12 * max(1.0, np.abs(J0).max())):
        ev = np.linalg.eigvalsh(J0)
    else:
        ev = np.linalg.eigvals(J0)
        if np.max(np.abs(ev.imag)) > 1e-8 * max(1.0, np.abs(ev).max()):
            raise ValueError("linearization has a complex spectrum")
        ev = ev.real
    vals = np.sort(-ev)
    if max_value is not None:
        vals = vals[vals <= max_value]
    return [float(v) for v in vals]


def group_multiplicities(values, rtol: float = MULTIPLICITY_RTOL) -> list[tuple[float, int]]:
    """Collapse a sorted value list into (value, multiplicity) pairs."""
    out: list[tuple[float, int]] = []
    for v in values:
        if out and abs(v - out[-1][0]) <= rtol * max(1.0, abs(v)):
            out[-1] = (out[-1][0], out[-1][1] + 1)
        else:
            out.append((float(v), 1))
    return out


def _converges(problem, lam: ParamVec, index: int, value: float, cfg: NewtonConfig) -> bool:
    trial = lam.with_value(index, value)
    res = newton_solve(lambda u: problem.residual(u, trial),
                       lambda u: problem.jacobian_u(u, trial),
                       np.zeros(problem.dof_count), cfg)
    return res.converged


def fold_bisection_oracle(problem, lam=None, index: int = 0, lo: float | None = None,
                          hi: float | None = None, resolution: float = 1e-4,
                          newton_cfg: NewtonConfig = NewtonConfig(max_iter=500),
                          samples: int = 33) -> float:
    """Existence boundary in one parameter, by bisection on "Newton from 0 converges".

    The predicate is first sampled on a uniform grid over [lo, hi] and must
    switch from true to false exactly once; otherwise ValueError. Returns
    the largest value known to converge.
    """
    lam = _params(problem, lam)
    lo = problem.param_bounds[index][0] if lo is None else lo
    hi = problem.param_bounds[index][1] if hi is None else hi
    grid = np.linspace(lo, hi, samples)
    ok = [_converges(problem, lam, index, v, newton_cfg) for v in grid]
    switches = sum(a != b for a, b in zip(ok, ok[1:]))
    if not ok[0] or ok[-1] or switches != 1:
        raise ValueError(f"convergence predicate not monotone on [{lo:g}, {hi:g}]: {ok}")
    k = ok.index(False)
    a, b = float(grid[k - 1]), float(grid[k])
    while b - a > resolution:
        mid = 0.5 * (a + b)
        if _converges(problem, lam, index, mid, newton_cfg):
            a = mid
        else:
            b = mid
    return a


def eigen_report(problem, lam=None, index: int = 0, count: int = 6) -> OracleReport:
    vals = eigen_bifurcation_oracle(problem, lam, index)[:count]
    return OracleReport(
        "linearized_bifurcation_values", vals[0],
        "eigenvalues of the Jacobian at u=0", {"dof_count": problem.dof_count},
        tuple(group_multiplicities(vals)))


def fold_report(problem, lam=None, index: int = 0, resolution: float = 1e-4) -> OracleReport:
    v = fold_bisection_oracle(problem, lam, index, resolution=resolution)
    return OracleReport("existence_boundary", v, "bisection on Newton convergence from u=0",
                        {"dof_count": problem.dof_count, "resolution": resolution})
