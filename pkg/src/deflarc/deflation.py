"""Deflation: repel Newton from known roots to discover coexisting solutions.

The deflated residual is F(u) = eta(u) G(u) with
eta(u) = prod_i (||u - u_i||^-power + shift).
Its Newton step is a scalar multiple of the undeflated step, so deflation
costs one dot product per iteration on top of the plain Newton solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DeflationConfig, NewtonConfig, ParamVec
from .newton import NewtonResult, StepRejected, newton_solve

DISTINCT_TOL = 1e-6
SINGULAR_STEP_TOL = 1e-12


class DeflationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DeflationSet:
    known: tuple[np.ndarray, ...] = ()
    cfg: DeflationConfig = DeflationConfig()

    def __post_init__(self):
        known = tuple(np.asarray(k, dtype=float) for k in self.known)
        for i in range(len(known)):
            for j in range(i):
                if np.linalg.norm(known[i] - known[j]) <= DISTINCT_TOL:
                    raise ValueError("deflated solutions must be pairwise distinct")
        object.__setattr__(self, "known", known)

    def __len__(self) -> int:
        return len(self.known)

    def add(self, u) -> "DeflationSet":
        return DeflationSet(self.known + (np.asarray(u, dtype=float),), self.cfg)

    def distances(self, u) -> np.ndarray:
        if not self.known:
            return np.empty(0)
        return np.linalg.norm(np.asarray(u)[None, :] - np.array(self.known), axis=1)

    def is_new(self, u, tol: float = DISTINCT_TOL) -> bool:
        return bool(np.all(self.distances(u) > tol))


def _terms(u, dset: DeflationSet):
    d = dset.distances(u)
    if np.any(d == 0.0):
        raise DeflationError("at deflated root")
    inv = d ** (-dset.cfg.power)
    return d, inv, inv + dset.cfg.shift


def deflation_factor(u, dset: DeflationSet) -> float:
    """eta(u): product of the per-root deflation factors (1 for an empty set)."""
    if not dset.known:
        return 1.0
    _, _, m = _terms(u, dset)
    return float(np.prod(m))


def deflation_gradient(u, dset: DeflationSet) -> np.ndarray:
    """Gradient of eta(u) with respect to u."""
    u = np.asarray(u, dtype=float)
    if not dset.known:
        return np.zeros_like(u)
    d, inv, m = _terms(u, dset)
    p = dset.cfg.power
    coeff = -p * d ** (-p - 2) / m
    diffs = u[None, :] - np.array(dset.known)
    return float(np.prod(m)) * (coeff @ diffs)


def deflated_newton_step(delta_u_G, u, dset: DeflationSet) -> np.ndarray:
    """Turn the undeflated Newton step into the Newton step of eta*G.

    Uses the Sherman-Morrison identity: the deflated step is tau * delta_u_G
    with tau = 1 / (1 - grad(eta).delta_u_G / eta).
    """
    delta_u_G = np.asarray(delta_u_G, dtype=float)
    if not dset.known:
        return delta_u_G.copy()
    eta = deflation_factor(u, dset)
    d = float(deflation_gradient(u, dset) @ delta_u_G) / eta
    if abs(1.0 - d) < SINGULAR_STEP_TOL:
        raise DeflationError("deflation step singular")
    tau = 1.0 + d / (1.0 - d)
    return tau * delta_u_G


def deflated_solve(problem, lam: ParamVec, u0, dset: DeflationSet,
                   newton_cfg: NewtonConfig = NewtonConfig()) -> NewtonResult:
    """Newton on G(., lam) with every step rescaled by deflation.

    Convergence is judged on the undeflated residual and additionally
    requires the root to be farther than DISTINCT_TOL from every known one.
    """

    def transform(du, u):
        try:
            return deflated_newton_step(du, u, dset)
        except DeflationError as exc:
            raise StepRejected(str(exc)) from exc

    if not dset.known:
        transform = None

    return newton_solve(
        lambda u: problem.residual(u, lam),
        lambda u: problem.jacobian_u(u, lam),
        u0,
        newton_cfg,
        step_transform=transform,
        accept=dset.is_new,
    )


def discover_all(problem, lam: ParamVec, u0, cfg: DeflationConfig = DeflationConfig(),
                 newton_cfg: NewtonConfig = NewtonConfig(), known=()) -> list[np.ndarray]:
    """Find coexisting solutions at fixed ``lam`` by repeated deflation from ``u0``.

    Stops at the first failed solve or after ``cfg.max_solutions`` roots.
    ``known`` pre-seeds the deflation set; those roots are not returned.
    """
    dset = DeflationSet(tuple(known), cfg)
    found: list[np.ndarray] = []
    while len(found) < cfg.max_solutions:
        res = deflated_solve(problem, lam, u0, dset, newton_cfg)
        if not res.converged:
            break
        found.append(res.solution)
        dset = dset.add(res.solution)
    return found
