"""Zigzag tracking of bifurcation curves in a two-parameter plane.

The tracker marches along straight lines in (lambda_1, lambda_2) and
labels every visited parameter point with the number of distinct
solutions it can find there. When the label changes the critical curve has
been crossed: the crossing is bracketed, the march goes on for k more
steps, and then turns onto a line of opposite inclination so the next leg
crosses back. Repeating this walks up along the curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .continuation import PathConstraint, freeze
from .core import Bounds, DeflationConfig, NewtonConfig, ParamVec
from .deflation import DeflationSet, deflated_solve, discover_all
from .newton import newton_solve


@dataclass(frozen=True)
class ZigzagConfig:
    theta: float = math.pi / 20
    k: int = 5
    ds: float = 0.01
    # intervals for (lambda_1, lambda_2); the march stops when it leaves them
    lambda_bounds: tuple[tuple[float, float], ...] = ((0.0, 10.0), (0.0, 10.0))
    n_max: int = 4
    max_points: int = 20000

    def __post_init__(self):
        if not 0 < self.theta < math.pi / 2:
            raise ValueError("theta must lie in (0, pi/2); use the travel sign for other quadrants")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.ds > 0:
            raise ValueError("ds must be positive")
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if len(self.lambda_bounds) != 2:
            raise ValueError("lambda_bounds needs intervals for lambda_1 and lambda_2")


@dataclass(frozen=True)
class RegionLabel:
    solution_count: int

    def __str__(self) -> str:
        return str(self.solution_count)


def zigzag_line(tilde, theta: float, sigma: int) -> PathConstraint:
    """Line through ``tilde`` = (lambda_1, lambda_2) with slope sigma * tan(theta)."""
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    if math.isclose(math.cos(theta), 0.0, abs_tol=1e-15):
        raise ValueError("theta = pi/2 gives a vertical line")
    t1, t2 = float(tilde[0]), float(tilde[1])
    slope = sigma * math.tan(theta)

    def grad(v):
        g = np.zeros(len(v))
        g[0], g[1] = -slope, 1.0
        return g

    return PathConstraint(lambda v: (v[1] - t2) - slope * (v[0] - t1), grad,
                          f"zigzag({t1:.6g},{t2:.6g};{'+' if sigma > 0 else '-'})")


def travel_direction(theta: float, sigma: int) -> np.ndarray:
    """Unit step along a zigzag line: sigma in lambda_1, always upward in lambda_2."""
    return np.array([sigma * math.cos(theta), math.sin(theta)])


def _distinct(u, found, tol=1e-6) -> bool:
    return all(np.linalg.norm(u - f) > tol for f in found)


def classify_region(problem, lam: ParamVec, warm_starts, defl_cfg: DeflationConfig,
                    newton_cfg: NewtonConfig, n_max: int = 4, seed=None
                    ) -> tuple[RegionLabel, list[np.ndarray]]:
    """Count distinct solutions at ``lam`` (capped at n_max).

    Each warm start is solved first, plain Newton then deflated against the
    roots already collected. Then deflation from ``seed`` looks for more.
    If nothing was found, plain Newton from ``seed`` gets one attempt before
    deflation. Returns the label and the solutions found.
    """
    found: list[np.ndarray] = []

    def plain(u0):
        return newton_solve(lambda v: problem.residual(v, lam),
                            lambda v: problem.jacobian_u(v, lam), u0, newton_cfg)

    for w in warm_starts:
        if len(found) >= n_max:
            break
        r = plain(w)
        if not (r.converged and _distinct(r.solution, found)) and found:
            r = deflated_solve(problem, lam, w, DeflationSet(tuple(found), defl_cfg), newton_cfg)
        if r.converged and _distinct(r.solution, found):
            found.append(r.solution)
    if seed is not None and len(found) < n_max:
        if not found:
            r = plain(seed)
            if r.converged:
                found.append(r.solution)
        if found and len(found) < n_max:
            cfg = DeflationConfig(defl_cfg.power, defl_cfg.shift, n_max - len(found))
            found += discover_all(problem, lam, seed, cfg, newton_cfg, known=found)
    return RegionLabel(min(len(found), n_max)), found


@dataclass(eq=False)
class Segment:
    constraint: PathConstraint
    sigma: int
    points: list[tuple[ParamVec, RegionLabel]] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class Crossing:
    bracket_lo: ParamVec
    bracket_hi: ParamVec
    midpoint: ParamVec
    label_lo: RegionLabel
    label_hi: RegionLabel


@dataclass(eq=False)
class ZigzagTrace:
    segments: list[Segment] = field(default_factory=list)
    crossings: list[Crossing] = field(default_factory=list)
    # why the march stopped
    stop_reason: str = ""

    def midpoints(self) -> np.ndarray:
        if not self.crossings:
            return np.empty((0, 2))
        return np.array([c.midpoint.values for c in self.crossings])


def detect_curve(problem, zz: ZigzagConfig, start: ParamVec, u0, defl_cfg: DeflationConfig,
                 newton_cfg: NewtonConfig = NewtonConfig(), seed=None) -> ZigzagTrace:
    """Bracket a bifurcation curve by a zigzag march starting from ``start``.

    The first leg is the horizontal line through ``start`` travelling in
    +lambda_1. Parameters beyond lambda_2 keep their ``start`` values.
    ``u0`` is the initial guess at ``start`` and ``seed`` (default ``u0``)
    the exploration guess used wherever warm starts are not enough.
    """
    lam = start if isinstance(start, ParamVec) else problem.params(start)
    seed = np.asarray(u0 if seed is None else seed, dtype=float)
    box = Bounds(zz.lambda_bounds)
    if not box.contains(ParamVec(lam.values[:2])):
        raise ValueError("start lies outside the zigzag bounds")

    trace = ZigzagTrace()
    label, sols = classify_region(problem, lam, [np.asarray(u0, dtype=float)], defl_cfg,
                                  newton_cfg, zz.n_max, seed)
    seg = Segment(freeze(1, lam[1], "start"), 1, [(lam, label)])
    trace.segments.append(seg)
    direction = np.array([1.0, 0.0])
    countdown = None
    visited = 1

    while True:
        if visited >= zz.max_points:
            trace.stop_reason = "max_points"
            break
        vals = lam.values.copy()
        vals[:2] += zz.ds * direction
        nxt = lam.replace(vals)
        if not box.contains(ParamVec(vals[:2])):
            trace.stop_reason = "left_bounds"
            break
        new_label, new_sols = classify_region(problem, nxt, sols, defl_cfg, newton_cfg,
                                              zz.n_max, seed)
        visited += 1
        seg.points.append((nxt, new_label))
        if new_label != label:
            mid = lam.replace(0.5 * (lam.values + nxt.values))
            trace.crossings.append(Crossing(lam, nxt, mid, label, new_label))
            countdown = zz.k
        lam, label, sols = nxt, new_label, new_sols
        if countdown is not None:
            countdown -= 1
            if countdown == 0:
                countdown = None
                sigma = -seg.sigma
                seg = Segment(zigzag_line(lam.values[:2], zz.theta, sigma), sigma,
                              [(lam, label)])
                trace.segments.append(seg)
                direction = travel_direction(zz.theta, sigma)
    return trace


def detect_surface(problem, zz: ZigzagConfig, lambda3_grid, start_rule, u0,
                   defl_cfg: DeflationConfig, newton_cfg: NewtonConfig = NewtonConfig(),
                   seed=None) -> list[tuple[float, ZigzagTrace | None, str | None]]:
    """Run detect_curve on each lambda_3 slice.

    ``start_rule(lambda_3)`` returns the (lambda_1, lambda_2) start of that
    slice. ``u0`` and ``seed`` are arrays or callables of the slice's start
    ParamVec, so the guesses can follow boundary data that depends on
    lambda_3. A failing slice is reported with its error message and does
    not stop the others.
    """
    out = []
    for l3 in lambda3_grid:
        l1, l2 = start_rule(l3)
        try:
            lam = problem.params([l1, l2, l3] + list(problem.default_lambda[3:]))
            guess = u0(lam) if callable(u0) else u0
            explore = seed(lam) if callable(seed) else seed
            out.append((float(l3),
                        detect_curve(problem, zz, lam, guess, defl_cfg, newton_cfg, explore),
                        None))
        except (ValueError, np.linalg.LinAlgError) as exc:
            out.append((float(l3), None, str(exc)))
    return out
