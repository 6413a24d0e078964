"""Deflated arclength continuation: multi-branch bifurcation diagrams.

One driver branch is followed by pseudo-arclength steps along the path.
At every accepted driver parameter the other known branches are re-solved
by deflated Newton warm-started from their previous point, and a discovery
pass (deflation from a fixed exploration seed) looks for branches nobody
knows about yet.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .continuation import (
    ExtendedPoint,
    PathConstraint,
    StepFailed,
    TangentError,
    arclength_step,
    complete_constraints,
    corrector,
    path_family,
    predictor,
    start,
    tangent_multi,
)
from .core import (
    Bounds,
    ContinuationConfig,
    DeflationConfig,
    NewtonConfig,
    ParamVec,
    Point,
    Tangent,
)
from .deflation import DISTINCT_TOL, DeflationSet, deflated_solve, discover_all
from .newton import newton_solve

JUMP_GUARD = 10.0


class EventKind(str, enum.Enum):
    NEW_BRANCHES = "new_branches"
    FOLD = "fold"
    EXISTENCE_BOUNDARY = "existence_boundary"


class BranchStatus(str, enum.Enum):
    COMPLETED = "completed"
    STEP_FAILED = "step_failed"
    LEFT_BOUNDS = "left_bounds"


@dataclass(eq=False)
class BranchPoint:
    point: Point
    q: float
    step: int
    tangent: Tangent | None = None


@dataclass(eq=False)
class Branch:
    id: int
    points: list[BranchPoint] = field(default_factory=list)
    parent_event: int | None = None
    status: BranchStatus = BranchStatus.COMPLETED

    @property
    def last(self) -> BranchPoint:
        return self.points[-1]

    def lambdas(self, index: int = 0) -> np.ndarray:
        return np.array([bp.point.lam[index] for bp in self.points])

    def outputs(self) -> np.ndarray:
        return np.array([bp.q for bp in self.points])

    def states(self) -> np.ndarray:
        return np.array([bp.point.u for bp in self.points])


@dataclass(eq=False)
class BifurcationEvent:
    id: int
    kind: EventKind
    bracket_lo: ParamVec
    bracket_hi: ParamVec
    branch_ids: list[int]
    # refined parameter of a fold; None for other kinds
    location: ParamVec | None = None

    @property
    def count(self) -> int:
        return len(self.branch_ids)

    def contains(self, value: float, index: int = 0, slack: float = 0.0) -> bool:
        lo, hi = sorted((self.bracket_lo[index], self.bracket_hi[index]))
        return lo - slack <= value <= hi + slack


@dataclass(eq=False)
class BifurcationDiagram:
    problem: str
    path_label: str
    branches: list[Branch] = field(default_factory=list)
    events: list[BifurcationEvent] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    # error message if the diagram could not even start
    failure: str | None = None

    def branch(self, bid: int) -> Branch:
        return next(b for b in self.branches if b.id == bid)

    def events_of(self, kind: EventKind) -> list[BifurcationEvent]:
        return [e for e in self.events if e.kind is kind]

    @property
    def point_count(self) -> int:
        return sum(len(b.points) for b in self.branches)


def within_guard(u_new, u_prev, ds: float, guard: float = JUMP_GUARD) -> bool:
    return float(np.linalg.norm(u_new - u_prev)) <= guard * ds * (1.0 + float(np.linalg.norm(u_prev)))


@dataclass(eq=False)
class Assignment:
    """Outcome of matching solutions at one parameter value to branches."""

    assigned: dict[int, np.ndarray]
    new: list[np.ndarray]
    missed: list[int]


def assign_to_branches(solutions, tags, branches: dict[int, np.ndarray], ds: float,
                       guard: float = JUMP_GUARD, continues=None) -> Assignment:
    """Match solutions to branches by warm-start provenance plus the jump guard.

    ``tags[i]`` is the id of the branch whose previous point warm-started
    solution i, or None if it came from discovery. ``branches`` maps branch
    id to that previous point. A tagged solution outside the guard is given
    a second chance through ``continues(tag, u)`` when supplied. Solutions
    that stay unmatched open new branches; duplicates (within DISTINCT_TOL
    of a solution already kept) are dropped and their branch counts as missed.
    """
    assigned: dict[int, np.ndarray] = {}
    rest: list[tuple[np.ndarray, int | None]] = []
    for u, tag in zip(solutions, tags):
        u = np.asarray(u, dtype=float)
        if tag is not None and tag not in assigned and (
                within_guard(u, branches[tag], ds, guard)
                or (continues is not None and continues(tag, u))):
            assigned[tag] = u
        else:
            rest.append((u, tag))
    kept = list(assigned.values())
    new: list[np.ndarray] = []
    missed = [t for t in branches if t not in assigned]
    for u, _ in rest:
        if any(np.linalg.norm(u - k) <= DISTINCT_TOL for k in kept):
            continue
        kept.append(u)
        new.append(u)
    return Assignment(assigned, new, missed)


def _close(a, b) -> bool:
    return bool(np.linalg.norm(a - b) <= 1e-6 * (1.0 + float(np.linalg.norm(b))))


def track_endpoints(problem, u_prev, lam_prev: ParamVec, lam_new: ParamVec,
                    newton_cfg: NewtonConfig, substeps=(4, 16, 64)) -> list:
    """Carry u_prev to lam_new by plain Newton over m equal parameter substeps, for each m.

    Entry i is the endpoint for substeps[i], or None if a substep failed.
    """
    out = []
    for m in substeps:
        u = np.asarray(u_prev, dtype=float)
        for k in range(1, m + 1):
            lam = lam_prev.replace(lam_prev.values + (k / m) * (lam_new.values - lam_prev.values))
            r = newton_solve(lambda v: problem.residual(v, lam),
                             lambda v: problem.jacobian_u(v, lam), u, newton_cfg)
            if not r.converged:
                u = None
                break
            u = r.solution
        out.append(u)
    return out


def agreed_endpoint(ends) -> np.ndarray | None:
    """First endpoint that the next finer substep count reproduces.

    A coarse substep can hop onto a neighbouring branch; agreement between
    two refinements is the evidence that it did not.
    """
    for a, b in zip(ends, ends[1:]):
        if a is not None and b is not None and _close(a, b):
            return b
    return None


def homotopy_continues(problem, u_prev, lam_prev: ParamVec, u_new, lam_new: ParamVec,
                       newton_cfg: NewtonConfig, substeps=(4, 16, 64)) -> bool:
    """True if plain Newton carried along small parameter substeps links u_prev to u_new.

    Used to confirm branch identity where the jump guard is too strict,
    e.g. just after a pitchfork where the new branch grows like a square root.
    """
    ends = track_endpoints(problem, u_prev, lam_prev, lam_new, newton_cfg, substeps)
    return any(e is not None and _close(e, u_new) for e in ends)


def solve_near(problem, lam: ParamVec, u0, known, defl_cfg: DeflationConfig,
               newton_cfg: NewtonConfig):
    """Warm-started solve for a root distinct from ``known``.

    Plain Newton is tried first and kept if it lands on a new root;
    otherwise the deflated solve decides. Deflating many nearby roots can
    push a good warm start off its own branch, so it is used only when needed.
    """
    dset = DeflationSet(tuple(known), defl_cfg)
    r = newton_solve(lambda v: problem.residual(v, lam),
                     lambda v: problem.jacobian_u(v, lam), u0, newton_cfg, accept=dset.is_new)
    if r.converged:
        return r
    return deflated_solve(problem, lam, u0, dset, newton_cfg)


def _sign(x: float) -> int:
    return 1 if x > 0 else (-1 if x < 0 else 0)


def _refine_fold(problem, cons, ext: ExtendedPoint, nxt: ExtendedPoint, lead: int,
                 newton_cfg: NewtonConfig) -> ExtendedPoint | None:
    """Locate the point between ``ext`` and ``nxt`` where the lead tangent component vanishes."""
    ds_b = nxt.point.s - ext.point.s
    cache: dict[float, ExtendedPoint] = {}

    def lead_component(ds):
        if ds == 0.0:
            return ext.tangent.dlam[lead]
        if ds == ds_b:
            return nxt.tangent.dlam[lead]
        cr = corrector(problem, cons, ext, ds, newton_cfg)
        if not cr.converged:
            raise StepFailed("fold refinement corrector failed")
        t = tangent_multi(problem, cr.point, cons, ext.tangent)
        cache[ds] = ExtendedPoint(cr.point, t)
        return t.dlam[lead]

    try:
        root = brentq(lead_component, 0.0, ds_b, xtol=1e-13, rtol=4 * np.finfo(float).eps)
        if root in (0.0, ds_b):
            return None
        if root not in cache:
            lead_component(root)
    except (StepFailed, TangentError, ValueError):
        return None
    return cache[root]


def _describe(cons: list[PathConstraint]) -> str:
    return "; ".join(c.label for c in cons) if cons else "free"


def run_diagram(
    problem,
    constraint: PathConstraint | None,
    u0,
    lambda_start,
    cont_cfg: ContinuationConfig = ContinuationConfig(),
    defl_cfg: DeflationConfig = DeflationConfig(),
    newton_cfg: NewtonConfig = NewtonConfig(),
    stop: Bounds | None = None,
    seed=None,
    lead: int = 0,
    guard: float = JUMP_GUARD,
    refine_folds: bool = True,
    max_misses: int = 3,
) -> BifurcationDiagram:
    """Trace every branch reachable by deflation along one parameter path.

    ``constraint`` fixes the path in the (lambda_1, lambda_2) plane. Any
    parameter it leaves unconstrained beyond the first is frozen at its
    ``lambda_start`` value. ``seed`` is the exploration guess for discovery
    (defaults to ``u0``). It must differ from every solution on the path,
    since a deflation solve started on a deflated root is singular.
    ``stop`` limits the driver's parameters and output; the run ends when
    the driver leaves it or cannot step any further. A tracked branch that
    finds no solution ``max_misses`` times in a row is closed as step_failed.
    """
    lam0 = lambda_start if isinstance(lambda_start, ParamVec) else problem.params(lambda_start)
    cons = complete_constraints(problem.param_count, [constraint] if constraint else [], lam0)
    for c in cons:
        if abs(c.eval(lam0)) > max(newton_cfg.tol, 1e-9):
            raise ValueError(f"start parameters violate path constraint {c.label}")
    stop = stop or Bounds(problem.param_bounds)
    seed = np.asarray(u0 if seed is None else seed, dtype=float)
    config = {
        "ds": cont_cfg.ds, "ds_min": cont_cfg.ds_min, "direction": cont_cfg.direction,
        "max_steps": cont_cfg.max_steps, "power": defl_cfg.power, "shift": defl_cfg.shift,
        "max_solutions": defl_cfg.max_solutions, "tol": newton_cfg.tol,
        "max_iter": newton_cfg.max_iter, "lambda_start": list(lam0),
    }
    diag = BifurcationDiagram(problem.name, _describe(cons), config=config)

    res = newton_solve(lambda u: problem.residual(u, lam0),
                       lambda u: problem.jacobian_u(u, lam0), u0, newton_cfg)
    if not res.converged:
        diag.failure = f"initial solve failed ({res.status.value})"
        return diag
    try:
        ext = start(problem, res.solution, lam0, cons, cont_cfg.direction)
    except TangentError as exc:
        diag.failure = str(exc)
        return diag

    ds = cont_cfg.ds
    lam_hist: list[ParamVec] = [lam0]
    sols_at: list[list[np.ndarray]] = [[ext.point.u]]

    def add_branch(bp: BranchPoint, parent=None) -> Branch:
        br = Branch(len(diag.branches) + 1, [bp], parent)
        diag.branches.append(br)
        return br

    def new_event(kind, lo, hi, ids, location=None) -> BifurcationEvent:
        ev = BifurcationEvent(len(diag.events) + 1, kind, lo, hi, list(ids), location)
        diag.events.append(ev)
        return ev

    driver = add_branch(BranchPoint(ext.point, problem.output(ext.point.u, lam0), 0, ext.tangent))
    for u in discover_all(problem, lam0, seed, defl_cfg, newton_cfg, known=[ext.point.u]):
        add_branch(BranchPoint(Point(u, lam0), problem.output(u, lam0), 0))
        sols_at[0].append(u)

    active = {b.id for b in diag.branches if b.id != driver.id}
    misses: dict[int, int] = {}
    last_sign = _sign(ext.tangent.dlam[lead])
    # new_branches events keyed by the history index of their lower bracket end
    birth_events: dict[int, BifurcationEvent] = {}

    def trace_back(u, step):
        """Follow a late-found solution back along the driver history.

        Returns the backfilled points (oldest first) and the history index of
        the earliest parameter where it still exists.
        """
        pts = []
        m = step
        while m > 0:
            lam = lam_hist[m - 1]
            r = solve_near(problem, lam, u, sols_at[m - 1], defl_cfg, newton_cfg)
            prev = r.solution if r.converged else None
            if prev is None or not within_guard(prev, u, ds, guard):
                ends = track_endpoints(problem, u, lam_hist[m], lam, newton_cfg)
                if prev is None or not any(e is not None and _close(e, prev) for e in ends):
                    prev = agreed_endpoint(ends)
                    if prev is None or not DeflationSet(tuple(sols_at[m - 1])).is_new(prev):
                        break
            u = prev
            m -= 1
            pts.append(BranchPoint(Point(u, lam), problem.output(u, lam), m))
        return pts[::-1], m

    step = 0
    while step < cont_cfg.max_steps:
        try:
            nxt = arclength_step(problem, cons, ext, cont_cfg, newton_cfg)
        except StepFailed:
            trial = predictor(ext, cont_cfg.ds_min).lam
            r = newton_solve(lambda u: problem.residual(u, trial),
                             lambda u: problem.jacobian_u(u, trial), ext.point.u, newton_cfg)
            if not r.converged:
                new_event(EventKind.EXISTENCE_BOUNDARY, ext.point.lam, trial, [driver.id])
            driver.status = BranchStatus.STEP_FAILED
            break

        new_sign = _sign(nxt.tangent.dlam[lead])
        if last_sign and new_sign and new_sign != last_sign:
            refined = _refine_fold(problem, cons, ext, nxt, lead, newton_cfg) if refine_folds else None
            if refined is not None:
                nxt = refined
            new_event(EventKind.FOLD, ext.point.lam, nxt.point.lam, [driver.id],
                      nxt.point.lam if refined is not None else None)
            last_sign = new_sign
        elif new_sign:
            last_sign = new_sign

        lam = nxt.point.lam
        q = problem.output(nxt.point.u, lam)
        if not stop.contains(lam, q):
            driver.status = BranchStatus.LEFT_BOUNDS
            break
        step += 1
        ext = nxt
        driver.points.append(BranchPoint(nxt.point, q, step, nxt.tangent))
        lam_hist.append(lam)
        here = [nxt.point.u]
        sols_at.append(here)

        # solutions on known branches, in branch-id order
        tags, sols, prevs = [], [], {}
        accepted = []

        for bid in sorted(active):
            last = diag.branch(bid).last.point
            prev = last.u
            prevs[bid] = prev
            r = solve_near(problem, lam, prev, here + accepted, defl_cfg, newton_cfg)
            cand = r.solution if r.converged else None
            ok = cand is not None and within_guard(cand, prev, ds, guard)
            if not ok:
                # the warm start may have hopped branches; follow the branch in substeps
                ends = track_endpoints(problem, prev, last.lam, lam, newton_cfg)
                end = agreed_endpoint(ends)
                if cand is not None and any(e is not None and _close(e, cand) for e in ends):
                    ok = True
                elif end is not None and DeflationSet(tuple(here + accepted)).is_new(end):
                    cand, ok = end, True
            if cand is not None:
                tags.append(bid)
                sols.append(cand)
                if ok:
                    accepted.append(cand)
        known: list[np.ndarray] = []
        for u in here + sols:
            if all(np.linalg.norm(u - k) > DISTINCT_TOL for k in known):
                known.append(u)
        found = discover_all(problem, lam, seed, defl_cfg, newton_cfg, known=known)
        asg = assign_to_branches(sols + found, tags + [None] * len(found), prevs, ds, guard,
                                 lambda bid, u: any(u is a for a in accepted))

        for bid in asg.missed:
            misses[bid] = misses.get(bid, 0) + 1
            if misses[bid] >= max_misses:
                diag.branch(bid).status = BranchStatus.STEP_FAILED
                active.discard(bid)
        for bid, u in asg.assigned.items():
            misses[bid] = 0
            br = diag.branch(bid)
            qb = problem.output(u, lam)
            if not stop.contains(lam, qb):
                br.status = BranchStatus.LEFT_BOUNDS
                active.discard(bid)
                continue
            s = br.last.point.s + float(np.linalg.norm(np.concatenate(
                [u - br.last.point.u, lam.values - br.last.point.lam.values])))
            br.points.append(BranchPoint(Point(u, lam, s), qb, step))
            here.append(u)

        for u in asg.new:
            here.append(u)
            back, m = trace_back(u, step)
            pts = back + [BranchPoint(Point(u, lam), problem.output(u, lam), step)]
            for bp in back:
                sols_at[bp.step].append(bp.point.u)
            br = add_branch(pts[0])
            br.points = pts
            _fill_arclength(br)
            active.add(br.id)
            if m == 0:
                continue  # already present at the start: no bifurcation to report
            ev = birth_events.get(m - 1)
            if ev is None:
                ev = new_event(EventKind.NEW_BRANCHES, lam_hist[m - 1], lam_hist[m], [])
                birth_events[m - 1] = ev
            ev.branch_ids.append(br.id)
            br.parent_event = ev.id

    return diag


def _fill_arclength(br: Branch) -> None:
    s = 0.0
    pts = []
    for i, bp in enumerate(br.points):
        if i:
            prev = br.points[i - 1].point
            s += float(np.linalg.norm(np.concatenate(
                [bp.point.u - prev.u, bp.point.lam.values - prev.lam.values])))
        pts.append(BranchPoint(Point(bp.point.u, bp.point.lam, s), bp.q, bp.step, bp.tangent))
    br.points = pts


def family_start(kind: str, box, n: int, i: int, constraint: PathConstraint) -> tuple[float, float]:
    """Point of path i on the box boundary with the smallest lambda_1.

    Raises ValueError when the path does not meet the box.
    """
    a, b, c, d = map(float, box)
    l2i, l1i = c + i * (d - c) / n, a + i * (b - a) / n
    if kind == "horizontal":
        return a, l2i
    if kind == "diagonal":
        l2 = l2i * (1.0 - a / l1i)
    else:
        rad = 1.0 - (a / l1i) ** 2
        l2 = l2i * np.sqrt(rad) if rad >= 0 else -np.inf
    if not c - 1e-12 <= l2 <= d + 1e-12:
        raise ValueError(f"{constraint.label} does not meet the box at lambda_1 = {a:g}")
    return a, float(l2)


@dataclass(eq=False)
class FamilyResult:
    constraint: PathConstraint
    diagram: BifurcationDiagram | None
    error: str | None = None


def run_diagram_family(
    problem,
    kind: str,
    box,
    n: int,
    u0,
    lambda_template=None,
    cont_cfg: ContinuationConfig = ContinuationConfig(),
    defl_cfg: DeflationConfig = DeflationConfig(),
    newton_cfg: NewtonConfig = NewtonConfig(),
    stop: Bounds | None = None,
    seed=None,
    refine_folds: bool = True,
) -> list[FamilyResult]:
    """One diagram per member of a path family over ``box`` = (a, b, c, d).

    Each member starts where it meets the box boundary at the smallest
    lambda_1. Remaining parameters come from ``lambda_template``. Members
    that cannot start are reported with an error and skipped.
    """
    template = problem.params(lambda_template)
    out = []
    for i, con in enumerate(path_family(kind, box, n)):
        try:
            l1, l2 = family_start(kind, box, n, i, con)
            lam0 = template.with_value(0, l1).with_value(1, l2)
            diag = run_diagram(problem, con, u0, lam0, cont_cfg, defl_cfg, newton_cfg,
                               stop, seed, refine_folds=refine_folds)
        except ValueError as exc:
            out.append(FamilyResult(con, None, str(exc)))
            continue
        out.append(FamilyResult(con, diag, diag.failure))
    return out
