import math

import numpy as np
import pytest

from deflarc.continuation import freeze, path_family
from deflarc.core import Bounds, ContinuationConfig, DeflationConfig, NewtonConfig
from deflarc.diagram import (
    BranchStatus,
    EventKind,
    assign_to_branches,
    family_start,
    agreed_endpoint,
    homotopy_continues,
    track_endpoints,
    run_diagram,
    within_guard,
)
from deflarc.oracles import eigen_bifurcation_oracle
from deflarc.problems import get_problem


def test_single_branch_within_guard_is_appended():
    prev = {1: np.zeros(3)}
    a = assign_to_branches([np.full(3, 0.01)], [1], prev, ds=0.1)
    assert list(a.assigned) == [1] and a.new == [] and a.missed == []


def test_duplicate_of_other_branch_is_discarded():
    x = np.array([5.0, 0.0])
    prev = {1: np.zeros(2), 2: np.array([4.99, 0.0])}
    a = assign_to_branches([x, x + 1e-9], [2, 1], prev, ds=0.01)
    assert list(a.assigned) == [2]
    assert a.new == [] and a.missed == [1]


def test_two_untagged_solutions_open_two_branches():
    prev = {1: np.zeros(2)}
    a = assign_to_branches([np.zeros(2), np.ones(2), -np.ones(2)], [1, None, None], prev, ds=0.1)
    assert len(a.new) == 2


def test_guard_violation_rescued_by_continuation_check():
    prev = {1: np.zeros(1)}
    far = np.array([10.0])
    assert not within_guard(far, prev[1], 0.1)
    a = assign_to_branches([far], [1], prev, 0.1, continues=lambda tag, u: True)
    assert 1 in a.assigned
    b = assign_to_branches([far], [1], prev, 0.1, continues=lambda tag, u: False)
    assert b.missed == [1] and len(b.new) == 1


def test_homotopy_links_pitchfork_branch():
    p = get_problem("allencahn1d")
    lam0, lam1 = p.params([1.2, 1.0, math.pi]), p.params([1.25, 1.0, math.pi])
    cfg = NewtonConfig()

    def solve(lam, u0):
        from deflarc.newton import newton_solve
        return newton_solve(lambda v: p.residual(v, lam), lambda v: p.jacobian_u(v, lam), u0,
                            cfg).solution

    x = np.sin(np.pi * p.grid.nodes())
    u0 = solve(lam0, 0.5 * x)
    u1 = solve(lam1, u0)
    assert np.linalg.norm(u0) > 0.1
    assert homotopy_continues(p, u0, lam0, u1, lam1, cfg)
    assert not homotopy_continues(p, u0, lam0, -u1, lam1, cfg)


def test_substep_tracking_undoes_newton_branch_hop():
    from deflarc.newton import newton_solve

    p = get_problem("allencahn1d")
    lam0, lam1 = p.params([4.0, 4.0, math.pi]), p.params([4.01, 4.0, math.pi])
    cfg = NewtonConfig()
    x = p.grid.nodes()
    u0 = newton_solve(lambda v: p.residual(v, lam0), lambda v: p.jacobian_u(v, lam0),
                      0.1 * np.sin(np.pi * x), cfg).solution
    assert p.output(u0, lam0) > 0
    hop = newton_solve(lambda v: p.residual(v, lam1), lambda v: p.jacobian_u(v, lam1), u0, cfg)
    end = agreed_endpoint(track_endpoints(p, u0, lam0, lam1, cfg))
    assert end is not None and p.output(end, lam1) > 0
    # plain Newton overshoots through zero onto the mirrored root
    assert hop.converged and p.output(hop.solution, lam1) < 0
    assert not homotopy_continues(p, u0, lam0, hop.solution, lam1, cfg)


def test_agreed_endpoint_needs_two_matching_refinements():
    a, b = np.ones(2), -np.ones(2)
    assert agreed_endpoint([a, b, b]) is b
    assert agreed_endpoint([a, b, None]) is None
    assert agreed_endpoint([None, a, a]) is a


def test_bratu_diagram_structure(bratu1d_diagram):
    _, d = bratu1d_diagram
    assert len(d.branches) == 2
    folds = d.events_of(EventKind.FOLD)
    assert len(folds) == 1
    f = folds[0]
    assert f.bracket_lo[0] <= f.bracket_hi[0] + 1e-12
    assert 3.4 <= f.location[0] <= 3.6
    assert abs(f.location[0] - 3.513) <= 0.01


def test_branch_points_satisfy_tolerances(bratu1d_diagram, allencahn1d_diagram):
    for p, d in (bratu1d_diagram, allencahn1d_diagram):
        for br in d.branches:
            s = [bp.point.s for bp in br.points]
            assert all(np.diff(s) > 0)
            for bp in br.points:
                assert np.linalg.norm(p.residual(bp.point.u, bp.point.lam)) <= 1e-10
                assert abs(bp.point.lam[1] - 1.0) <= 1e-10


def test_allen_cahn_cascade(allencahn1d_diagram):
    p, d = allencahn1d_diagram
    assert len(d.branches) == 7
    events = d.events_of(EventKind.NEW_BRANCHES)
    assert len(events) == 3
    oracle = eigen_bifurcation_oracle(p, p.params([0.0, 1.0, math.pi]), max_value=14.0)
    for ev, val in zip(events, oracle[:3]):
        assert ev.contains(val)
        assert ev.count == 2


def test_allen_cahn_symmetric_pairs(allencahn1d_diagram):
    _, d = allencahn1d_diagram
    for br in d.branches[1:]:
        lam = br.lambdas()
        ok = False
        for other in d.branches:
            if other is br:
                continue
            olam = other.lambdas()
            common = [(i, j) for i, a in enumerate(lam) for j in np.flatnonzero(np.isclose(olam, a, atol=1e-12))]
            if common and all(np.linalg.norm(br.points[i].point.u + other.points[j].point.u) <= 1e-6
                              for i, j in common):
                ok = True
                break
        assert ok, f"branch {br.id} has no negated partner"


def test_capped_bratu_has_no_fold():
    p = get_problem("bratu1d")
    stop = Bounds(((0.0, 1.0), (0.0, 10.0), (0.0, 10.0)), q_max=10.0)
    d = run_diagram(p, freeze(1, 1.0), np.zeros(32), p.params([0.1, 1.0, 0.0]),
                    ContinuationConfig(ds=0.2), DeflationConfig(), NewtonConfig(), stop=stop)
    assert len(d.branches) == 2
    assert d.events_of(EventKind.FOLD) == []
    assert all(b.status in (BranchStatus.LEFT_BOUNDS, BranchStatus.COMPLETED) for b in d.branches)


def test_family_start_points():
    box = (1, 10, 1, 5)
    fams = path_family("diagonal", box, 4)
    l1, l2 = family_start("diagonal", box, 4, 2, fams[2])
    assert fams[2]((l1, l2)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        family_start("diagonal", box, 4, 0, fams[0])
