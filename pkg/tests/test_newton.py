import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deflarc.core import NewtonConfig
from deflarc.newton import SingularMatrixError, Status, lu_solve, newton_solve
from deflarc.problems import build_laplacian, get_problem


def _sq(c):
    return (lambda u: u**2 - c), (lambda u: np.array([[2 * u[0]]]))


def test_scalar_root_from_nearby_guess():
    f, j = _sq(4.0)
    r = newton_solve(f, j, [3.0], NewtonConfig(tol=1e-12))
    assert r.converged and r.iterations <= 7
    assert r.solution[0] == pytest.approx(2.0, abs=1e-12)


def test_exact_guess_needs_no_iteration():
    f, j = _sq(4.0)
    r = newton_solve(f, j, [2.0])
    assert r.converged and r.iterations == 0


def test_rootless_system_fails():
    r = newton_solve(lambda u: u**2 + 1, lambda u: np.array([[2 * u[0]]]), [1.0])
    assert r.status in (Status.MAX_ITER, Status.DIVERGED, Status.SINGULAR)
    assert r.solution is None


def test_quadratic_convergence():
    errs = []
    f, j = _sq(4.0)
    u = np.array([3.0])
    for _ in range(6):
        errs.append(abs(u[0] - 2.0))
        u = u - f(u) / j(u)[0]
    pairs = [(a, b) for a, b in zip(errs, errs[1:]) if a < 0.1 and a > 0]
    assert pairs
    for a, b in pairs:
        assert b <= 1.0 * a**2


def test_singular_jacobian_reported():
    r = newton_solve(lambda u: u**2 + 1.0, lambda u: np.array([[2 * u[0]]]), [0.0])
    assert r.status is Status.SINGULAR


def test_lu_solve_rejects_singular():
    with pytest.raises(SingularMatrixError):
        lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))


def test_bratu_solution_matches_picard_oracle():
    p = get_problem("bratu1d")
    lam = p.params([1.0, 1.0, 0.0])
    r = newton_solve(lambda u: p.residual(u, lam), lambda u: p.jacobian_u(u, lam), np.zeros(32))
    assert r.converged and np.linalg.norm(p.residual(r.solution, lam)) <= 1e-10
    # independent route: fixed-point iteration u <- L^-1(-e^u)
    L = build_laplacian(p.grid)
    v = np.zeros(32)
    for _ in range(500):
        nxt = np.linalg.solve(L, -np.exp(v))
        if np.max(np.abs(nxt - v)) < 1e-15:
            break
        v = 0.5 * v + 0.5 * nxt
    assert np.max(np.abs(r.solution - v)) <= 1e-8


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50, allow_nan=False), st.floats(0.1, 100))
def test_never_converged_with_non_finite(u0, c):
    f, j = _sq(c)
    r = newton_solve(f, j, [u0])
    if r.converged:
        assert np.all(np.isfinite(r.solution))
        assert abs(abs(r.solution[0]) - np.sqrt(c)) < 1e-6


def test_accept_veto_reports_divergence():
    f, j = _sq(4.0)
    r = newton_solve(f, j, [3.0], accept=lambda u: False)
    assert r.status is Status.DIVERGED
