import ast
import math
from pathlib import Path

import numpy as np
import pytest

import deflarc.oracles as oracles_module
from deflarc.core import NewtonConfig
from deflarc.oracles import (
    eigen_bifurcation_oracle,
    eigen_report,
    fold_bisection_oracle,
    fold_report,
    group_multiplicities,
)
from deflarc.problems import get_problem


def fd_values_1d(n, k):
    """Closed-form eigenvalues of the 1D Dirichlet FD Laplacian on (0, 1)."""
    h = 1.0 / (n + 1)
    return 4 / h**2 * np.sin(k * np.pi * h / 2) ** 2


def test_allen_cahn_1d_matches_closed_form():
    p = get_problem("allencahn1d")
    vals = eigen_bifurcation_oracle(p, p.params([0.0, 1.0, math.pi]))
    # rescaled to the length-pi domain: lambda_2 * mu_k / pi^2
    closed = [fd_values_1d(32, k) / math.pi**2 for k in (1, 2, 3)]
    assert vals[:3] == pytest.approx(closed, rel=1e-10)
    # first two against the continuum values 1 and 4
    assert abs(vals[0] - 1) < 0.005 and abs(vals[1] - 4) / 4 < 0.005


def test_allen_cahn_1d_scales_with_lambda_2_and_length():
    p = get_problem("allencahn1d")
    base = eigen_bifurcation_oracle(p, p.params([0.0, 1.0, math.pi]))[0]
    v = eigen_bifurcation_oracle(p, p.params([0.0, 2.0, 3.5]))[0]
    assert v == pytest.approx(base * 2.0 * (math.pi / 3.5) ** 2, rel=1e-12)


def test_allen_cahn_2d_kronecker_multiplicities():
    p = get_problem("allencahn2d")
    vals = eigen_bifurcation_oracle(p, p.params([0.0, 1.0, math.pi]), max_value=12.5)
    grouped = group_multiplicities(vals)
    mu = fd_values_1d(8, np.arange(1, 9)) / math.pi**2
    sums = np.sort(np.add.outer(mu, mu).ravel())
    expected = group_multiplicities(sums[sums <= 12.5])
    assert [m for _, m in grouped] == [m for _, m in expected]
    assert [v for v, _ in grouped] == pytest.approx([v for v, _ in expected], rel=1e-9)
    # pattern of the continuum sums 2, 5, 8, 10, ...
    assert [m for _, m in grouped[:4]] == [1, 2, 1, 2]
    assert grouped[0][0] == pytest.approx(2, rel=0.02)


def test_modified_allen_cahn_first_value():
    p = get_problem("allencahn-mod1d")
    v = eigen_bifurcation_oracle(p, p.params([0.0, 1.0]))[0]
    assert v == pytest.approx(3 * (math.pi / 2) ** 2, rel=0.01)


def test_eigen_oracle_requires_trivial_branch():
    p = get_problem("bratu1d")
    with pytest.raises(ValueError):
        eigen_bifurcation_oracle(p, p.params([1.0, 1.0, 0.0]))


def test_group_multiplicities():
    assert group_multiplicities([1.0, 2.0, 2.0 + 1e-12, 3.0]) == [(1.0, 1), (2.0, 2), (3.0, 1)]


@pytest.fixture(scope="module")
def bratu_fold():
    p = get_problem("bratu1d")
    return fold_bisection_oracle(p, p.params([0.0, 1.0, 0.0]), lo=0.1, hi=5.0)


def test_bratu_1d_fold(bratu_fold):
    assert abs(bratu_fold - 3.51) <= 0.01


def test_bratu_2d_fold():
    p = get_problem("bratu2d")
    v = fold_bisection_oracle(p, p.params([0.0, 1.0, 0.0]), lo=0.1, hi=9.0)
    assert abs(v - 6.8) <= 0.15


def test_bratu_fold_shift_identity(bratu_fold):
    p = get_problem("bratu1d")
    v = fold_bisection_oracle(p, p.params([0.0, 1.0, 0.5]), lo=0.1, hi=5.0)
    assert v == pytest.approx(bratu_fold * math.exp(-0.5), rel=0.01)


def test_fold_oracle_rejects_non_monotone_bracket():
    p = get_problem("bratu1d")
    with pytest.raises(ValueError):
        fold_bisection_oracle(p, p.params([0.0, 1.0, 0.0]), lo=0.1, hi=3.0)


def test_fold_oracle_resolution():
    p = get_problem("bratu1d")
    lam = p.params([0.0, 1.0, 0.0])
    cfg = NewtonConfig(max_iter=500)
    a = fold_bisection_oracle(p, lam, lo=0.1, hi=5.0, resolution=1e-6, newton_cfg=cfg)
    b = fold_bisection_oracle(p, lam, lo=0.1, hi=5.0, resolution=1e-3, newton_cfg=cfg)
    assert a - 1e-3 <= b <= a + 1e-12


def test_reports_serialise():
    p = get_problem("allencahn1d")
    r = eigen_report(p, p.params([0.0, 1.0, math.pi]))
    d = r.to_dict()
    assert d["values"][0][1] == 1 and d["value"] == pytest.approx(0.99924, abs=1e-5)
    f = fold_report(get_problem("bratu1d"), [0.0, 1.0, 0.0], resolution=1e-2)
    assert 3.4 < f.value < 3.6


def test_oracles_depend_only_on_problem_and_newton_layers():
    tree = ast.parse(Path(oracles_module.__file__).read_text())
    local = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom) and node.level:
            local.add(node.module)
    assert local <= {"core", "newton", "problems"}
