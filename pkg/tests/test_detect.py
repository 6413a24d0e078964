import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deflarc.core import DeflationConfig, NewtonConfig
from deflarc.detect import (
    ZigzagConfig,
    classify_region,
    detect_curve,
    detect_surface,
    travel_direction,
    zigzag_line,
)
from deflarc.problems import bump_seed, get_problem

THETA = math.pi / 20


def test_zigzag_line_passes_through_offset_point():
    g = zigzag_line((2.0, 1.0), THETA, 1)
    assert g((3.0, 1.0 + math.tan(THETA))) == pytest.approx(0.0, abs=1e-15)
    assert g((2.0, 1.0)) == 0.0


def test_negative_sigma_is_the_mirrored_inclination():
    # theta' = pi - theta describes the same line family with reversed travel
    g = zigzag_line((2.0, 1.0), THETA, -1)
    t = math.pi - THETA
    assert g((2.0 + math.cos(t), 1.0 + math.sin(t))) == pytest.approx(0.0, abs=1e-14)
    d = travel_direction(THETA, -1)
    assert d == pytest.approx([math.cos(t), math.sin(t)])


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 10), st.floats(0, 10), st.sampled_from([1, -1]),
       st.floats(0.01, 1.5))
def test_zigzag_gradient_matches_finite_differences(l1, l2, sigma, theta):
    g = zigzag_line((1.0, 2.0), theta, sigma)
    v = np.array([l1, l2])
    fd = np.array([(g(v + e) - g(v - e)) / 2e-6 for e in 1e-6 * np.eye(2)])
    assert np.allclose(g.grad(v), fd, atol=1e-6)


def test_zigzag_config_validation():
    with pytest.raises(ValueError):
        ZigzagConfig(theta=0.0)
    with pytest.raises(ValueError):
        ZigzagConfig(k=0)
    with pytest.raises(ValueError):
        zigzag_line((0, 0), THETA, 0)


@pytest.mark.parametrize("lam,count", [((1.0, 1.0, 0.0), 2), ((5.0, 1.0, 0.0), 0)])
def test_classify_bratu(lam, count):
    p = get_problem("bratu1d")
    label, sols = classify_region(p, p.params(lam), [], DeflationConfig(), NewtonConfig(),
                                  seed=np.zeros(32))
    assert label.solution_count == count == len(sols)


@pytest.mark.parametrize("l1,count", [(0.5, 1), (2.0, 3)])
def test_classify_allen_cahn(l1, count):
    p = get_problem("allencahn1d")
    label, _ = classify_region(p, p.params([l1, 1.0, math.pi]), [np.zeros(32)],
                               DeflationConfig(), NewtonConfig(), seed=bump_seed(p))
    assert label.solution_count == count


def test_classification_capped():
    p = get_problem("allencahn1d")
    label, _ = classify_region(p, p.params([13.0, 1.0, math.pi]), [np.zeros(32)],
                               DeflationConfig(shift=0.01), NewtonConfig(max_iter=100),
                               n_max=2, seed=bump_seed(p))
    assert label.solution_count == 2


@pytest.fixture(scope="module")
def bratu_trace():
    p = get_problem("bratu1d")
    zz = ZigzagConfig(theta=THETA, k=5, ds=0.01, lambda_bounds=((0.0, 10.0), (0.5, 1.0)))
    return detect_curve(p, zz, p.params([0.5, 0.5, 0.0]), np.zeros(32), DeflationConfig())


def test_crossing_brackets_have_distinct_labels(bratu_trace):
    assert bratu_trace.crossings
    for c in bratu_trace.crossings:
        assert c.label_lo != c.label_hi
        lo, hi, mid = (np.asarray(x.values[:2]) for x in (c.bracket_lo, c.bracket_hi, c.midpoint))
        assert np.allclose(mid, 0.5 * (lo + hi))


def test_labels_constant_between_crossings(bratu_trace):
    changes = 0
    for seg in bratu_trace.segments:
        labels = [lab.solution_count for _, lab in seg.points]
        changes += sum(a != b for a, b in zip(labels, labels[1:]))
    assert changes == len(bratu_trace.crossings)


def test_segments_alternate_sigma(bratu_trace):
    sig = [s.sigma for s in bratu_trace.segments]
    assert sig[0] == 1
    assert all(a == -b for a, b in zip(sig, sig[1:]))


def test_start_outside_bounds_rejected():
    p = get_problem("bratu1d")
    zz = ZigzagConfig(lambda_bounds=((0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ValueError):
        detect_curve(p, zz, p.params([2.0, 0.5, 0.0]), np.zeros(32), DeflationConfig())


def test_single_slice_surface_equals_curve():
    p = get_problem("bratu1d")
    zz = ZigzagConfig(lambda_bounds=((0.0, 10.0), (0.5, 0.7)))
    out = detect_surface(p, zz, [0.0], lambda l3: (0.5, 0.5), np.zeros(32), DeflationConfig())
    curve = detect_curve(p, zz, p.params([0.5, 0.5, 0.0]), np.zeros(32), DeflationConfig())
    (l3, trace, err), = out
    assert l3 == 0.0 and err is None
    assert np.array_equal(trace.midpoints(), curve.midpoints())
