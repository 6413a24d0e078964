"""Zigzag tracing of bifurcation curves in the (lambda_1, lambda_2) plane.

Prints the fitted law and the worst deviation of the crossing midpoints.
"""

import math

import numpy as np

from deflarc.core import DeflationConfig
from deflarc.detect import ZigzagConfig, detect_curve
from deflarc.oracles import fold_bisection_oracle
from deflarc.problems import bump_seed, get_problem

THETA = math.pi / 20


def fit_through_origin(M):
    c = np.sum(M[:, 0] * M[:, 1]) / np.sum(M[:, 1] ** 2)
    return c, (np.abs(M[:, 0] - c * M[:, 1]) / math.hypot(1, c)).max()


def main():
    p = get_problem("bratu1d")
    zz = ZigzagConfig(theta=THETA, k=5, ds=0.01, lambda_bounds=((0.0, 10.0), (0.5, 1.5)))
    tr = detect_curve(p, zz, p.params([0.5, 0.5, 0.0]), np.zeros(32), DeflationConfig())
    c, dev = fit_through_origin(tr.midpoints())
    ref = fold_bisection_oracle(p, p.params([0.0, 1.0, 0.0]), lo=0.1, hi=5.0)
    print(f"fold curve: {len(tr.crossings)} crossings, slope {c:.5f} (oracle {ref:.5f}), "
          f"max deviation {dev:.4f}")

    a = get_problem("allencahn1d")
    zz = ZigzagConfig(theta=THETA, k=5, ds=0.01, lambda_bounds=((0.0, 14.0), (1.0, 3.0)))
    tr = detect_curve(a, zz, a.params([0.5, 1.0, math.pi]), np.zeros(32), DeflationConfig(),
                      seed=bump_seed(a))
    c, dev = fit_through_origin(tr.midpoints())
    print(f"first pitchfork curve: {len(tr.crossings)} crossings, slope {c:.5f}, "
          f"max deviation {dev:.4f}")

    m = get_problem("allencahn-mod1d")
    zz = ZigzagConfig(theta=THETA, k=5, ds=0.01, lambda_bounds=((0.0, 10.0), (0.2, 1.8)))
    tr = detect_curve(m, zz, m.params([4.0, 0.2]), np.zeros(32), DeflationConfig(),
                      seed=bump_seed(m))
    M = tr.midpoints()
    law = (math.pi / 2) ** 2 * (3 - (M[:, 1] - 1) ** 2)
    print(f"quadratic curve: {len(M)} crossings, max relative residual "
          f"{(np.abs(M[:, 0] - law) / law).max():.4f}")


if __name__ == "__main__":
    main()
