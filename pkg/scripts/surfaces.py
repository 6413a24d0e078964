"""Slices of the bifurcation surface over lambda_3 compared with the scaling laws."""

import math

import numpy as np

from deflarc.core import DeflationConfig
from deflarc.detect import ZigzagConfig, detect_surface
from deflarc.oracles import fold_bisection_oracle
from deflarc.problems import bump_seed, get_problem


def report(name, slices, law):
    for l3, tr, err in slices:
        if tr is None or not tr.crossings:
            print(f"{name} lambda_3={l3:.3f}: no crossings ({err})")
            continue
        M = tr.midpoints()
        ref = law(M[:, 1], l3)
        print(f"{name} lambda_3={l3:.3f}: {len(M)} crossings, max relative error "
              f"{(np.abs(M[:, 0] - ref) / ref).max():.4f}")


def main():
    kw = dict(theta=math.pi / 20, k=5, ds=0.01)
    p = get_problem("bratu1d")
    c = fold_bisection_oracle(p, p.params([0.0, 1.0, 0.0]), lo=0.1, hi=5.0)
    zz = ZigzagConfig(lambda_bounds=((0.0, 10.0), (1.0, 1.5)), **kw)
    # boundary-value shift: the fold moves like exp(-lambda_3), so the start does too
    out = detect_surface(p, zz, [0.0, 0.5, 1.0, 1.5], lambda l3: (math.exp(-l3), 1.0),
                         p.boundary_lift, DeflationConfig())
    report("fold", out, lambda l2, l3: c * l2 * math.exp(-l3))

    a = get_problem("allencahn1d")
    zz = ZigzagConfig(lambda_bounds=((0.0, 14.0), (1.0, 1.5)), **kw)
    out = detect_surface(a, zz, list(np.linspace(math.pi, 3.8, 4)), lambda l3: (0.5, 1.0),
                         np.zeros(32), DeflationConfig(), seed=bump_seed(a))
    report("pitchfork", out, lambda l2, l3: l2 * (math.pi / l3) ** 2)


if __name__ == "__main__":
    main()
