"""Pitchfork cascade of the cubic reaction problem along lambda_2 = 1, lambda_3 = pi.

Usage: python3 scripts/pitchfork_cascade.py [allencahn1d|allencahn2d] [lambda_1 max]
"""

import math
import sys
import time

import numpy as np

from deflarc.continuation import freeze
from deflarc.core import Bounds, ContinuationConfig, DeflationConfig, NewtonConfig
from deflarc.diagram import EventKind, run_diagram
from deflarc.oracles import eigen_bifurcation_oracle, group_multiplicities
from deflarc.problems import bump_seed, get_problem


def main(pid="allencahn1d", hi=14.0):
    p = get_problem(pid)
    t = time.perf_counter()
    d = run_diagram(p, freeze(1, 1.0), np.zeros(p.dof_count), p.params([0.0, 1.0, math.pi]),
                    ContinuationConfig(ds=0.01, max_steps=5000), DeflationConfig(),
                    NewtonConfig(max_iter=50),
                    stop=Bounds(((0.0, hi), (1.0, 10.0), (math.pi, 3.8))), seed=bump_seed(p))
    print(f"{pid}: {len(d.branches)} branches in {time.perf_counter() - t:.1f}s")
    oracle = eigen_bifurcation_oracle(p, p.params([0.0, 1.0, math.pi]), max_value=hi)
    print("linearisation predicts (value, multiplicity):",
          [(round(v, 5), m) for v, m in group_multiplicities(oracle)])
    for e in d.events_of(EventKind.NEW_BRANCHES):
        print(f"  lambda_1 in [{e.bracket_lo[0]:.4f}, {e.bracket_hi[0]:.4f}]: "
              f"{e.count} new branches {e.branch_ids}")


if __name__ == "__main__":
    args = sys.argv[1:]
    main(args[0] if args else "allencahn1d", float(args[1]) if len(args) > 1 else 14.0)
