"""Fold of the exponential-load problem in 1D and 2D, compared with the bisection oracle."""

import time

import numpy as np

from deflarc.continuation import freeze
from deflarc.core import Bounds, ContinuationConfig, DeflationConfig, NewtonConfig
from deflarc.diagram import EventKind, run_diagram
from deflarc.oracles import fold_bisection_oracle
from deflarc.problems import get_problem


def main():
    for pid, hi in (("bratu1d", 5.0), ("bratu2d", 9.0)):
        p = get_problem(pid)
        t = time.perf_counter()
        d = run_diagram(p, freeze(1, 1.0), np.zeros(p.dof_count), p.params([0.1, 1.0, 0.0]),
                        ContinuationConfig(ds=0.2, max_steps=2000), DeflationConfig(),
                        NewtonConfig(), stop=Bounds(p.param_bounds, q_max=10.0))
        oracle = fold_bisection_oracle(p, p.params([0.0, 1.0, 0.0]), lo=0.1, hi=hi)
        print(f"{pid}: {len(d.branches)} branches in {time.perf_counter() - t:.1f}s, "
              f"oracle {oracle:.6f}")
        for e in d.events_of(EventKind.FOLD):
            print(f"  fold bracket [{e.bracket_lo[0]:.6f}, {e.bracket_hi[0]:.6f}] "
                  f"contains oracle: {e.contains(oracle)}")


if __name__ == "__main__":
    main()
