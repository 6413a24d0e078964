"""Fold location along horizontal, diagonal and elliptic path families (1D exponential load)."""

import numpy as np

from deflarc.core import Bounds, ContinuationConfig, DeflationConfig, NewtonConfig
from deflarc.diagram import EventKind, run_diagram_family
from deflarc.problems import get_problem

BOX = (0.5, 10.0, 0.5, 2.5)


def main(n=4):
    p = get_problem("bratu1d")
    for kind in ("horizontal", "diagonal", "elliptic"):
        results = run_diagram_family(
            p, kind, BOX, n, np.zeros(p.dof_count), [0.0, 0.0, 0.0],
            ContinuationConfig(ds=0.2, max_steps=2000), DeflationConfig(), NewtonConfig(),
            Bounds(((0, 12), (0, 4), (0, 1.5)), q_max=10.0))
        for r in results:
            if r.diagram is None:
                print(f"{r.constraint.label}: skipped ({r.error})")
                continue
            for e in r.diagram.events_of(EventKind.FOLD):
                l1, l2 = e.location[0], e.location[1]
                print(f"{r.constraint.label}: fold at ({l1:.5f}, {l2:.5f}) ratio {l1 / l2:.6f}")


if __name__ == "__main__":
    main()
