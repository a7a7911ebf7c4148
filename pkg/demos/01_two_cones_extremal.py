"""Two wedges that touch only at the origin, pushed apart by a shrinking shift.

The downward wedge {x2 <= -|x1|} and the upward wedge {x2 >= |x1|} meet at a
single point.  Sliding the first one up by (0, 1/k) opens a gap, and the
penalty minimizer sits halfway between the two apexes.  The normalized
normals it produces stay fixed at (0, 1) and (0, -1) and balance exactly.
"""
import numpy as np

from essint import (AtomicMeasureSpace, PerturbationSchedule, Polyhedron, SampledMultifunction,
                    SetValue, check_witness, sequential_ep)

down = SetValue.from_halfspaces([[1, 1], [-1, 1]], [0, 0])
up = SetValue.from_halfspaces([[1, -1], [-1, -1]], [0, 0])
space = AtomicMeasureSpace(("down", "up"), [0.5, 0.5])
F = SampledMultifunction(space, {"down": down, "up": up})
origin = np.zeros(2)

sched = PerturbationSchedule.harmonic(space, {"down": [0, 1], "up": [0, 0]}, [1, 2, 5, 10, 20])
print(f"{'k':>3} {'x_hat':>22} {'phi':>10} {'x*(down)':>14} {'x*(up)':>14} {'balance':>9}")
for (k, term), wit in zip(sched, sequential_ep(F, origin, 1.0, sched)):
    chk = check_witness(F, origin, term, wit)
    print(f"{k:3d} {np.array2string(wit.xhat, precision=5):>22} {wit.phi_value:10.2e} "
          f"{np.array2string(wit.xstar['down'], precision=3):>14} "
          f"{np.array2string(wit.xstar['up'], precision=3):>14} {chk['balance']:9.1e}")

# the minimizer is (0, -1/(2k)) and phi = 1/(4k^2): both shrink with the shift
