"""When normals can cancel: the qualification condition and its witness.

Two opposite half-planes {x2 <= 0} and {x2 >= 0} have normals (0, 1) and
(0, -1) at the origin that sum to zero, so the qualification condition fails
and the search returns that pair.  Perpendicular half-planes pass, and so do
convex values sharing an interior point (found by a slack LP).
"""
import numpy as np

from essint import (AtomicMeasureSpace, SampledMultifunction, SetValue,
                    check_normal_qualification, check_violator)

space = AtomicMeasureSpace((1, 2), [0.5, 0.5])


def pair(r1, r2, b=(0.0, 0.0)):
    return SampledMultifunction(space, {1: SetValue.from_halfspaces([r1], [b[0]]),
                                        2: SetValue.from_halfspaces([r2], [b[1]])})


F = pair([0, 1], [0, -1])
rep = check_normal_qualification(F, np.zeros(2))
print(f"opposite half-planes: holds={rep.holds} path={rep.path}")
print(f"  violator: {({k: v.round(3).tolist() for k, v in rep.violator.items()})}")
print(f"  independent check: {check_violator(F, np.zeros(2), rep.violator)}")

rep = check_normal_qualification(pair([0, 1], [1, 0]), np.zeros(2))
print(f"perpendicular half-planes: holds={rep.holds} path={rep.path}")

G = pair([1, 0], [0, 1], b=(1.0, 1.0))
for precheck in (True, False):
    rep = check_normal_qualification(G, np.array([1.0, 1.0]), precheck=precheck)
    print(f"common interior point, precheck={precheck}: holds={rep.holds} path={rep.path}")
