"""Strict minimizers through the epigraph-augmented extremal system.

Minimizing h(x) = x2 over the upward wedge has the strict minimizer 0.  The
extremal principle on (epigraph of h, wedge x (-inf, h(0)]) produces a
subgradient and a wedge normal that cancel.  Over a half-plane the minimizer
is not strict and the nonoverlap test refuses to run.
"""
import numpy as np

from essint import (AtomicMeasureSpace, NonoverlapFailed, Objective, SampledMultifunction,
                    SetValue, strict_min_alternative)

space = AtomicMeasureSpace((1,), [1.0])
wedge = SampledMultifunction(space, {1: SetValue.from_halfspaces([[1, -1], [-1, -1]], [0, 0])})
res = strict_min_alternative(Objective.affine([0.0, 1.0]), wedge, np.zeros(2), 1.0, ks=(1, 2, 3))
print(f"wedge: branch={res.branch} subgradient={res.subgradient} "
      f"normal={res.normals[1].round(4)} residual={res.stationarity_residual:.1e}")

half = SampledMultifunction(space, {1: SetValue.from_halfspaces([[0, 1]], [0])})
try:
    strict_min_alternative(Objective.affine([0.0, 0.0]), half, np.zeros(2), 1.0)
except NonoverlapFailed as e:
    print(f"half-plane: {type(e).__name__}: {e}")
