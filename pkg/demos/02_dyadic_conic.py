"""Exact extremal principle on a dyadic measure space.

Atom 1 (mass 1/2) carries the upward wedge, every other atom (mass 2^-m)
the downward one.  conic_ep halves the shift until the normalized duals
settle, then confirms each dual is a limiting normal of its wedge at 0.
"""
import numpy as np

from essint import SampledMultifunction, SetValue, conic_ep, dyadic_space

up = SetValue.from_halfspaces([[1, -1], [-1, -1]], [0, 0])
down = SetValue.from_halfspaces([[1, 1], [-1, 1]], [0, 0])

for M in (3, 5, 8):
    space = dyadic_space(M)
    F = SampledMultifunction(space, {m: up if m == 1 else down for m in space.atoms})
    shift = {m: np.array([0.0, -1.0]) if m == 1 else np.zeros(2) for m in space.atoms}
    wit = conic_ep(F, shift)
    W = space.weights
    print(f"M={M}: halvings={wit.extras['halvings']} certified={wit.extras['certified']} "
          f"balance={np.linalg.norm(wit.balance):.1e}")
    alpha = wit.extras["alpha"]
    print(f"   alpha={alpha} x_hat={wit.xhat.round(6)}  "
          f"(closed form x2 = alpha w1/W = {alpha * W[0] / W.sum():.6f})")
    print(f"   x*(1)={wit.xstar[1].round(4)}  x*(2)={wit.xstar[2].round(4)}")
