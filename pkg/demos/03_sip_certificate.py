"""Stationarity for a semi-infinite linear program.

Constraints <(-1, t - 1/2), x> <= 0 for every t in [0, 1] are all active at
x = 0.  For h(x) = x1 the multiplier density is identically one: integrating
(-1, t - 1/2) against it gives (-1, 0), which cancels the gradient.  With
h(x) = x2 there is no such density and the least-squares residual is 2/sqrt(5).
"""
import numpy as np

from essint import Objective, sip_certificate


def a(t):
    return np.array([-1.0, t - 0.5])


def b(t):
    return 0.0


for N in (11, 21, 41):
    cert = sip_certificate(a, b, Objective.affine([1.0, 0.0]), (0.0, 1.0), N)
    print(f"N={N:2d} certified={cert.certified} residual={cert.stationarity_residual:.1e} "
          f"density range=[{cert.density.min():.12f}, {cert.density.max():.12f}]")

cert = sip_certificate(a, b, Objective.affine([0.0, 1.0]), (0.0, 1.0), 11)
print(f"h = x2: certified={cert.certified} residual={cert.stationarity_residual:.6f} "
      f"(2/sqrt(5) = {2 / np.sqrt(5):.6f})")
