"""Sliding mass along a circle strictly lowers concave transport cost.

Take a symmetric pair of points on a circle of radius r and an off-axis
cost anchor (0, b). Deform the pair along the circle toward the vertical
axis while keeping the barycenter fixed. For cost profiles h(s) = s^q the
transport cost C(t) is strictly decreasing whenever h'(s)/s decreases
(0 < q < 2), exactly flat at q = 2, and increasing stretches appear for
q > 2. This is the mechanism that pins optimal plans to rays.
"""

import numpy as np

from motkit import DeformationInstance, deformation_curve

inst = lambda q: DeformationInstance(b=0.5, r=1.0, z=0.0, q=q)

qs = (0.5, 1.0, 1.5, 2.0, 3.0)
curves = {q: deformation_curve(inst(q), 11) for q in qs}
print("C(t) while the mass pair slides from the equator to the poles")
print(f"{'t':>5}", *(f"q={q:<6}" for q in qs))
for i, (t, _) in enumerate(curves[qs[0]]):
    row = " ".join(f"{curves[q][i][1]:8.5f}" for q in qs)
    print(f"{t:5.2f} {row}")

print("\nhand check at q=1: C(0) = sqrt(1.25) =",
      f"{np.sqrt(1.25):.6f}, C(1) = 0.5*0.5 + 0.5*1.5 = 1.0")
for q in (0.5, 1.0, 1.5, 2.0, 3.0):
    vals = np.array([c for _, c in deformation_curve(inst(q), 101)])
    d = np.diff(vals)
    kind = ("strictly decreasing" if np.all(d < 0)
            else "constant" if np.ptp(vals) < 1e-12 else "NOT monotone")
    print(f"q={q}: {kind}  (C(0)-C(1) = {vals[0]-vals[-1]:+.6f})")
