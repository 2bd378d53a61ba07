"""A single drone against a single turret in the plane.

Distances are in units of the drone speed per radian of turret travel, so the
safety circle (where the drone out-turns the gun) has radius 1.
"""
import math

import numpy as np

from turret_evasion import geometry2d as g2

print("Where can a drone start and still reach the safety circle?")
for alpha in (0.5, 1.5, math.pi / 2, 3.0):
    radial = g2.radial_region_boundary(alpha, 1.0)
    tangent = g2.tangent_region_radius(alpha, 1.0)
    print(f"  gun {alpha:4.2f} rad away: flying straight in works up to r={radial:.3f}, "
          f"aiming at the tangent point up to r={tangent:.3f}")

print(f"\nThe tangent region peaks directly behind the gun: gamma_max={g2.GAMMA_MAX:.6f}, "
      f"radius {np.linalg.norm(g2.survivable_boundary(g2.GAMMA_MAX, 0.0, 1.0)):.6f}")

# one drone just outside the radial limit
p0 = np.array([0.0, 3.8])
for strategy in g2.Strategy:
    res = g2.intercept(p0, math.pi / 2, 1.0, strategy)
    where = "" if res.p_d is None else f" at {np.round(res.p_d, 3)} after {res.t_d:.3f} rad of slew"
    print(f"{strategy.name.lower():>8}: {res.fate.name.lower()}{where}")
