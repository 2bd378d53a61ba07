"""Two drones that coordinate: one spends its life buying time for the other.

Drone 2 starts at -alpha1 when drone 1 is at +alpha1. For each placement we
ask how far out the pair can start and still get one drone to safety.
"""
import math

from turret_evasion import duo2d

print(f"hybrid strategy applies up to alpha1 = {duo2d.HYBRID_LIMIT:.4f}")
print("alpha1   radial  tangent   hybrid  transition   best")
for a in (0.3, 0.8, 1.2, 1.45, math.pi / 2, 2.2, 3.0):
    row = [duo2d.r_max(a, s, dt=1e-3) for s in duo2d.DuoStrategy]
    best = max((r, s) for r, s in zip(row, duo2d.DuoStrategy) if not math.isnan(r))
    cells = "  ".join(" " * 5 + "-  " if math.isnan(r) else f"{r:7.3f}" for r in row)
    print(f"{a:6.3f}  {cells}   {best[1].name.lower()}")

a, strategy, r = duo2d.global_maximum(dt=1e-3, grid=7)
print(f"\nbest placement: alpha1={a:.4f} with the {strategy.name.lower()} strategy, r_max={r:.4f}")
print(f"drone 1 heads along {duo2d.transition_angle(a):.4f} rad")
