"""A swarm attacks a rate-limited pan-tilt turret.

Direct drones fly straight at the turret; indirect drones first slip into the
cylinder above it, where the gun cannot pan fast enough, and spiral down.
"""
from turret_evasion import sim3d

F, S = sim3d.Formation, sim3d.AttackStrategy
params = sim3d.SimParams()
print(f"safety cylinder radius {sim3d.safety_cylinder_radius(params):.3f} m")

for strategy in S:
    res = sim3d.run_engagement(sim3d.AttackConfig(F.CYLINDER, n=32, d=24.0, strategy=strategy))
    print(f"{strategy.name.lower():>8} from 24 m: {res.outcome.name.lower()} after {res.time:.2f} s, "
          f"{len(res.kill_log)} drones shot")

print("\nlargest starting distance that still wins (cylinder, 32 drones):")
for xi in (0.0, 0.5, 1.0):
    row = [sim3d.max_start_distance(sim3d.AttackConfig(F.CYLINDER, strategy=s, xi=xi)).distance for s in S]
    print(f"  xi={xi:.1f}: direct {row[0]:6.2f} m   indirect {row[1]:6.2f} m")
