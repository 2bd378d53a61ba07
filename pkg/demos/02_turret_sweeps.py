"""How much must the turret turn to face every drone once?

Compares the greedy turret (always the nearest survivor) with the optimal
sweep on two adversarial layouts and on random bearings.
"""
import math

import numpy as np

from turret_evasion import placement2d as pl

eps = 1e-3
print(" n   halving: greedy  optimal   doubling: greedy  optimal   (2*pi - alpha_opt)")
for n in range(1, 9):
    h = pl.greedy_spacing(n, eps)
    d = pl.doubling_spacing(n)
    print(f"{n:2d}   {pl.greedy_sweep(h).total_length:15.4f} {pl.optimal_sweep(h).total_length:8.4f}"
          f"   {pl.greedy_sweep(d).total_length:16.4f} {pl.optimal_sweep(d).total_length:8.4f}"
          f"   {2 * math.pi - pl.alpha_opt(n):.4f}")

print("\nThe doubling layout forces nearly a full turn whatever the turret does.")
print("On uniformly random bearings the greedy turret is close to optimal:")
for n in (2, 5, 10):
    runs = np.array([pl.random_trial(n, s) for s in range(300)])
    g, o = runs.mean(axis=0)
    print(f"  n={n:2d}: greedy {g:.3f} rad, optimal {o:.3f} rad ({g / o - 1:.1%} extra)")
