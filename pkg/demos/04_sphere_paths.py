"""Aiming order for targets spread over the sphere of directions.

Builds evenly spread target sets, compares the nearest-neighbor order with
local search and with the exact shortest path, and exports one instance in
TSPLIB form for an external solver.
"""
import tempfile
from pathlib import Path

import numpy as np

from turret_evasion import sphere3d as sp

start = np.array([1.0, 0.0, 0.0])
relaxed = sp.lloyd_relax(10, seed=1, iterations=40)
print(f"Lloyd relaxation, 10 points: closest pair {np.degrees(relaxed.history[0]):.1f} deg "
      f"-> {np.degrees(relaxed.history[-1]):.1f} deg")

for metric in (sp.FREE, sp.Metric(sp.MetricKind.PAN_TILT_RATE)):
    nn = sp.nn_path(relaxed.points, start, metric).total
    exact = sp.exact_shp(relaxed.points, start, metric).total
    print(f"{metric.kind.value:>8}: nearest neighbor {nn:.4f}, exact {exact:.4f} ({nn / exact - 1:.1%} longer)")

ns = [25, 50, 100, 200, 400]
totals = [sp.nn_path(sp.fibonacci_sphere(n).points, start).total for n in ns]
c, _ = sp.sqrt_fit(ns, totals)
print("\nnearest-neighbor path on Fibonacci sets grows like c*sqrt(n):")
for n, t in zip(ns, totals):
    print(f"  n={n:3d}: {t:7.3f} rad   c*sqrt(n)={c * np.sqrt(n):7.3f}")

with tempfile.TemporaryDirectory() as tmp:
    matrix = sp.phantom_transform(relaxed.points, start)
    path = sp.write_tsplib(matrix, Path(tmp) / "relaxed10.tsp", phantom=len(matrix) - 1)
    print(f"\nTSPLIB export ({len(matrix)} nodes including start and phantom):")
    print("\n".join(path.read_text().splitlines()[:6]))
