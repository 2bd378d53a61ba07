"""
Angular placements for radially attacking drones and turret sweep policies.

Drones flying straight at the turret keep a constant bearing, so the fight
reduces to the turret visiting a fixed set of angles on a circle, starting
from heading 0. Lengths are in radians of turret travel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry2d import TWO_PI, wrap_angle
from .tsp import MAX_EXACT, held_karp_path
from .errors import InstanceTooLarge, InvalidEpsilon

# near-equal arcs within this are treated as ties (CCW wins)
TIE_TOL = 1e-9


@dataclass(frozen=True)
class AngularConfiguration:
    angles: tuple
    epsilon: float = 0.0

    def __post_init__(self):
        if len(self.angles) < 1:
            raise ValueError("need at least one drone")
        object.__setattr__(self, "angles", tuple(float(wrap_angle(a)) for a in self.angles))

    @property
    def n(self) -> int:
        return len(self.angles)


@dataclass(frozen=True)
class SweepResult:
    visit_order: list
    per_leg: list = field(default_factory=list)

    @property
    def total_length(self) -> float:
        return float(sum(self.per_leg))


def arc_distance(a, b):
    """Shorter arc between two bearings."""
    d = np.mod(np.asarray(b, dtype=float) - np.asarray(a, dtype=float), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def greedy_spacing(n: int, epsilon: float) -> AngularConfiguration:
    """Placement that maximizes the path of a nearest-target turret.

    Drone j sits at the partial sum of pi * (1/2)**(n-1-i), i < j, minus
    epsilon, which puts the first drone just CCW of the heading and the last
    just CW of it.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    upper = 0.5 ** (n - 1) * math.pi
    if not 0.0 < epsilon < upper:
        raise InvalidEpsilon(f"epsilon must lie in (0, {upper:.3g}) for n={n}, got {epsilon}")
    unit = math.pi * 0.5 ** (n - 1)
    angles = [unit * (2 ** j - 1) - epsilon for j in range(1, n + 1)]
    return AngularConfiguration(tuple(angles), epsilon)


def alpha_opt(n: int) -> float:
    return TWO_PI / (2 ** math.ceil(n / 2) + 2 ** (n // 2 + 1) - 2)


def doubling_spacing(n: int) -> AngularConfiguration:
    """Symmetric placement at +-a, +-3a, +-7a, ... with a = alpha_opt(n); odd n adds pi."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a = alpha_opt(n)
    angles = []
    for k in range(1, n // 2 + 1):
        m = (2 ** k - 1) * a
        angles += [m, -m]
    if n % 2:
        angles.append(math.pi)
    return AngularConfiguration(tuple(angles))


def greedy_sweep(config: AngularConfiguration) -> SweepResult:
    """Turret that always turns to the angularly nearest remaining drone."""
    angles = np.array(config.angles)
    remaining = list(range(config.n))
    heading = 0.0
    order, legs = [], []
    while remaining:
        ccw = np.mod(angles[remaining] - heading, TWO_PI)
        cw = np.mod(heading - angles[remaining], TWO_PI)
        dist = np.minimum(ccw, cw)
        best = dist.min()
        ties = np.flatnonzero(dist <= best + TIE_TOL)
        if len(ties) > 1:
            # prefer a target reached by turning CCW, then the lowest index
            ccw_ties = [t for t in ties if ccw[t] <= cw[t] + TIE_TOL]
            pick = ccw_ties[0] if ccw_ties else ties[0]
        else:
            pick = ties[0]
        idx = remaining.pop(int(pick))
        order.append(idx)
        legs.append(float(dist[pick]))
        heading = angles[idx]
    return SweepResult(order, legs)


def _circle_matrix(angles) -> np.ndarray:
    pts = np.concatenate([[0.0], np.asarray(angles, dtype=float)])
    return arc_distance(pts[:, None], pts[None, :])


def optimal_sweep(config: AngularConfiguration) -> SweepResult:
    """Shortest sweep visiting every bearing, from heading 0, no return."""
    if config.n > MAX_EXACT:
        raise InstanceTooLarge(f"n={config.n} exceeds exact limit {MAX_EXACT}")
    dist = _circle_matrix(config.angles)
    order, _ = held_karp_path(dist)
    seq = [0, *order]
    legs = [float(dist[a, b]) for a, b in zip(seq[:-1], seq[1:])]
    return SweepResult([i - 1 for i in order], legs)


def random_trial(n: int, seed: int):
    """Greedy and optimal sweep lengths for ``n`` uniform random bearings."""
    rng = np.random.default_rng(seed)
    angles = rng.uniform(-math.pi, math.pi, n)
    config = AngularConfiguration(tuple(angles))
    return greedy_sweep(config).total_length, optimal_sweep(config).total_length
