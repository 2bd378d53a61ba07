"""
Drones on a sphere around a pan-tilt turret.

Radially attacking drones keep their direction from the turret, so the
turret's job is a shortest Hamiltonian path (SHP) through unit vectors,
starting from its current aim. This module generates point sets, measures
angular distance under two turret models, solves the path problem, and
describes the 3D safety regions and pan-tilt kinematics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import SphericalVoronoi

from . import tsp
from .errors import InstanceTooLarge, NonUnitVector

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
GOLDEN_ANGLE = 2.0 * math.pi / GOLDEN_RATIO**2

#: traverse rate of a representative close-in weapon system, rad/s
CIWS_RATE = math.radians(115.0)

UNIT_TOL = 1e-9


class PointOrigin(Enum):
    FIBONACCI = "fibonacci"
    LLOYD = "lloyd"
    EXPLICIT = "explicit"


class MetricKind(Enum):
    FREE_ROTATION = "free"
    PAN_TILT_RATE = "pantilt"


class Solver(Enum):
    NN = "nn"
    EXACT_DP = "exact-dp"
    TWO_OPT = "nn+2opt"
    PHANTOM_TOUR = "phantom-tour"


@dataclass(frozen=True)
class Metric:
    kind: MetricKind = MetricKind.FREE_ROTATION
    pan_rate: float = CIWS_RATE
    tilt_rate: float = CIWS_RATE

    def __post_init__(self):
        if self.kind is MetricKind.PAN_TILT_RATE and not (self.pan_rate > 0 and self.tilt_rate > 0):
            raise ValueError("axis rates must be positive")


FREE = Metric()


@dataclass
class SpherePointSet:
    points: np.ndarray
    origin_tag: PointOrigin = PointOrigin.EXPLICIT
    seed: Optional[int] = None
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        norms = np.linalg.norm(self.points, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise NonUnitVector("all points must be unit vectors")

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class PathResult:
    order: list
    leg_lengths: list
    solver: Solver

    @property
    def total(self) -> float:
        return float(sum(self.leg_lengths))


# --------------------------------------------------------------------------
# point sets
# --------------------------------------------------------------------------

def fibonacci_sphere(n: int) -> SpherePointSet:
    """Golden-angle spiral: z evenly spaced in (-1, 1), azimuth stepping by 2pi/phi^2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(1.0 - z * z)
    az = i * GOLDEN_ANGLE
    pts = np.column_stack([rho * np.cos(az), rho * np.sin(az), z])
    return SpherePointSet(pts, PointOrigin.FIBONACCI)


def random_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    """Direction of the area centroid of a convex spherical polygon.

    Uses the exact surface moment: the integral of x over the polygon equals
    half the sum, over edges, of edge length times the unit normal of the
    edge's great circle.
    """
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    cross = np.cross(a, b)
    cn = np.linalg.norm(cross, axis=1)
    keep = cn > 1e-15
    theta = np.arctan2(cn[keep], np.einsum("ij,ij->i", a[keep], b[keep]))
    moment = (theta[:, None] * cross[keep] / cn[keep, None]).sum(axis=0)
    c = moment / np.linalg.norm(moment)
    if np.dot(c, vertices.mean(axis=0)) < 0:
        c = -c
    return c


def min_pairwise_angle(points: np.ndarray) -> float:
    g = np.clip(points @ points.T, -1.0, 1.0)
    np.fill_diagonal(g, -1.0)
    return float(np.arccos(g.max()))


def nearest_neighbor_angles(points: np.ndarray) -> np.ndarray:
    g = np.clip(points @ points.T, -1.0, 1.0)
    np.fill_diagonal(g, -1.0)
    return np.arccos(g.max(axis=1))


def lloyd_relax(n: int, seed: int, iterations: int) -> SpherePointSet:
    """Seeded uniform random directions moved repeatedly to their Voronoi-cell centroids.

    ``history`` on the result holds the minimum pairwise angle after each
    iteration (entry 0 is the random start).
    """
    if n < 4:
        raise ValueError("spherical Voronoi needs n >= 4")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    rng = np.random.default_rng(seed)
    pts = random_directions(n, rng)
    history = [min_pairwise_angle(pts)]
    for _ in range(iterations):
        sv = SphericalVoronoi(pts, radius=1.0, center=np.zeros(3))
        sv.sort_vertices_of_regions()
        new = np.empty_like(pts)
        for k, region in enumerate(sv.regions):
            if len(region) < 3:
                new[k] = random_directions(1, rng)[0]
                continue
            new[k] = polygon_centroid(sv.vertices[region])
        pts = new / np.linalg.norm(new, axis=1, keepdims=True)
        history.append(min_pairwise_angle(pts))
    return SpherePointSet(pts, PointOrigin.LLOYD, seed=seed, history=history)


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------

def pan_tilt(u) -> tuple:
    """Pan (azimuth) and tilt (elevation) angles of direction(s) ``u``."""
    u = np.asarray(u, dtype=float)
    pan = np.arctan2(u[..., 1], u[..., 0])
    tilt = np.arcsin(np.clip(u[..., 2], -1.0, 1.0))
    return pan, tilt


def _check_unit(*vs):
    for v in vs:
        if np.any(np.abs(np.linalg.norm(np.atleast_2d(v), axis=1) - 1.0) > UNIT_TOL):
            raise NonUnitVector("expected unit vector(s)")


def pairwise_distances(a: np.ndarray, b: np.ndarray, metric: Metric = FREE) -> np.ndarray:
    """Distance matrix between unit-vector rows of ``a`` and ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if metric.kind is MetricKind.FREE_ROTATION:
        # atan2 form stays accurate for nearly parallel vectors, unlike arccos
        cross = np.linalg.norm(np.cross(a[:, None, :], b[None, :, :]), axis=2)
        return np.arctan2(cross, a @ b.T)
    pa, ta = pan_tilt(a)
    pb, tb = pan_tilt(b)
    dpan = np.abs(np.mod(pa[:, None] - pb[None, :] + math.pi, 2 * math.pi) - math.pi)
    dtilt = np.abs(ta[:, None] - tb[None, :])
    t = np.maximum(dpan / metric.pan_rate, dtilt / metric.tilt_rate)
    return t * max(metric.pan_rate, metric.tilt_rate)


def angular_distance(u, v, metric: Metric = FREE) -> float:
    """Turret travel between two aim directions, as an equivalent angle."""
    _check_unit(u, v)
    return float(pairwise_distances(u, v, metric)[0, 0])


def _with_start(points, start_direction, metric: Metric) -> np.ndarray:
    pts = points.points if isinstance(points, SpherePointSet) else np.atleast_2d(points)
    start = np.asarray(start_direction, dtype=float).reshape(1, 3)
    _check_unit(start)
    allp = np.vstack([start, pts])
    return pairwise_distances(allp, allp, metric)


def _result(dist: np.ndarray, order, solver: Solver) -> PathResult:
    seq = [0, *order]
    legs = [float(dist[a, b]) for a, b in zip(seq[:-1], seq[1:])]
    return PathResult([i - 1 for i in order], legs, solver)


# --------------------------------------------------------------------------
# paths
# --------------------------------------------------------------------------

def nn_path(points, start_direction, metric: Metric = FREE) -> PathResult:
    dist = _with_start(points, start_direction, metric)
    order, _ = tsp.nearest_neighbor_path(dist)
    return _result(dist, order, Solver.NN)


def exact_shp(points, start_direction, metric: Metric = FREE) -> PathResult:
    dist = _with_start(points, start_direction, metric)
    if dist.shape[0] - 1 > tsp.MAX_EXACT:
        raise InstanceTooLarge(f"exact SHP limited to {tsp.MAX_EXACT} points")
    order, _ = tsp.held_karp_path(dist)
    return _result(dist, order, Solver.EXACT_DP)


def improved_path(points, start_direction, metric: Metric = FREE, or_opt: bool = True) -> PathResult:
    """Nearest neighbor followed by 2-opt (and Or-opt) local search.

    Near-optimal baseline for instances beyond the exact solver; not claimed optimal.
    """
    dist = _with_start(points, start_direction, metric)
    order, _ = tsp.nearest_neighbor_path(dist)
    order, total = tsp.two_opt_path(dist, order)
    if or_opt:
        while True:
            order, t2 = tsp.or_opt_path(dist, order)
            order, t3 = tsp.two_opt_path(dist, order)
            if t3 >= total - 1e-12:
                break
            total = t3
    return _result(dist, order, Solver.TWO_OPT)


def phantom_transform(points, start_direction, metric: Metric = FREE) -> np.ndarray:
    """Symmetric TSP matrix whose optimal tour encodes the SHP from the start.

    Node order is ``[start, p_1 .. p_n, phantom]``. The phantom is free to
    reach from the start and costs ``M = (n + 2) * pi`` to reach from any
    target, so every optimal tour uses the start-phantom edge plus exactly one
    expensive edge, and cutting the tour at the phantom leaves the SHP.
    """
    base = _with_start(points, start_direction, metric)
    n = base.shape[0] - 1
    big = (n + 2) * math.pi
    out = np.full((n + 2, n + 2), big)
    out[: n + 1, : n + 1] = base
    out[n + 1, 0] = out[0, n + 1] = 0.0
    out[n + 1, n + 1] = 0.0
    return out


def shp_from_tour(tour: Sequence[int], matrix: np.ndarray) -> PathResult:
    """Recover the open path from a tour over a phantom-transformed matrix.

    The phantom is dropped and the tour is read from the start in whichever
    direction does not go straight back into the phantom; if both do (n = 0)
    or neither does, the direction with the shorter first move is used.
    """
    m = matrix.shape[0]
    phantom = m - 1
    tour = list(tour)
    k = tour.index(0)
    seq = tour[k:] + tour[:k]
    fwd = seq[1:]
    back = seq[:0:-1]
    cands = []
    for direction in (fwd, back):
        path = [x for x in direction if x != phantom]
        ok = not direction or direction[0] != phantom or len(direction) == 1
        first = matrix[0, path[0]] if path else 0.0
        cands.append((not ok, first, path))
    cands.sort(key=lambda c: (c[0], c[1]))
    path = cands[0][2]
    legs = [float(matrix[a, b]) for a, b in zip([0, *path[:-1]], path)]
    return PathResult([i - 1 for i in path], legs, Solver.PHANTOM_TOUR)


def phantom_shp(points, start_direction, metric: Metric = FREE) -> PathResult:
    """SHP obtained by solving the phantom-transformed TSP exactly and cutting the tour."""
    matrix = phantom_transform(points, start_direction, metric)
    order, _ = tsp.held_karp_tour(matrix)
    return shp_from_tour([0, *order], matrix)


# --------------------------------------------------------------------------
# TSPLIB interchange
# --------------------------------------------------------------------------

TSPLIB_SCALE = 1e6


def write_tsplib(matrix: np.ndarray, path, name: str = "turret_shp", start: int = 0, phantom: Optional[int] = None) -> Path:
    """Write a symmetric matrix (radians) as a FULL_MATRIX TSPLIB problem."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if phantom is None:
        phantom = n - 1
    weights = np.rint(matrix * TSPLIB_SCALE).astype(np.int64)
    path = Path(path)
    lines = [
        f"NAME: {name}",
        "TYPE: TSP",
        f"COMMENT: start={start + 1} phantom={phantom + 1} scale={TSPLIB_SCALE:g} units=radians",
        f"DIMENSION: {n}",
        "EDGE_WEIGHT_TYPE: EXPLICIT",
        "EDGE_WEIGHT_FORMAT: FULL_MATRIX",
        "EDGE_WEIGHT_SECTION",
    ]
    lines += [" ".join(str(w) for w in row) for row in weights]
    lines.append("EOF")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_tsplib(path):
    """Parse a FULL_MATRIX TSPLIB file. Returns ``(matrix_in_radians, header)``."""
    header, rows, in_weights = {}, [], False
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line == "EOF":
            continue
        if line == "EDGE_WEIGHT_SECTION":
            in_weights = True
            continue
        if in_weights:
            rows.extend(int(x) for x in line.split())
        else:
            key, _, value = line.partition(":")
            header[key.strip()] = value.strip()
    n = int(header["DIMENSION"])
    return np.array(rows, dtype=float).reshape(n, n) / TSPLIB_SCALE, header


def read_tour(path) -> list:
    """Read a TSPLIB ``.tour`` file (1-based ids, -1 terminated) as 0-based ids."""
    ids, active = [], False
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line == "TOUR_SECTION":
            active = True
            continue
        if active:
            for tok in line.split():
                v = int(tok)
                if v == -1:
                    return ids
                ids.append(v - 1)
    return ids


# --------------------------------------------------------------------------
# scaling
# --------------------------------------------------------------------------

def sqrt_fit(ns, totals):
    """Least-squares ``total ~ c * sqrt(n)``. Returns ``(c, rms_residual)``."""
    ns = np.asarray(ns, dtype=float)
    totals = np.asarray(totals, dtype=float)
    if len(ns) < 3:
        raise ValueError("need at least three points")
    s = np.sqrt(ns)
    c = float(s @ totals / (s @ s))
    rms = float(np.sqrt(np.mean((totals - c * s) ** 2)))
    return c, rms


# --------------------------------------------------------------------------
# safety regions and kinematics
# --------------------------------------------------------------------------

class SafetyRegion(Enum):
    SPHERE = "safe_sphere"
    CYLINDER = "safe_cylinder"
    CONE = "safe_cone"
    UNSAFE = "unsafe"


@dataclass(frozen=True)
class SafetyTurret:
    """Rate and joint-limit description of a pan-tilt turret at the origin.

    ``geodesic_rate`` models a turret bounded by angular speed along the
    great circle; ``tilt_limits`` are elevation limits in rad, or None for no
    joint limits.
    """

    pan_rate: float = CIWS_RATE
    tilt_rate: float = CIWS_RATE
    geodesic_rate: float = CIWS_RATE
    tilt_limits: Optional[tuple] = None

    def __post_init__(self):
        if min(self.pan_rate, self.tilt_rate, self.geodesic_rate) <= 0:
            raise ValueError("rates must be positive")


def safety_sphere_radius(speed: float, turret: SafetyTurret = SafetyTurret()) -> float:
    return speed / turret.geodesic_rate


def safety_cylinder_radius(speed: float, turret: SafetyTurret = SafetyTurret()) -> float:
    return speed / turret.pan_rate


def safety_region_membership(drone_pos, drone_speed: float, turret: SafetyTurret = SafetyTurret()) -> SafetyRegion:
    """Strongest safety region containing the drone (sphere, then cylinder, then cone)."""
    if not drone_speed > 0:
        raise ValueError("drone speed must be positive")
    p = np.asarray(drone_pos, dtype=float)
    if np.linalg.norm(p) <= safety_sphere_radius(drone_speed, turret):
        return SafetyRegion.SPHERE
    if math.hypot(p[0], p[1]) <= safety_cylinder_radius(drone_speed, turret):
        return SafetyRegion.CYLINDER
    if turret.tilt_limits is not None:
        lo, hi = turret.tilt_limits
        elevation = math.atan2(p[2], math.hypot(p[0], p[1]))
        if elevation < lo or elevation > hi:
            return SafetyRegion.CONE
    return SafetyRegion.UNSAFE


def pan_tilt_forward(theta: float, phi: float, d: float) -> np.ndarray:
    """Muzzle point of R_z(theta) R_y(phi) followed by a translation d along z."""
    return d * np.array([math.cos(theta) * math.sin(phi), math.sin(theta) * math.sin(phi), math.cos(phi)])


def pan_tilt_jacobian(theta: float, phi: float, d: float) -> np.ndarray:
    """Manipulator Jacobian of the pan-tilt-prismatic chain (columns: theta, phi, d).

    Singular when phi is 0 or pi (gun along the pan axis) or when d = 0.
    """
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    return np.array([
        [-d * st * sp, d * ct * cp, ct * sp],
        [d * ct * sp, d * st * cp, st * sp],
        [0.0, -d * sp, cp],
    ])
