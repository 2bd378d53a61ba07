"""
Fixed-step 3D engagement: a rate-limited pan-tilt gun against a swarm.

The turret sits at the origin on flat ground (z = 0). Each step it slews
both axes at their rate limits toward its current target, picked by
time-to-aim from the current pose, and instantly destroys anything inside a
narrow cone around the gun axis. Drones accelerate toward a goal blended
with a push off the firing line; the first drone to reach the turret wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import AttackNeverSucceeds, NoPreferredDirection
from .sphere3d import CIWS_RATE

UP = np.array([0.0, 0.0, 1.0])
DEGENERATE_TOL = 1e-12


def _wrap(a):
    return math.pi - (math.pi - a) % (2.0 * math.pi)


class TargetPolicy(Enum):
    NEAREST_NEIGHBOR = "nearest"


class Formation(Enum):
    PLANE = "plane"
    HALF_CYLINDER = "half_cylinder"
    CYLINDER = "cylinder"


class AttackStrategy(Enum):
    DIRECT = "direct"
    INDIRECT = "indirect"


class Outcome(Enum):
    TURRET_DESTROYED = "turret_destroyed"
    ALL_DRONES_DOWN = "all_drones_down"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Turret3D:
    pan: float = 0.0
    tilt: float = 0.0
    pan_rate_max: float = CIWS_RATE
    tilt_rate_max: float = CIWS_RATE
    kill_cone_half_angle: float = math.radians(0.5)
    target_policy: TargetPolicy = TargetPolicy.NEAREST_NEIGHBOR

    def __post_init__(self):
        if not (self.pan_rate_max > 0 and self.tilt_rate_max > 0):
            raise ValueError("turret rates must be positive")
        if not self.kill_cone_half_angle > 0:
            raise ValueError("kill cone must be positive")
        object.__setattr__(self, "pan", _wrap(self.pan))

    @property
    def gun_dir(self) -> np.ndarray:
        return gun_direction(self.pan, self.tilt)


@dataclass(frozen=True)
class DroneBody:
    p: np.ndarray
    vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    max_speed: float = 5.0
    max_accel: float = 10.0
    alive: bool = True

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(3))
        object.__setattr__(self, "vel", np.asarray(self.vel, dtype=float).reshape(3))


@dataclass(frozen=True)
class AttackConfig:
    formation: Formation = Formation.CYLINDER
    n: int = 32
    d: float = 20.0
    strategy: AttackStrategy = AttackStrategy.DIRECT
    xi: float = 0.0
    k1: float = 4.0
    k2: float = 5.0
    per_row: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")
        if not self.d > 0:
            raise ValueError("d must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("k1 and k2 must be positive")


@dataclass(frozen=True)
class SimParams:
    dt: float = 1.0 / 240.0
    hit_radius: float = 0.5
    max_speed: float = 5.0
    max_accel: float = 10.0
    turret: Turret3D = Turret3D()
    repulsion_cone: float = math.pi / 8
    separation_radius: float = 2.0
    separation_weight: float = 1.0
    row_spacing: float = 2.0
    # indirect attackers dive straight for the turret once this low
    attack_altitude: float = 1.0
    ground_clamp: bool = True
    max_time: Optional[float] = None
    turret_vulnerable: bool = True
    record_trace: bool = False
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.max_speed > 0 and self.max_accel > 0 and self.hit_radius > 0):
            raise ValueError("speed, acceleration and hit radius must be positive")


@dataclass(frozen=True)
class KillRecord:
    drone_id: int
    time: float
    position: tuple
    aim_error: float


@dataclass
class EngagementResult:
    outcome: Outcome
    time: float
    kill_log: list
    winner: Optional[int] = None
    steps: int = 0
    trace: Optional[dict] = None


# --------------------------------------------------------------------------
# primitives
# --------------------------------------------------------------------------

def gun_direction(pan: float, tilt: float) -> np.ndarray:
    ct = math.cos(tilt)
    return np.array([ct * math.cos(pan), ct * math.sin(pan), math.sin(tilt)])


def aim_angles(p) -> tuple:
    """Pan and tilt that point the gun at ``p`` (tilt within [-pi/2, pi/2])."""
    p = np.asarray(p, dtype=float)
    return math.atan2(p[1], p[0]), math.atan2(p[2], math.hypot(p[0], p[1]))


def aim_error(gun_dir, p) -> float:
    """Angle between the gun axis and the direction to ``p``."""
    p = np.asarray(p, dtype=float)
    c = float(np.dot(gun_dir, p) / np.linalg.norm(p))
    return math.acos(max(-1.0, min(1.0, c)))


def step_drone(body: DroneBody, desired_force_dir, dt: float) -> DroneBody:
    """Accelerate at full thrust along ``desired_force_dir``; speed saturates at ``max_speed``.

    Velocity is updated before position. A zero direction leaves velocity unchanged.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    vel = body.vel + body.max_accel * np.asarray(desired_force_dir, dtype=float) * dt
    speed = float(np.linalg.norm(vel))
    if speed > body.max_speed:
        vel = vel * (body.max_speed / speed)
    return replace(body, p=body.p + vel * dt, vel=vel)


def gun_repulsion(gun_dir, drone_pos, cone: float = math.pi / 8) -> np.ndarray:
    """Push off the firing line: (g x p) x p, scaled by 1 - psi/cone inside the cone."""
    g = np.asarray(gun_dir, dtype=float)
    p = np.asarray(drone_pos, dtype=float)
    norm = np.linalg.norm(p)
    if norm == 0.0:
        raise ValueError("drone at the turret has no bearing")
    ph = p / norm
    c = float(np.clip(g @ ph, -1.0, 1.0))
    psi = math.acos(c)
    if psi >= cone:
        return np.zeros(3)
    direction = c * ph - g
    dn = np.linalg.norm(direction)
    if dn < DEGENERATE_TOL:
        direction = np.cross(UP, ph)
        dn = np.linalg.norm(direction)
        if dn < DEGENERATE_TOL:
            direction = np.cross(np.array([1.0, 0.0, 0.0]), ph)
            dn = np.linalg.norm(direction)
    return (1.0 - psi / cone) * direction / dn


def blended_direction(goal_force, repulse_force, xi: float) -> np.ndarray:
    """normalize((1 - xi) F_g + xi F_r), falling back to the goal direction."""
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    fg = np.asarray(goal_force, dtype=float)
    fr = np.asarray(repulse_force, dtype=float)
    blend = (1.0 - xi) * fg + xi * fr
    n = np.linalg.norm(blend)
    if n > DEGENERATE_TOL:
        return blend / n
    ng = np.linalg.norm(fg)
    if ng > DEGENERATE_TOL:
        return fg / ng
    raise NoPreferredDirection("goal and repulsion forces both vanish")


def indirect_goal(gun_dir, drone_pos, k1: float = 4.0, k2: float = 5.0) -> np.ndarray:
    """Goal behind the gun and below the drone: [-k1 g_x, -k1 g_y, p_z - k2]."""
    if not (k1 > 0 and k2 > 0):
        raise ValueError("k1 and k2 must be positive")
    g = np.asarray(gun_dir, dtype=float)
    return np.array([-k1 * g[0], -k1 * g[1], float(drone_pos[2]) - k2])


def formation(kind: Formation, n: int, d: float, per_row: Optional[int] = None, row_spacing: float = 2.0) -> np.ndarray:
    """Staggered starting grid; rows sit 2, 4, 6 ... m up and odd rows shift half a column.

    PLANE is the vertical plane x = d spanning +-45 deg of pan; HALF_CYLINDER
    spans pan -90..90 deg at horizontal radius d; CYLINDER rings the turret.
    """
    if n < 1 or not d > 0:
        raise ValueError("need n >= 1 and d > 0")
    cols = per_row or math.ceil(math.sqrt(n))
    out = np.empty((n, 3))
    for i in range(n):
        row, k = divmod(i, cols)
        shift = 0.5 * (row % 2)
        z = row_spacing * (row + 1)
        if kind is Formation.PLANE:
            y = -d + 2.0 * d * (k + 0.5 + shift) / cols
            out[i] = (d, min(y, d), z)
        elif kind is Formation.HALF_CYLINDER:
            az = -math.pi / 2 + math.pi * (k + 0.5 + shift) / cols
            az = min(az, math.pi / 2)
            out[i] = (d * math.cos(az), d * math.sin(az), z)
        else:
            az = 2.0 * math.pi * (k + shift) / cols
            out[i] = (d * math.cos(az), d * math.sin(az), z)
    return out


def step_turret(pan: float, tilt: float, target, turret: Turret3D, dt: float) -> tuple:
    """Slew each axis toward the aim at ``target`` by at most rate * dt."""
    tp, tt = aim_angles(target)
    dp = _wrap(tp - pan)
    lim_p = turret.pan_rate_max * dt
    lim_t = turret.tilt_rate_max * dt
    dp = max(-lim_p, min(lim_p, dp))
    dtl = max(-lim_t, min(lim_t, tt - tilt))
    return _wrap(pan + dp), tilt + dtl


def time_to_aim(pan: float, tilt: float, points: np.ndarray, turret: Turret3D) -> np.ndarray:
    pans = np.arctan2(points[:, 1], points[:, 0])
    tilts = np.arctan2(points[:, 2], np.hypot(points[:, 0], points[:, 1]))
    dpan = np.abs(np.mod(pans - pan + math.pi, 2 * math.pi) - math.pi)
    return np.maximum(dpan / turret.pan_rate_max, np.abs(tilts - tilt) / turret.tilt_rate_max)


def safety_cylinder_radius(params: SimParams) -> float:
    return params.max_speed / params.turret.pan_rate_max


# --------------------------------------------------------------------------
# engagement
# --------------------------------------------------------------------------

def _goal_dirs(P, alive, gdir, strategy, config, params, r_cyl):
    n = len(P)
    goals = np.zeros((n, 3))
    if strategy is AttackStrategy.INDIRECT:
        rho = np.hypot(P[:, 0], P[:, 1])
        outside = rho > r_cyl
        low = P[:, 2] <= params.attack_altitude
        spiral = ~outside & ~low
        goals[outside, 2] = P[outside, 2]
        if np.any(spiral):
            goals[spiral, 0] = -config.k1 * gdir[0]
            goals[spiral, 1] = -config.k1 * gdir[1]
            goals[spiral, 2] = P[spiral, 2] - config.k2
    delta = goals - P
    norms = np.linalg.norm(delta, axis=1, keepdims=True)
    return np.where(norms > DEGENERATE_TOL, delta / np.maximum(norms, DEGENERATE_TOL), 0.0)


def _repulsion(P, gdir, cone):
    norms = np.linalg.norm(P, axis=1, keepdims=True)
    ph = P / np.maximum(norms, DEGENERATE_TOL)
    c = np.clip(ph @ gdir, -1.0, 1.0)
    psi = np.arccos(c)
    inside = psi < cone
    out = np.zeros_like(P)
    if not np.any(inside):
        return out
    for i in np.flatnonzero(inside):
        out[i] = gun_repulsion(gdir, P[i], cone)
    return out


def _separation(P, alive, radius, weight):
    idx = np.flatnonzero(alive)
    out = np.zeros_like(P)
    if len(idx) < 2:
        return out
    Q = P[idx]
    diff = Q[:, None, :] - Q[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    near = (dist < radius) & (dist > DEGENERATE_TOL)
    if not np.any(near):
        return out
    scale = np.where(near, 1.0 / np.maximum(dist, DEGENERATE_TOL) ** 3, 0.0)
    out[idx] = weight * np.einsum("ij,ijk->ik", scale, diff)
    return out


def simulate(bodies, strategy: AttackStrategy, config: AttackConfig, params: SimParams) -> EngagementResult:
    """Run an engagement from explicit drone states until one side is gone."""
    turret = params.turret
    P = np.array([b.p for b in bodies], dtype=float)
    V = np.array([b.vel for b in bodies], dtype=float)
    max_speed = np.array([b.max_speed for b in bodies])
    max_accel = np.array([b.max_accel for b in bodies])
    alive = np.array([b.alive for b in bodies], dtype=bool)
    n = len(P)
    dt = params.dt
    pan, tilt = turret.pan, turret.tilt
    r_cyl = safety_cylinder_radius(params)
    max_time = params.max_time
    if max_time is None:
        max_time = 60.0 + 3.0 * float(np.max(np.linalg.norm(P, axis=1))) / float(max_speed.min())
    steps_max = int(math.ceil(max_time / dt))
    kills = []
    target = -1
    trace = None
    if params.record_trace:
        trace = {"t": [], "pan": [], "tilt": [], "p": [], "vel": [], "alive": [], "target": []}

    t = 0.0
    for step in range(1, steps_max + 1):
        if not alive.any():
            return EngagementResult(Outcome.ALL_DRONES_DOWN, t, kills, None, step - 1, trace)
        if target < 0 or not alive[target]:
            cand = np.flatnonzero(alive)
            costs = time_to_aim(pan, tilt, P[cand], turret)
            target = int(cand[int(np.argmin(costs))])

        gdir = gun_direction(pan, tilt)
        fg = _goal_dirs(P, alive, gdir, strategy, config, params, r_cyl)
        fr = _repulsion(P, gdir, params.repulsion_cone)
        blend = (1.0 - config.xi) * fg + config.xi * fr
        bn = np.linalg.norm(blend, axis=1, keepdims=True)
        desired = np.where(bn > DEGENERATE_TOL, blend / np.maximum(bn, DEGENERATE_TOL), fg)
        desired = desired + _separation(P, alive, params.separation_radius, params.separation_weight)
        dn = np.linalg.norm(desired, axis=1, keepdims=True)
        desired = np.where(dn > DEGENERATE_TOL, desired / np.maximum(dn, DEGENERATE_TOL), 0.0)

        live = alive[:, None]
        Vn = V + max_accel[:, None] * desired * dt
        speed = np.linalg.norm(Vn, axis=1)
        over = speed > max_speed
        Vn[over] *= (max_speed[over] / speed[over])[:, None]
        V = np.where(live, Vn, V)
        P = np.where(live, P + V * dt, P)
        if params.ground_clamp:
            below = alive & (P[:, 2] < 0.0)
            P[below, 2] = 0.0
            V[below, 2] = np.maximum(V[below, 2], 0.0)
        t = step * dt

        pan, tilt = step_turret(pan, tilt, P[target], turret, dt)
        gdir = gun_direction(pan, tilt)
        norms = np.linalg.norm(P, axis=1)
        cosines = (P @ gdir) / np.maximum(norms, DEGENERATE_TOL)
        errs = np.arccos(np.clip(cosines, -1.0, 1.0))
        hit = alive & (errs <= turret.kill_cone_half_angle) & (norms > 0.0)
        for i in np.flatnonzero(hit):
            alive[i] = False
            kills.append(KillRecord(int(i), t, tuple(float(x) for x in P[i]), float(errs[i])))

        if trace is not None:
            trace["t"].append(t)
            trace["pan"].append(pan)
            trace["tilt"].append(tilt)
            trace["p"].append(P.copy())
            trace["vel"].append(V.copy())
            trace["alive"].append(alive.copy())
            trace["target"].append(target)

        if params.turret_vulnerable:
            reached = np.flatnonzero(alive & (norms <= params.hit_radius))
            if len(reached):
                return EngagementResult(Outcome.TURRET_DESTROYED, t, kills, int(reached[0]), step, trace)
    if not alive.any():
        return EngagementResult(Outcome.ALL_DRONES_DOWN, t, kills, None, steps_max, trace)
    return EngagementResult(Outcome.TIMEOUT, t, kills, None, steps_max, trace)


def run_engagement(config: AttackConfig, params: SimParams = SimParams()) -> EngagementResult:
    """Drones start at rest in ``config.formation`` and attack with ``config.strategy``."""
    pts = formation(config.formation, config.n, config.d, config.per_row, params.row_spacing)
    bodies = [DroneBody(p, max_speed=params.max_speed, max_accel=params.max_accel) for p in pts]
    return simulate(bodies, config.strategy, config, params)


@dataclass(frozen=True)
class MaxDistanceResult:
    distance: float
    unbounded: bool = False
    monotone_violation: bool = False
    evaluations: tuple = ()


def max_start_distance(config: AttackConfig, params: SimParams = SimParams(), d_min: float = 1.0,
                       d_cap: float = 400.0, resolution: float = 0.5) -> MaxDistanceResult:
    """Largest formation distance from which the drones still destroy the turret.

    Brackets by doubling or halving from ``config.d`` and bisects to
    ``resolution``. If the sampled outcomes are not monotone in d, the bracket
    is rescanned on a ``resolution`` grid and the largest winning d returned.
    """
    seen = {}

    def wins(d):
        d = float(d)
        if d not in seen:
            seen[d] = run_engagement(replace(config, d=d), params).outcome is Outcome.TURRET_DESTROYED
        return seen[d]

    def done(dist, unbounded=False, violation=False):
        return MaxDistanceResult(dist, unbounded, violation, tuple(sorted(seen.items())))

    d0 = min(max(config.d, d_min), d_cap)
    if wins(d0):
        lo, hi = d0, min(2.0 * d0, d_cap)
        while wins(hi):
            if hi >= d_cap:
                return done(d_cap, unbounded=True)
            lo, hi = hi, min(2.0 * hi, d_cap)
    else:
        hi, lo = d0, max(d0 / 2.0, d_min)
        while not wins(lo):
            if lo <= d_min:
                raise AttackNeverSucceeds(f"drones lose even from d={d_min}")
            hi, lo = lo, max(lo / 2.0, d_min)
    bracket = (lo, hi)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if wins(mid):
            lo = mid
        else:
            hi = mid

    items = sorted(seen.items())
    violation = any(not w1 and w2 for (_, w1), (_, w2) in zip(items[:-1], items[1:]))
    if violation:
        grid = np.arange(bracket[0], bracket[1] + 1e-9, resolution)
        best = max((d for d in grid if wins(d)), default=bracket[0])
        best = max([best] + [d for d, w in seen.items() if w and d <= bracket[1]])
        return done(float(best), violation=True)
    return done(lo)
