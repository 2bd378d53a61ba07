"""
Two cooperating drones against a planar turret.

Drone 1 starts at bearing ``alpha1`` (turret heading 0), drone 2 at a bearing
chosen by the strategy, both at radius ``r`` in normalized units (turret rate
1 rad/s, drone speed 1, safety circle radius 1). The pair succeeds when either
drone reaches the safety circle. Feasibility is judged by a fixed-step
simulation; closed forms and 1-D root solves only seed the searches.

Strategies:
    RADIAL      both fly straight in.
    TANGENT     both fly toward the tangent point on the side away from the
                turret's motion.
    HYBRID      drone 1 flies straight to where it can stay alive longest and
                dies at bearing beta; drone 2 starts at pi + beta, flies in
                radially until then, and evades tangentially afterwards.
    TRANSITION  drone 1 holds a fixed heading; drone 2 heads for the point
                diametrically opposite drone 1's death, then evades.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalFailure, UnsupportedRegime
from .geometry2d import TWO_PI, tangent_region_radius, wrap_angle

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        def decorator(func):
            return func

        return decorator


DT = 1e-4
R_RESOLUTION = 1e-4
SAFETY_SLACK = 1e-9

#: tangent-region radius directly behind the turret (unit speed)
R_BEHIND = tangent_region_radius(math.pi, 1.0)


class DuoStrategy(Enum):
    RADIAL = "radial"
    TANGENT = "tangent"
    HYBRID = "hybrid"
    TRANSITION = "transition"


class StayAliveForm(Enum):
    # r sin(beta - alpha1) = beta, with r the starting radius
    TANGENCY = "tangency"
    # alpha1 = beta - arcsin(1 / (rho / beta + 1)) with rho given directly
    OFFSET_RADIUS = "offset-radius"


@dataclass(frozen=True)
class DuoScenario:
    alpha1: float
    strategy: DuoStrategy
    r: float
    heading: Optional[float] = None  # drone 1 heading for TRANSITION (world angle)
    tie_direction: int = 0  # turret direction when a target is exactly behind; 0 keeps the current one
    dt: float = DT

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")
        if self.tie_direction not in (-1, 0, 1):
            raise ValueError("tie_direction must be -1, 0 or 1")


@dataclass(frozen=True)
class DuoOutcome:
    survivor: Optional[int]  # 1 or 2, None when both die
    beta: Optional[float]  # bearing of drone 1's death
    r_feasible: bool
    death_times: tuple = (None, None)


# --------------------------------------------------------------------------
# simulation kernel
# --------------------------------------------------------------------------

LEG_RADIAL, LEG_HEADING, LEG_GOTO, LEG_EVADE = 0, 1, 2, 3
SWITCH_NEVER, SWITCH_ON_ARRIVAL, SWITCH_ON_PARTNER_DEATH = 0, 1, 2


@njit(cache=True)
def _wrap(a):
    a = (a + math.pi) % TWO_PI
    if a < 0.0:
        a += TWO_PI
    return a - math.pi


@njit(cache=True, nogil=True)
def _simulate(px, py, kind, par, switch, kind2, par2, dt, tmax, tie_dir, tie_tol):
    """Returns (survivor index or -1 all dead or -2 timeout, death t, death x, death y)."""
    phi = 0.0
    s = 0.0
    alive = np.ones(2, np.bool_)
    leg = np.zeros(2, np.int64)
    dtm = np.full(2, -1.0)
    dx = np.zeros(2)
    dy = np.zeros(2)
    x = px.copy()
    y = py.copy()
    t = 0.0
    for _ in range(int(tmax / dt)):
        tgt = 0 if alive[0] else 1
        if not alive[tgt]:
            return -1, dtm, dx, dy
        g = _wrap(math.atan2(y[tgt], x[tgt]) - phi)
        if abs(abs(g) - math.pi) < tie_tol:
            if tie_dir != 0:
                s = float(tie_dir)
            elif s == 0.0:
                s = 1.0
        elif g > 0.0:
            s = 1.0
        elif g < 0.0:
            s = -1.0

        for i in range(2):
            if not alive[i]:
                continue
            kd = kind[i] if leg[i] == 0 else kind2[i]
            pr = par[i] if leg[i] == 0 else par2[i]
            r = math.hypot(x[i], y[i])
            th = math.atan2(y[i], x[i])
            step = dt
            if kd == 0:
                ux = -x[i] / r
                uy = -y[i] / r
            elif kd == 1:
                ux = math.cos(pr[0])
                uy = math.sin(pr[0])
            else:
                if kd == 2:
                    qx = pr[0]
                    qy = pr[1]
                else:
                    sd = s if s != 0.0 else 1.0
                    b = math.acos(min(1.0, 1.0 / r))
                    qx = math.cos(th + sd * b)
                    qy = math.sin(th + sd * b)
                ddx = qx - x[i]
                ddy = qy - y[i]
                dd = math.hypot(ddx, ddy)
                if dd < 1e-15:
                    ux = 0.0
                    uy = 0.0
                else:
                    ux = ddx / dd
                    uy = ddy / dd
                if dd <= dt:
                    step = dd
                    if leg[i] == 0 and switch[i] == 1:
                        leg[i] = 1
            x[i] += step * ux
            y[i] += step * uy
            if math.hypot(x[i], y[i]) <= 1.0 + 1e-9:
                return i, dtm, dx, dy
        t += dt

        g = _wrap(math.atan2(y[tgt], x[tgt]) - phi)
        mv = min(dt, abs(g))
        for i in range(2):
            if not alive[i]:
                continue
            rel = _wrap(s * (math.atan2(y[i], x[i]) - phi))
            if rel >= -1e-12 and rel <= mv + 1e-12:
                alive[i] = False
                dtm[i] = t
                dx[i] = x[i]
                dy[i] = y[i]
                for j in range(2):
                    if alive[j] and leg[j] == 0 and switch[j] == 2:
                        leg[j] = 1
        phi += s * mv
    return -2, dtm, dx, dy


# --------------------------------------------------------------------------
# analytic pieces
# --------------------------------------------------------------------------

def _unit(a: float) -> np.ndarray:
    return np.array([math.cos(a), math.sin(a)])


def _first_root(f, lo: float, hi: float, samples: int = 4001) -> float:
    """First sign change of ``f`` from negative to non-negative on [lo, hi]."""
    xs = np.linspace(lo, hi, samples)
    vals = np.array([f(x) for x in xs])
    idx = np.flatnonzero((vals[:-1] < 0.0) & (vals[1:] >= 0.0))
    if len(idx) == 0:
        raise NumericalFailure("no root in bracket")
    i = int(idx[0])
    if vals[i + 1] == 0.0:
        return float(xs[i + 1])
    return float(brentq(f, xs[i], xs[i + 1], xtol=1e-14))


def stay_alive_beta(alpha1: float, r_over_v: float, form: StayAliveForm = StayAliveForm.TANGENCY) -> float:
    """Bearing at which drone 1 dies when it flies to stay alive as long as possible.

    Drone 1 can dodge the firing line until the disc it can reach lies wholly
    behind the line. With ``TANGENCY`` (default) that is the first beta > alpha1
    with ``r sin(beta - alpha1) = beta``; the drone dies at the foot of the
    perpendicular from its start to the line at bearing beta. ``OFFSET_RADIUS``
    solves ``alpha1 = beta - arcsin(1 / (rho / beta + 1))`` with
    ``rho = r_over_v`` taken as given; the two agree when rho = r - beta.
    """
    if not r_over_v > 1.0:
        raise ValueError("r_over_v must exceed 1")
    if alpha1 < 0.0:
        raise ValueError("alpha1 must be non-negative")
    if form is StayAliveForm.TANGENCY:
        r = r_over_v

        def f(b):
            return r * math.sin(b - alpha1) - b

        if alpha1 == 0.0:
            return 0.0
        return _first_root(f, alpha1, alpha1 + math.pi / 2)

    rho = r_over_v

    def g(b):
        return b - math.asin(1.0 / (rho / b + 1.0)) - alpha1

    lo = max(alpha1, 1e-15)
    return _first_root(g, lo, alpha1 + math.pi / 2)


def radial_r_max_closed_form(alpha1: float) -> float:
    a = abs(alpha1)
    return 1.0 + math.pi + a if a < math.pi / 2 else 1.0 + TWO_PI - a


def tangent_r_max_estimate(alpha1: float) -> float:
    a = abs(alpha1)
    budget = math.pi + a if a <= math.pi / 2 else TWO_PI - a
    return brentq(lambda r: math.sqrt(r * r - 1.0) - budget - math.acos(1.0 / r), 1.0 + 1e-12, 50.0, xtol=1e-13)


def hybrid_r_max_estimate(alpha1: float) -> float:
    """Radius at which drone 2, released at pi + beta, sits exactly on the tangent boundary."""
    return brentq(lambda r: r - stay_alive_beta(alpha1, r) - R_BEHIND, R_BEHIND + alpha1 + 1e-6, 12.0, xtol=1e-12)


def _hybrid_limit() -> float:
    # largest alpha1 with pi + beta not past 2 pi - alpha1 on the hybrid boundary
    def gap(a):
        r = R_BEHIND + math.pi - a
        return r * math.sin(math.pi - 2.0 * a) - (math.pi - a)

    return brentq(gap, 1.0, 1.55, xtol=1e-13)


#: largest alpha1 for which the hybrid strategy is self-consistent (~1.434)
HYBRID_LIMIT = _hybrid_limit()


def heading_death_time(alpha1: float, r: float, heading: float) -> Optional[float]:
    """Time at which a CCW-sweeping turret lines up with drone 1 on a fixed heading.

    Returns None when drone 1 reaches the safety circle first.
    """
    p0 = r * _unit(alpha1)
    d = _unit(heading)
    ts = np.linspace(0.0, 2.0 * r + TWO_PI, 8001)
    pts = p0[None, :] + ts[:, None] * d[None, :]
    norms = np.hypot(pts[:, 0], pts[:, 1])
    rel = wrap_angle(np.arctan2(pts[:, 1], pts[:, 0]) - ts)
    cross = np.flatnonzero((rel[:-1] > 0) & (rel[1:] <= 0) & (np.abs(rel[1:] - rel[:-1]) < 1.0))
    safe = np.flatnonzero(norms <= 1.0)
    if len(cross) == 0 or (len(safe) and safe[0] <= cross[0]):
        return None
    i = int(cross[0])

    def f(t):
        p = p0 + t * d
        return wrap_angle(math.atan2(p[1], p[0]) - t)

    return float(brentq(f, ts[i], ts[i + 1], xtol=1e-13))


def transition_waypoint(alpha1: float, r: float, t1: float) -> np.ndarray:
    """Point on the ray opposite drone 1's death bearing that drone 2 can reach by ``t1``, closest to the turret."""
    w = _unit(t1 + math.pi)
    cos_d = float(np.dot(_unit(-alpha1), w))
    sin_d2 = max(0.0, 1.0 - cos_d * cos_d)
    disc = t1 * t1 - r * r * sin_d2
    rho = r * cos_d - math.sqrt(disc) if disc >= 0 else r * cos_d
    return max(rho, 1.0) * w


def transition_r_max_estimate(alpha1: float, heading: float) -> float:
    """Largest r for which drone 2 reaches the waypoint inside the tangent region behind the turret."""

    def feasible(r):
        t1 = heading_death_time(alpha1, r, heading)
        if t1 is None:
            return True
        w = _unit(t1 + math.pi)
        cos_d = float(np.dot(_unit(-alpha1), w))
        disc = t1 * t1 - r * r * max(0.0, 1.0 - cos_d * cos_d)
        return disc >= 0 and r * cos_d - math.sqrt(disc) <= R_BEHIND

    lo, hi = 1.0 + 1e-9, 12.0
    if feasible(hi):
        return hi
    while hi - lo > 1e-6:
        m = 0.5 * (lo + hi)
        if feasible(m):
            lo = m
        else:
            hi = m
    return lo


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------

def _drone2_bearing(alpha1: float) -> float:
    return math.pi + alpha1 if alpha1 < math.pi / 2 else -alpha1


def _check_regime(sc: DuoScenario):
    a = sc.alpha1
    if not 0.0 <= a <= math.pi:
        raise UnsupportedRegime(f"alpha1={a} outside [0, pi]")
    if sc.strategy is DuoStrategy.HYBRID and a > HYBRID_LIMIT:
        raise UnsupportedRegime(f"hybrid needs alpha1 <= {HYBRID_LIMIT:.4f}")
    if sc.strategy is DuoStrategy.TRANSITION and not HYBRID_LIMIT < a <= math.pi / 2 + 1e-12:
        raise UnsupportedRegime(f"transition needs alpha1 in ({HYBRID_LIMIT:.4f}, pi/2]")
    if sc.heading is not None and sc.strategy is not DuoStrategy.TRANSITION:
        raise UnsupportedRegime("heading applies to the transition strategy only")


def _legs(sc: DuoScenario):
    a, r = sc.alpha1, sc.r
    kind = np.zeros(2, np.int64)
    kind2 = np.zeros(2, np.int64)
    switch = np.zeros(2, np.int64)
    par = np.zeros((2, 2))
    par2 = np.zeros((2, 2))
    b2 = _drone2_bearing(a)
    beta = None

    if sc.strategy is DuoStrategy.TANGENT:
        kind[:] = LEG_EVADE
    elif sc.strategy is DuoStrategy.HYBRID:
        beta = stay_alive_beta(a, r) if a > 0 else 0.0
        b2 = math.pi + beta
        kind[0] = LEG_GOTO
        par[0] = r * math.cos(beta - a) * _unit(beta)
        kind[1] = LEG_RADIAL
        switch[1] = SWITCH_ON_PARTNER_DEATH
        kind2[1] = LEG_EVADE
    elif sc.strategy is DuoStrategy.TRANSITION:
        h = sc.heading if sc.heading is not None else transition_angle(a)
        b2 = -a
        kind[0] = LEG_HEADING
        par[0, 0] = h
        t1 = heading_death_time(a, r, h)
        if t1 is None:
            kind[1] = LEG_RADIAL
        else:
            kind[1] = LEG_GOTO
            par[1] = transition_waypoint(a, r, t1)
            switch[1] = SWITCH_ON_ARRIVAL
            kind2[1] = LEG_EVADE
    px = np.array([r * math.cos(a), r * math.cos(b2)])
    py = np.array([r * math.sin(a), r * math.sin(b2)])
    return px, py, kind, par, switch, kind2, par2, beta


def evaluate_duo(scenario: DuoScenario) -> DuoOutcome:
    """Simulate both drones and the turret; feasible when either drone reaches safety."""
    _check_regime(scenario)
    px, py, kind, par, switch, kind2, par2, _ = _legs(scenario)
    dt = scenario.dt
    tmax = 2.0 * scenario.r + 3.0 * TWO_PI
    survivor, dtm, dx, dy = _simulate(px, py, kind, par, switch, kind2, par2, dt, tmax, scenario.tie_direction, 2.0 * dt)
    if survivor == -2:
        raise NumericalFailure("duo simulation timed out")
    beta = math.atan2(dy[0], dx[0]) if dtm[0] >= 0 else None
    times = tuple(float(t) if t >= 0 else None for t in dtm)
    return DuoOutcome(
        survivor=int(survivor) + 1 if survivor >= 0 else None,
        beta=beta,
        r_feasible=survivor >= 0,
        death_times=times,
    )


def _estimate(alpha1: float, strategy: DuoStrategy, heading: Optional[float]) -> float:
    if strategy is DuoStrategy.RADIAL:
        return radial_r_max_closed_form(alpha1)
    if strategy is DuoStrategy.TANGENT:
        return tangent_r_max_estimate(alpha1)
    if strategy is DuoStrategy.HYBRID:
        return hybrid_r_max_estimate(alpha1) if alpha1 > 0 else R_BEHIND
    return transition_r_max_estimate(alpha1, heading)


def r_max(alpha1: float, strategy: DuoStrategy, heading: Optional[float] = None,
          tie_direction: int = 0, dt: float = DT, resolution: float = R_RESOLUTION) -> float:
    """Largest feasible common starting radius, by bisection on simulated feasibility.

    Returns NaN when ``strategy`` does not apply at ``alpha1``.
    """
    if strategy is DuoStrategy.TRANSITION and heading is None:
        try:
            heading = transition_angle(alpha1)
        except UnsupportedRegime:
            return math.nan
    base = DuoScenario(alpha1, strategy, 2.0, heading=heading, tie_direction=tie_direction, dt=dt)
    try:
        _check_regime(base)
    except UnsupportedRegime:
        return math.nan

    def feasible(r):
        return evaluate_duo(replace(base, r=r)).r_feasible

    est = _estimate(alpha1, strategy, heading)
    step = 0.02
    lo, hi = max(1.0 + 1e-6, est - step), est + step
    while not feasible(lo):
        hi = lo
        step *= 2
        lo = max(1.0 + 1e-6, lo - step)
        if lo <= 1.0 + 1e-6 and not feasible(lo):
            return 1.0
    step = 0.02
    while feasible(hi):
        lo = hi
        step *= 2
        hi += step
        if hi > 100.0:
            raise NumericalFailure("feasible radius unbounded")
    while hi - lo > resolution:
        m = 0.5 * (lo + hi)
        if feasible(m):
            lo = m
        else:
            hi = m
    return lo


def _golden_max(f, a: float, b: float, tol: float):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


@lru_cache(maxsize=256)
def transition_angle(alpha1: float, grid: int = 33, tol: float = 1e-4) -> float:
    """Drone 1 heading (world angle) maximizing r_max in the transition regime.

    Headings are swept from tangential-CCW (offset 0) to radially inward
    (offset pi/2); the landscape has two humps, so a coarse grid picks the
    bracket and golden-section search refines it.
    """
    if not HYBRID_LIMIT < alpha1 <= math.pi / 2 + 1e-12:
        raise UnsupportedRegime(f"transition needs alpha1 in ({HYBRID_LIMIT:.4f}, pi/2]")

    def score(delta):
        return transition_r_max_estimate(alpha1, wrap_angle(alpha1 + math.pi / 2 + delta))

    deltas = np.linspace(0.0, math.pi / 2, grid)
    vals = [score(x) for x in deltas]
    k = int(np.argmax(vals))
    lo, hi = deltas[max(k - 1, 0)], deltas[min(k + 1, grid - 1)]
    delta, _ = _golden_max(score, lo, hi, tol)
    return float(wrap_angle(alpha1 + math.pi / 2 + delta))


def best_strategy(alpha1: float, dt: float = DT):
    """Strategy with the largest simulated r_max at ``alpha1``; returns (strategy, r_max)."""
    best = (None, -math.inf)
    for st in DuoStrategy:
        r = r_max(alpha1, st, dt=dt)
        if not math.isnan(r) and r > best[1]:
            best = (st, r)
    return best


def r_max_curve(alphas, strategies=tuple(DuoStrategy), threads: int = 1, dt: float = DT):
    """Rows ``(alpha1, strategy, r_max)`` over a grid; NaN where a strategy does not apply."""
    jobs = [(float(a), st) for a in alphas for st in strategies]

    def run(job):
        return job[0], job[1], r_max(job[0], job[1], dt=dt)

    if threads > 1:
        # warm caches serially so worker order cannot change results
        for a, st in jobs:
            if st is DuoStrategy.TRANSITION and HYBRID_LIMIT < a <= math.pi / 2:
                transition_angle(a)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(run, jobs))
    return [run(j) for j in jobs]


def global_maximum(dt: float = DT, span: tuple = (1.40, 1.52), grid: int = 13):
    """Best (alpha1, strategy, r_max) over strategies near the hybrid/transition seam."""
    best = (None, None, -math.inf)
    for a in np.linspace(span[0], span[1], grid):
        st, r = best_strategy(float(a), dt=dt)
        if r > best[2]:
            best = (float(a), st, r)
    a0 = best[0]
    step = (span[1] - span[0]) / (grid - 1)

    def score(a):
        return best_strategy(a, dt=dt)[1]

    a, r = _golden_max(score, a0 - step, a0 + step, 2e-3)
    if r >= best[2]:
        best = (a, best_strategy(a, dt=dt)[0], r)
    return best
