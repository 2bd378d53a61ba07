"""
One drone against a rate-limited planar turret.

All analysis runs in normalized units: the turret turns at 1 rad/s and the
drone speed ``v`` is its physical speed divided by the turret traverse rate,
so a drone of speed ``v`` can out-run the turret anywhere inside the circle of
radius ``v`` (the safety circle). Times returned by the normalized functions
are therefore turret path lengths in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import bisect, brentq

from .errors import AlreadySafe, DegenerateAtOrigin, NumericalFailure, OutOfParameterRange

TWO_PI = 2.0 * math.pi

# bisection tolerance on the death time (rad of turret travel)
ROOT_XTOL = 1e-12


def wrap_angle(a):
    """Wrap an angle (or array of angles) into (-pi, pi]."""
    out = math.pi - np.mod(math.pi - np.asarray(a, dtype=float), TWO_PI)
    return float(out) if out.ndim == 0 else out


def _gamma_max() -> float:
    return brentq(lambda g: math.tan(g) - g, math.pi + 1e-9, 1.5 * math.pi - 1e-9, xtol=1e-15, rtol=4 * np.finfo(float).eps)


#: largest tangent-boundary parameter, the root of tan(g) = g in (pi, 3pi/2)
GAMMA_MAX = _gamma_max()


class Fate(Enum):
    REACHES_SAFETY = "reaches_safety"
    DESTROYED = "destroyed"


class Strategy(Enum):
    RADIAL = "radial"
    TANGENT = "tangent"


@dataclass(frozen=True)
class Turret2D:
    phi: float = 0.0
    omega_max: float = 1.0

    def __post_init__(self):
        if not self.omega_max > 0:
            raise ValueError(f"omega_max must be positive, got {self.omega_max}")
        object.__setattr__(self, "phi", wrap_angle(self.phi))


@dataclass(frozen=True)
class Drone2D:
    p: tuple
    v: float

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"drone speed must be positive, got {self.v}")
        object.__setattr__(self, "p", (float(self.p[0]), float(self.p[1])))


@dataclass(frozen=True)
class PolarRelative:
    r: float
    theta: float
    alpha: float


@dataclass(frozen=True)
class InterceptResult:
    fate: Fate
    t_d: Optional[float] = None
    p_d: Optional[np.ndarray] = None

    @property
    def destroyed(self) -> bool:
        return self.fate is Fate.DESTROYED


def _unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def relative_geometry(turret: Turret2D, drone: Drone2D) -> PolarRelative:
    x, y = drone.p
    r = math.hypot(x, y)
    if r == 0.0:
        raise DegenerateAtOrigin("drone is at the turret; bearing undefined")
    theta = math.atan2(y, x)
    return PolarRelative(r=r, theta=theta, alpha=wrap_angle(theta - turret.phi))


def radial_region_boundary(alpha, v):
    """Largest start radius from which flying straight in reaches the safety circle."""
    return v * (1.0 + np.abs(alpha))


def _sign(alpha: float) -> float:
    # alpha == 0 is broken toward CCW
    return -1.0 if alpha < 0 else 1.0


def tangent_angle(r: float, alpha: float, v: float) -> float:
    """Signed angle from the drone bearing to its tangent point on the safety circle."""
    if r < v:
        raise AlreadySafe(f"drone at radius {r} is inside the safety circle of radius {v}")
    return _sign(alpha) * math.acos(min(1.0, v / r))


def tangent_point(p0, alpha: float, v: float) -> np.ndarray:
    """Point of the safety circle reached by the tangent line from ``p0``.

    The tangent is taken on the side away from the turret (the side of
    ``alpha``), so the drone keeps increasing the angle the turret must cover.
    """
    p0 = np.asarray(p0, dtype=float)
    r = float(np.hypot(*p0))
    beta = tangent_angle(r, alpha, v)
    theta = math.atan2(p0[1], p0[0])
    return v * _unit(theta + beta)


def intercept(p0, alpha: float, v: float, strategy: Strategy = Strategy.TANGENT) -> InterceptResult:
    """Fate of a drone starting at ``p0`` with turret offset ``alpha``.

    The turret sweeps toward the drone at unit rate along the shorter arc.
    Reaching the safety circle exactly when the turret lines up counts as
    survival. Returns the death time (turret radians) and death position when
    the drone is destroyed.
    """
    p0 = np.asarray(p0, dtype=float)
    if not v > 0:
        raise ValueError("v must be positive")
    r = float(np.hypot(*p0))
    a = abs(float(alpha))
    if r <= v:
        if a == 0.0:
            return InterceptResult(Fate.DESTROYED, 0.0, p0.copy())
        return InterceptResult(Fate.REACHES_SAFETY)
    theta = math.atan2(p0[1], p0[0])

    if strategy is Strategy.RADIAL:
        if r <= v * (1.0 + a):
            return InterceptResult(Fate.REACHES_SAFETY)
        return InterceptResult(Fate.DESTROYED, a, (r - v * a) * _unit(theta))

    beta = tangent_angle(r, alpha, v)
    p_perp = v * _unit(theta + beta)
    leg = p0 - p_perp
    length = float(np.hypot(*leg))
    budget = a + abs(beta)
    if length / v <= budget:
        return InterceptResult(Fate.REACHES_SAFETY)

    def gap(t):
        return budget - math.atan((length - t * v) / v) - t

    if gap(0.0) <= 0.0:
        t_d = 0.0
    else:
        try:
            t_d = bisect(gap, 0.0, budget, xtol=ROOT_XTOL, maxiter=200)
        except (RuntimeError, ValueError) as exc:
            raise NumericalFailure(f"death-time bisection failed: {exc}") from exc
    return InterceptResult(Fate.DESTROYED, t_d, p0 - t_d * v * leg / length)


def engage(turret: Turret2D, drone_pos, drone_speed: float, strategy: Strategy = Strategy.TANGENT) -> InterceptResult:
    """Physical-units wrapper around :func:`intercept` (speed in m/s, omega in rad/s)."""
    v = drone_speed / turret.omega_max
    rel = relative_geometry(turret, Drone2D(drone_pos, v))
    res = intercept(drone_pos, rel.alpha, v, strategy)
    if res.destroyed:
        return InterceptResult(res.fate, res.t_d / turret.omega_max, res.p_d)
    return res


def survivable_boundary(gamma: float, phi: float, v: float) -> np.ndarray:
    """Start point whose tangent flight meets the turret exactly at the circle.

    ``gamma`` is both the tangent-point offset from the heading ``phi`` and the
    flight time; ``|gamma| <= GAMMA_MAX`` where the curve reaches the bearing
    directly behind the turret.
    """
    if abs(gamma) > GAMMA_MAX + 1e-12:
        raise OutOfParameterRange(f"|gamma|={abs(gamma)} exceeds gamma_max={GAMMA_MAX}")
    c, s = math.cos(gamma + phi), math.sin(gamma + phi)
    return v * np.array([c + gamma * s, s - gamma * c])


def tangent_region_radius(alpha: float, v: float) -> float:
    """Radius of the tangent-strategy survivable region at turret offset ``alpha``."""
    a = abs(float(alpha))
    if a > math.pi + 1e-12:
        raise OutOfParameterRange("alpha must lie in [-pi, pi]")
    if a == 0.0:
        return float(v)
    # gamma - arctan(gamma) is the offset of p0(gamma); increasing on [0, GAMMA_MAX]
    g = brentq(lambda x: x - math.atan(x) - a, 0.0, GAMMA_MAX + 1e-9, xtol=1e-14)
    return v * math.sqrt(1.0 + g * g)


def boundary_curves(v: float = 1.0, phi: float = 0.0, num: int = 721):
    """Polylines of the radial and tangent region boundaries around a turret.

    Returns ``(radial, tangent)``, each an ``(num, 2)`` array of xy points.
    """
    alphas = np.linspace(-math.pi, math.pi, num)
    rho = radial_region_boundary(alphas, v)
    radial = np.column_stack([rho * np.cos(alphas + phi), rho * np.sin(alphas + phi)])
    gammas = np.linspace(-GAMMA_MAX, GAMMA_MAX, num)
    tangent = np.array([survivable_boundary(g, phi, v) for g in gammas])
    return radial, tangent
