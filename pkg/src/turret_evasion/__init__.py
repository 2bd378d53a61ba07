"""Pursuit-evasion analysis of drone swarms against a rate-limited turret."""

from . import duo2d, geometry2d, placement2d, sim3d, sphere3d, tsp
from .errors import (
    AlreadySafe,
    AttackNeverSucceeds,
    DegenerateAtOrigin,
    InstanceTooLarge,
    InvalidEpsilon,
    NoPreferredDirection,
    NonUnitVector,
    NumericalFailure,
    OutOfParameterRange,
    TurretEvasionError,
    UnsupportedRegime,
)

__version__ = "0.1.0"

__all__ = [
    "duo2d",
    "geometry2d",
    "placement2d",
    "sim3d",
    "sphere3d",
    "tsp",
    "AlreadySafe",
    "AttackNeverSucceeds",
    "DegenerateAtOrigin",
    "InstanceTooLarge",
    "InvalidEpsilon",
    "NoPreferredDirection",
    "NonUnitVector",
    "NumericalFailure",
    "OutOfParameterRange",
    "TurretEvasionError",
    "UnsupportedRegime",
    "__version__",
]
