"""Exception types raised across the package."""


class TurretEvasionError(Exception):
    """Base class for all package errors."""


class DegenerateAtOrigin(TurretEvasionError, ValueError):
    """A drone sits exactly on the turret, so its bearing is undefined."""


class AlreadySafe(TurretEvasionError, ValueError):
    """The drone is already inside the safety circle."""


class NumericalFailure(TurretEvasionError, RuntimeError):
    """A bracketed root search failed to converge or lost its bracket."""


class OutOfParameterRange(TurretEvasionError, ValueError):
    pass


class InvalidEpsilon(TurretEvasionError, ValueError):
    pass


class InstanceTooLarge(TurretEvasionError, ValueError):
    pass


class UnsupportedRegime(TurretEvasionError, ValueError):
    """Strategy requested outside the bearing range where it is defined."""


class NonUnitVector(TurretEvasionError, ValueError):
    pass


class NoPreferredDirection(TurretEvasionError, ValueError):
    pass


class AttackNeverSucceeds(TurretEvasionError, RuntimeError):
    """No starting distance in the searched range lets the drones win."""
