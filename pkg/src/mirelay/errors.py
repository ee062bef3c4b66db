"""Exception hierarchy for mirelay.

Every error raised on purpose by this package derives from MirelayError so
callers (and the CLI) can map failure classes to exit codes without
string-matching messages.
"""
from __future__ import annotations


class MirelayError(Exception):
    """Base class for all mirelay errors."""


class ConfigError(MirelayError):
    """Invalid configuration or input file (bad value, unknown key, parse failure)."""


class GeometryError(MirelayError):
    """Physically invalid coil arrangement (intersecting coils, impossible sampling)."""


class QuadratureError(MirelayError):
    """Mutual-inductance quadrature failed to converge."""


class NumericalError(MirelayError):
    """Numerical-conditioning failure (singular or near-singular relay system)."""


class PassivityError(MirelayError):
    """A two-port violates passivity beyond floating-point tolerance."""
