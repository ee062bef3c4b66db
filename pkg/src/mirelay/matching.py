"""Power gain and channel coefficient under simultaneous conjugate matching.

Every quantity is derived from the two real ratios

    rho = Re z21 / sqrt(Re z11 * Re z22),   chi = Im z21 / sqrt(Re z11 * Re z22)

of a reciprocal passive two-port.  The matched power gain is

    eta = (rho^2 + chi^2) / (sqrt(1 - rho^2) + sqrt(1 + chi^2))^2

and the complex channel coefficient h (equal to S21 of the matched scattering
matrix) satisfies |h|^2 = eta.  All gain computations route through (rho, chi)
so the direct-link special case and the general formula share one code path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import TwoPortZ
from .errors import ConfigError, NumericalError, PassivityError

# |rho| may exceed 1 by floating-point round-off on physically passive
# systems; violations inside this tolerance are clipped, larger ones raise.
RHO_CLIP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GainReport:
    """Matched-gain summary of one two-port at one frequency."""

    rho: float
    chi: float
    eta: float
    h: complex
    z_in: complex
    z_out: complex
    frequency: float


def rho_chi_values(z11: complex, z21: complex, z22: complex) -> tuple[float, float]:
    """(rho, chi) from raw impedance entries (hot path, no dataclass)."""
    r1 = z11.real
    r2 = z22.real
    if not (r1 > 0 and r2 > 0):
        raise PassivityError(
            f"port resistances must be positive (Re z11 = {r1:.6g}, Re z22 = {r2:.6g})")
    denom = math.sqrt(r1 * r2)
    rho = z21.real / denom
    chi = z21.imag / denom
    if abs(rho) > 1.0:
        if abs(rho) > 1.0 + RHO_CLIP_TOLERANCE:
            raise PassivityError(f"|rho| = {abs(rho):.12g} > 1: two-port is not passive")
        rho = math.copysign(1.0, rho)
    return rho, chi


def rho_chi(z: TwoPortZ) -> tuple[float, float]:
    """The two real transimpedance ratios of a passive reciprocal two-port."""
    return rho_chi_values(z.z11, z.z21, z.z22)


def power_gain(rho: float, chi: float) -> float:
    """Matched channel power gain eta from (rho, chi); eta lies in [0, 1]."""
    if abs(rho) > 1.0:
        raise ConfigError(f"|rho| must be <= 1, got {rho!r}")
    return (rho * rho + chi * chi) / (math.sqrt(1.0 - rho * rho) + math.sqrt(1.0 + chi * chi)) ** 2


def power_gain_direct(k: float, q_t: float, q_r: float) -> float:
    """Matched gain of a bare coupled-coil link from k and the coil Q factors.

    The direct link has a purely imaginary transimpedance, so rho = 0 and
    chi = k * sqrt(Q_t * Q_r); this is literally power_gain(0, chi).
    """
    if abs(k) > 1.0:
        raise ConfigError(f"|k| must be <= 1, got {k!r}")
    if not (q_t > 0 and q_r > 0):
        raise ConfigError(f"Q factors must be positive, got {q_t!r}, {q_r!r}")
    return power_gain(0.0, k * math.sqrt(q_t * q_r))


def matched_terminations(z: TwoPortZ) -> tuple[complex, complex]:
    """Simultaneous conjugate-matching port impedances (z_in, z_out).

    Both returned values satisfy the matching fixed-point equations
    z_in = z11 - z21^2 / (z22 + conj(z_out)) and its mirror.  Of the two
    closed-form solution branches only the one with nonnegative real parts is
    physical and returned; at |rho| = 1 the real parts reach the lossless
    limit Re z_in = 0 and the value is still returned.
    """
    rho, chi = rho_chi(z)
    gamma_r = math.sqrt(1.0 - rho * rho)
    gamma_i = math.sqrt(1.0 + chi * chi)
    scale = gamma_r * gamma_i - 1j * rho * chi
    z_in = scale * z.z11.real + 1j * z.z11.imag
    z_out = scale * z.z22.real + 1j * z.z22.imag
    return z_in, z_out


def channel_coefficient(z: TwoPortZ) -> complex:
    """Complex channel coefficient h of the matched two-port; |h|^2 = eta."""
    rho, chi = rho_chi(z)
    gamma = math.sqrt(1.0 - rho * rho) * math.sqrt(1.0 + chi * chi)
    return (rho + 1j * chi) / (1.0 + gamma + 1j * rho * chi)


def scattering_s21(z: TwoPortZ) -> complex:
    """S21 of the matched scattering matrix; identical to channel_coefficient.

    Builds A = [[1, rho + j chi], [rho + j chi, 1]] and the reference factor
    gamma = sqrt(1 - rho^2) sqrt(1 + chi^2) + j rho chi, then evaluates
    S = (A - conj(gamma) I)(A + gamma I)^{-1} and reads the (2, 1) entry.
    """
    rho, chi = rho_chi(z)
    zeta = rho + 1j * chi
    gamma = math.sqrt(1.0 - rho * rho) * math.sqrt(1.0 + chi * chi) + 1j * rho * chi
    a = np.array([[1.0, zeta], [zeta, 1.0]], dtype=complex)
    try:
        s = (a - np.conj(gamma) * np.eye(2)) @ np.linalg.inv(a + gamma * np.eye(2))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"scattering conversion is singular (rho={rho}, chi={chi})") from exc
    return s[1, 0]


def gain_report(z: TwoPortZ) -> GainReport:
    """Full matched-gain summary (rho, chi, eta, h, matched impedances)."""
    rho, chi = rho_chi(z)
    z_in, z_out = matched_terminations(z)
    return GainReport(rho=rho, chi=chi, eta=power_gain(rho, chi),
                      h=channel_coefficient(z), z_in=z_in, z_out=z_out,
                      frequency=z.frequency)
