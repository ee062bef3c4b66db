"""Coil descriptions, mutual inductance, and random network generation.

Coils are thin-wire circular loops described by a center, an axis, a radius,
and a turn count; a multi-turn coil is modeled as a concentrated filamentary
loop whose mutual inductances scale with the product of the turn counts.
Mutual inductance is computed by adaptive trapezoidal quadrature of the
Neumann double line integral (see _quadrature for the compiled kernels).

Random networks place resonant relay coils uniformly inside a prolate
spheroid whose foci are the Tx and Rx positions, with uniformly random
orientations — the geometry used by the bundled Monte Carlo experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _quadrature as _quad
from .errors import ConfigError, GeometryError, QuadratureError

if TYPE_CHECKING:
    from .circuit import Network

DEFAULT_QUADRATURE_POINTS = 64
QUADRATURE_RTOL = 1e-6
# Below this absolute change (in henries) a doubling step counts as converged
# even if the relative criterion cannot be met; it is ~7 orders of magnitude
# below the weakest coupling of interest and handles symmetric-zero pairs.
QUADRATURE_ABS_FLOOR = 1e-18

# Electrical and geometric parameters of the coil used by the bundled presets:
# flat circular loop, 12 mm radius, 12 turns, L = 3.7 uH, R = 1 ohm.
REFERENCE_RADIUS = 0.012
REFERENCE_TURNS = 12
REFERENCE_SELF_INDUCTANCE = 3.7e-6
REFERENCE_RESISTANCE = 1.0

_X_AXIS = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True, eq=False)
class Coil:
    """One loop antenna: pose plus electrical parameters.

    position is the loop center in meters, orientation the unit loop axis.
    Flipping the orientation flips the sign of every mutual inductance the
    coil takes part in.
    """

    position: np.ndarray
    orientation: np.ndarray
    radius: float
    turns: int
    self_inductance: float
    resistance: float

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        ori = np.asarray(self.orientation, dtype=float).reshape(3)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", ori)
        if abs(np.linalg.norm(ori) - 1.0) > 1e-12:
            raise ConfigError(f"coil orientation must be a unit vector, got norm {np.linalg.norm(ori)!r}")
        if not self.radius > 0:
            raise ConfigError(f"coil radius must be positive, got {self.radius!r}")
        if not (isinstance(self.turns, (int, np.integer)) and self.turns >= 1):
            raise ConfigError(f"coil turns must be a positive integer, got {self.turns!r}")
        if not self.self_inductance > 0:
            raise ConfigError(f"coil self_inductance must be positive, got {self.self_inductance!r}")
        if not self.resistance > 0:
            raise ConfigError(f"coil resistance must be positive, got {self.resistance!r}")


def reference_coil(position=(0.0, 0.0, 0.0), orientation=(1.0, 0.0, 0.0), **overrides) -> Coil:
    """The standard coil of the bundled experiments at the given pose."""
    kwargs = dict(radius=REFERENCE_RADIUS, turns=REFERENCE_TURNS,
                  self_inductance=REFERENCE_SELF_INDUCTANCE,
                  resistance=REFERENCE_RESISTANCE)
    kwargs.update(overrides)
    return Coil(position=np.asarray(position, float),
                orientation=np.asarray(orientation, float), **kwargs)


def _next_power_of_two(n: int) -> int:
    p = 8
    while p < n:
        p *= 2
    return p


def _circle_points(coil: Coil, order: int) -> np.ndarray:
    """Points on the loop (numpy reference path, used for validation only)."""
    ax = coil.orientation
    h = np.array([1.0, 0.0, 0.0]) if abs(ax[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(ax, h)
    u /= np.linalg.norm(u)
    v = np.cross(ax, u)
    th = 2.0 * np.pi * np.arange(order) / order
    return coil.position + coil.radius * (np.outer(np.cos(th), u) + np.outer(np.sin(th), v))


def _check_not_intersecting(a: Coil, b: Coil) -> None:
    d = float(np.linalg.norm(a.position - b.position))
    if d < 1e-12:
        raise GeometryError("coils are coincident (center distance ~ 0)")
    if d > a.radius + b.radius:
        return
    sep = b.position - a.position
    off_a = abs(float(np.dot(sep, a.orientation)))
    off_b = abs(float(np.dot(sep, b.orientation)))
    if off_a < 1e-12 and off_b < 1e-12:
        raise GeometryError(
            f"coils at center distance {d:.6g} m overlap in a common plane "
            f"(distance <= radius sum {a.radius + b.radius:.6g} m)")
    pa = _circle_points(a, 256)
    pb = _circle_points(b, 256)
    gap = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)).min()
    if gap < 1e-9:
        raise GeometryError(f"coil wires touch (minimum wire separation {gap:.3g} m)")


def mutual_inductance(a: Coil, b: Coil, quadrature_points: int = DEFAULT_QUADRATURE_POINTS) -> float:
    """Mutual inductance of two coils in henries.

    Evaluates the Neumann double line integral over the two filamentary
    circles with the periodic trapezoidal rule, scaled by turns_a * turns_b.
    quadrature_points sets the starting order per loop (rounded up to the
    next power of two); the order is doubled until the result changes by
    less than 1e-6 relative (with a 1e-18 H absolute floor).  The sign
    follows the orientation vectors.

    Raises GeometryError for coincident/overlapping coils and
    QuadratureError when the doubling never stabilizes.
    """
    if quadrature_points < 4:
        raise ConfigError(f"quadrature_points must be >= 4, got {quadrature_points}")
    start = _next_power_of_two(int(quadrature_points))
    if start > _quad.MAX_ORDER:
        raise ConfigError(f"quadrature_points must be <= {_quad.MAX_ORDER}, got {quadrature_points}")
    _check_not_intersecting(a, b)
    m, ok, order = _quad.pair_m(a.position, a.orientation, a.radius,
                                b.position, b.orientation, b.radius,
                                start, QUADRATURE_RTOL, QUADRATURE_ABS_FLOOR,
                                _quad.MAX_ORDER)
    if not ok:
        raise QuadratureError(
            f"mutual-inductance quadrature did not converge by order {order} "
            f"(coil centers {np.linalg.norm(a.position - b.position):.6g} m apart)")
    return float(m) * a.turns * b.turns


def coupling_coefficient(a: Coil, b: Coil) -> float:
    """Coupling coefficient k = M / sqrt(L_a L_b), bounded by 1 in magnitude.

    Values within 1e-9 of the bound are clipped (quadrature round-off);
    larger violations mean the stated self-inductances are inconsistent with
    the loop geometry and raise ConfigError.
    """
    m = mutual_inductance(a, b)
    k = m / math.sqrt(a.self_inductance * b.self_inductance)
    if abs(k) > 1.0 + 1e-9:
        raise ConfigError(
            f"|k| = {abs(k):.6g} > 1: mutual inductance inconsistent with the "
            "stated self-inductances")
    return float(np.clip(k, -1.0, 1.0))


def mutual_inductance_table(coils: Sequence[Coil],
                            rtol: float = QUADRATURE_RTOL,
                            abs_floor: float = QUADRATURE_ABS_FLOOR) -> np.ndarray:
    """Symmetric table of pairwise mutual inductances (zeros on the diagonal).

    Batch path used to build network caches: starting orders are chosen per
    pair from the separation/radius ratio and every pair is still certified
    by doubling.  Pairs that fail to converge inside the batch ceiling are
    retried at higher order; a pair that never converges raises
    QuadratureError.
    """
    n = len(coils)
    pos = np.array([c.position for c in coils], dtype=float).reshape(n, 3)
    ori = np.array([c.orientation for c in coils], dtype=float).reshape(n, 3)
    rad = np.array([c.radius for c in coils], dtype=float)
    trn = np.array([float(c.turns) for c in coils])
    if n >= 2:
        min_d = np.inf
        for i in range(n):
            d = np.linalg.norm(pos[i + 1:] - pos[i], axis=1)
            if d.size:
                min_d = min(min_d, d.min())
        if min_d < 1e-12:
            raise GeometryError("two coils share the same center position")
    table, orders = _quad.build_table(pos, ori, rad, trn, rtol, abs_floor)
    bad = np.argwhere(orders < 0)
    for i, j in bad[bad[:, 0] < bad[:, 1]]:
        m, ok, order = _quad.pair_m(pos[i], ori[i], rad[i], pos[j], ori[j], rad[j],
                                    2 * _quad.MAX_TABLE_ORDER, rtol, abs_floor,
                                    _quad.MAX_ORDER)
        if not ok:
            raise QuadratureError(
                f"quadrature for coil pair ({i}, {j}) did not converge by order {order}")
        table[i, j] = table[j, i] = m * trn[i] * trn[j]
    return table


# ---------------------------------------------------------------------------
# Random network generation


@dataclass(frozen=True)
class SamplingConfig:
    """Parameters of the random relay cloud.

    Relays are confined to the prolate spheroid with foci at the Tx and Rx
    positions and minor semi-diameter equal to the Tx-Rx separation; the
    relay count is Poisson with mean relay_density (per cubic decimeter)
    times the spheroid volume, unless fixed_count pins it.  Relays closer
    than min_coil_separation (default: one coil diameter) to any other coil
    are resampled.
    """

    tx_rx_distance: float
    relay_density: float
    rng_seed: int
    min_coil_separation: float | None = None
    fixed_count: int | None = None

    def __post_init__(self):
        if not self.tx_rx_distance > 0:
            raise ConfigError(f"tx_rx_distance must be positive, got {self.tx_rx_distance!r}")
        if self.relay_density < 0:
            raise ConfigError(f"relay_density must be >= 0, got {self.relay_density!r}")
        if self.min_coil_separation is not None and self.min_coil_separation < 0:
            raise ConfigError("min_coil_separation must be >= 0")
        if self.fixed_count is not None and self.fixed_count < 0:
            raise ConfigError("fixed_count must be >= 0")


def spheroid_semi_axes(distance: float) -> tuple[float, float]:
    """(major, minor) semi-axes of the confinement spheroid for a separation."""
    c = distance / 2.0
    b = distance
    return math.hypot(b, c), b


def spheroid_volume(distance: float) -> float:
    """Volume of the confinement spheroid in cubic meters."""
    a, b = spheroid_semi_axes(distance)
    return 4.0 / 3.0 * math.pi * a * b * b


def _unit_vector(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


def _ball_point(rng: np.random.Generator) -> np.ndarray:
    direction = _unit_vector(rng)
    return direction * rng.random() ** (1.0 / 3.0)


def sample_network(cfg: SamplingConfig, tx: Coil, rx: Coil, *,
                   relay: Coil | None = None,
                   design_frequency: float = 13.56e6,
                   mtr_override: float | None = None) -> "Network":
    """Draw one random relay network between the given Tx and Rx coils.

    Relay poses are sampled uniformly (positions inside the spheroid,
    orientations on the sphere); every relay gets the electrical parameters
    of `relay` (default: the reference coil) and a capacitor resonating it at
    design_frequency.  Deterministic for a given cfg.rng_seed.
    """
    from .circuit import LoadState, Network

    if relay is None:
        relay = reference_coil()
    sep = rx.position - tx.position
    distance = float(np.linalg.norm(sep))
    if abs(distance - cfg.tx_rx_distance) > 1e-9 * max(1.0, cfg.tx_rx_distance):
        raise ConfigError(
            f"tx/rx positions are {distance:.9g} m apart but cfg.tx_rx_distance "
            f"is {cfg.tx_rx_distance:.9g} m")
    rng = np.random.default_rng(cfg.rng_seed)
    if cfg.fixed_count is not None:
        count = cfg.fixed_count
    else:
        mean = cfg.relay_density * spheroid_volume(distance) * 1e3  # density is per dm^3
        count = int(rng.poisson(mean))
    min_sep = cfg.min_coil_separation
    if min_sep is None:
        min_sep = 2.0 * relay.radius

    a_major, b_minor = spheroid_semi_axes(distance)
    center = (tx.position + rx.position) / 2.0
    e1 = sep / distance
    helper = np.array([0.0, 1.0, 0.0]) if abs(e1[0]) >= 0.9 else np.array([1.0, 0.0, 0.0])
    e2 = np.cross(e1, helper)
    e2 /= np.linalg.norm(e2)
    e3 = np.cross(e1, e2)

    taken = [tx.position, rx.position]
    load = LoadState.resonant_for(relay.self_inductance, design_frequency)
    relays = []
    for _ in range(count):
        for _attempt in range(10_000):
            ball = _ball_point(rng)
            point = center + a_major * ball[0] * e1 + b_minor * ball[1] * e2 + b_minor * ball[2] * e3
            if all(np.linalg.norm(point - q) >= min_sep for q in taken):
                break
        else:
            raise GeometryError(
                f"could not place relay {len(relays)} with min separation {min_sep} m "
                f"after 10000 attempts (density too high for the spheroid?)")
        orientation = _unit_vector(rng)
        taken.append(point)
        relays.append((Coil(position=point, orientation=orientation,
                            radius=relay.radius, turns=relay.turns,
                            self_inductance=relay.self_inductance,
                            resistance=relay.resistance), load))
    return Network.build(tx, rx, tuple(relays), mtr_override=mtr_override,
                         design_frequency=design_frequency)


# ---------------------------------------------------------------------------
# Canonical Tx-Rx arrangements

_tilt_cache: dict[tuple[float, float], float] = {}


def _misalignment_tilt(distance: float, target_ratio: float) -> float:
    """Rx tilt angle (rad, in the x-y plane) with M_tr / M_coaxial = target_ratio.

    The ratio decreases monotonically from 1 (coaxial) to 0 (orthogonal Rx on
    the shared axis), so the equation has a unique root in [0, pi/2].
    """
    key = (distance, target_ratio)
    if key not in _tilt_cache:
        tx = reference_coil()
        rx = reference_coil(position=(distance, 0.0, 0.0))
        m_coax = mutual_inductance(tx, rx)

        def objective(angle: float) -> float:
            tilted = reference_coil(position=(distance, 0.0, 0.0),
                                    orientation=(math.cos(angle), math.sin(angle), 0.0))
            return mutual_inductance(tx, tilted) / m_coax - target_ratio

        _tilt_cache[key] = float(brentq(objective, 0.0, math.pi / 2.0, xtol=1e-12))
    return _tilt_cache[key]


def canonical_pair(distance: float, alignment: str = "coaxial",
                   attenuation_db: float = 23.7) -> tuple[Coil, Coil, float | None]:
    """Standard Tx-Rx arrangement: Tx at the origin, Rx on the +x axis.

    alignment "coaxial": both coils share the x axis; the returned override
    is None and M_tr is whatever mutual_inductance gives directly.

    alignment "misaligned": the Rx coil is tilted in the x-y plane by the
    angle at which the geometric M_tr equals 10^(-attenuation_db/20) times
    the coaxial value, so relay-to-endpoint couplings see the weakened
    arrangement too; the exact attenuated M_tr is also returned as an
    override for the cache.  attenuation_db = 23.7 is the standard
    tenth-percentile case; attenuation_db = 0 reduces to the coaxial result.
    """
    if not distance > 0:
        raise ConfigError(f"distance must be positive, got {distance!r}")
    if alignment not in ("coaxial", "misaligned"):
        raise ConfigError(f"alignment must be 'coaxial' or 'misaligned', got {alignment!r}")
    tx = reference_coil()
    if alignment == "coaxial" or attenuation_db == 0:
        rx = reference_coil(position=(distance, 0.0, 0.0))
        return tx, rx, None
    if attenuation_db < 0:
        raise ConfigError(f"attenuation_db must be >= 0, got {attenuation_db!r}")
    ratio = 10.0 ** (-attenuation_db / 20.0)
    tilt = _misalignment_tilt(distance, ratio)
    rx = reference_coil(position=(distance, 0.0, 0.0),
                        orientation=(math.cos(tilt), math.sin(tilt), 0.0))
    m_coax = mutual_inductance(tx, reference_coil(position=(distance, 0.0, 0.0)))
    return tx, rx, ratio * m_coax
