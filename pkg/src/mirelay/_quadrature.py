"""Compiled kernels for the Neumann double line integral.

The mutual inductance of two filamentary circular loops is evaluated with the
periodic trapezoidal rule applied to both circle parameterizations.  The
integrand is smooth and periodic for non-touching loops, so the rule converges
spectrally; accuracy is certified by doubling the order until the result is
stable.

Everything here is numba-compiled and operates on plain float64 scalars and
arrays.  The public geometry module wraps these kernels with validation and
unit handling; tests check them against an independent pure-numpy oracle.
"""
from __future__ import annotations

import numpy as np
from numba import njit
from scipy.constants import mu_0

MU0_OVER_4PI = float(mu_0) / (4.0 * np.pi)

# Largest discretization order per loop.  Orders are powers of two so each one
# can index the shared unit-circle tables below by stride.
MAX_ORDER = 8192
# The batch table builder caps lower to keep its scratch buffers small; pairs
# that fail to converge by then are retried through the single-pair path.
MAX_TABLE_ORDER = 1024

_THETA = 2.0 * np.pi * np.arange(MAX_ORDER) / MAX_ORDER
COS_TABLE = np.cos(_THETA)
SIN_TABLE = np.sin(_THETA)
del _THETA


@njit(cache=True)
def _loop_frame(ax, ay, az):
    """Right-handed in-plane basis (u, v) for a loop with axis (ax, ay, az).

    u ⊥ axis, v = axis × u, so (u, v, axis) is right-handed and the loop
    parameterization runs counterclockwise around the axis.  The helper vector
    is chosen deterministically so equal axes always give equal frames.
    """
    if -0.9 < ax < 0.9:
        hx, hy, hz = 1.0, 0.0, 0.0
    else:
        hx, hy, hz = 0.0, 1.0, 0.0
    ux = ay * hz - az * hy
    uy = az * hx - ax * hz
    uz = ax * hy - ay * hx
    un = np.sqrt(ux * ux + uy * uy + uz * uz)
    ux /= un
    uy /= un
    uz /= un
    vx = ay * uz - az * uy
    vy = az * ux - ax * uz
    vz = ax * uy - ay * ux
    return ux, uy, uz, vx, vy, vz


@njit(cache=True, fastmath=True)
def _fill_loop(cx, cy, cz, ax, ay, az, r, order, pts, tans):
    """Fill pts[:order], tans[:order] with loop points and unit tangents."""
    ux, uy, uz, vx, vy, vz = _loop_frame(ax, ay, az)
    stride = MAX_ORDER // order
    for k in range(order):
        c = COS_TABLE[k * stride]
        s = SIN_TABLE[k * stride]
        pts[k, 0] = cx + r * (c * ux + s * vx)
        pts[k, 1] = cy + r * (c * uy + s * vy)
        pts[k, 2] = cz + r * (c * uz + s * vz)
        tans[k, 0] = -s * ux + c * vx
        tans[k, 1] = -s * uy + c * vy
        tans[k, 2] = -s * uz + c * vz


@njit(cache=True, fastmath=True)
def _pair_sum(p1, t1, p2, t2, order):
    """Double sum of (t_i · t_j) / |p_i − p_j| over the two point sets."""
    acc = 0.0
    for i in range(order):
        x1 = p1[i, 0]
        y1 = p1[i, 1]
        z1 = p1[i, 2]
        tx1 = t1[i, 0]
        ty1 = t1[i, 1]
        tz1 = t1[i, 2]
        for j in range(order):
            dx = x1 - p2[j, 0]
            dy = y1 - p2[j, 1]
            dz = z1 - p2[j, 2]
            dot = tx1 * t2[j, 0] + ty1 * t2[j, 1] + tz1 * t2[j, 2]
            acc += dot / np.sqrt(dx * dx + dy * dy + dz * dz)
    return acc


@njit(cache=True, fastmath=True)
def _adaptive_pair(c1x, c1y, c1z, a1x, a1y, a1z, r1,
                   c2x, c2y, c2z, a2x, a2y, a2z, r2,
                   start_order, rtol, abs_floor, max_order,
                   p1, t1, p2, t2):
    """Adaptive single-pair quadrature (turns factor NOT applied).

    Returns (m, converged, order_used).  The loop evaluates the integral at
    the starting order, then keeps doubling until the change drops below
    max(rtol·|m|, abs_floor) or max_order is exceeded.
    """
    order = start_order
    _fill_loop(c1x, c1y, c1z, a1x, a1y, a1z, r1, order, p1, t1)
    _fill_loop(c2x, c2y, c2z, a2x, a2y, a2z, r2, order, p2, t2)
    scale = MU0_OVER_4PI * r1 * r2 * (2.0 * np.pi) ** 2
    m_prev = scale * _pair_sum(p1, t1, p2, t2, order) / (order * order)
    while True:
        next_order = 2 * order
        if next_order > max_order:
            return m_prev, False, order
        _fill_loop(c1x, c1y, c1z, a1x, a1y, a1z, r1, next_order, p1, t1)
        _fill_loop(c2x, c2y, c2z, a2x, a2y, a2z, r2, next_order, p2, t2)
        m_new = scale * _pair_sum(p1, t1, p2, t2, next_order) / (next_order * next_order)
        if np.abs(m_new - m_prev) <= max(rtol * np.abs(m_new), abs_floor):
            return m_new, True, next_order
        m_prev = m_new
        order = next_order


@njit(cache=True)
def _start_order(separation_ratio):
    """Starting order from the separation/radius-sum ratio.

    Thresholds were calibrated against worst-case random orientations so that
    the first doubling already meets a 1e-6 relative criterion for almost all
    pairs; the doubling check still guards every single one.
    """
    if separation_ratio >= 8.0:
        return 8
    if separation_ratio >= 3.0:
        return 16
    if separation_ratio >= 1.5:
        return 32
    return 64


@njit(cache=True, fastmath=True)
def pair_m(c1, a1, r1, c2, a2, r2, start_order, rtol, abs_floor, max_order):
    """Adaptive mutual inductance of two unit-turn loops (array-argument API)."""
    p1 = np.empty((max_order, 3))
    t1 = np.empty((max_order, 3))
    p2 = np.empty((max_order, 3))
    t2 = np.empty((max_order, 3))
    return _adaptive_pair(c1[0], c1[1], c1[2], a1[0], a1[1], a1[2], r1,
                          c2[0], c2[1], c2[2], a2[0], a2[1], a2[2], r2,
                          start_order, rtol, abs_floor, max_order,
                          p1, t1, p2, t2)


@njit(cache=True, fastmath=True)
def build_table(positions, orientations, radii, turns, rtol, abs_floor):
    """Symmetric mutual-inductance table over n coils.

    positions, orientations: (n, 3); radii, turns: (n,).  Returns (table,
    orders) where orders[i, j] holds the final quadrature order, negated when
    the pair failed to converge by MAX_TABLE_ORDER (callers retry those pairs
    through pair_m with a larger ceiling).
    """
    n = positions.shape[0]
    table = np.zeros((n, n))
    orders = np.zeros((n, n), np.int64)
    p1 = np.empty((MAX_TABLE_ORDER, 3))
    t1 = np.empty((MAX_TABLE_ORDER, 3))
    p2 = np.empty((MAX_TABLE_ORDER, 3))
    t2 = np.empty((MAX_TABLE_ORDER, 3))
    for i in range(n):
        for j in range(i + 1, n):
            dx = positions[i, 0] - positions[j, 0]
            dy = positions[i, 1] - positions[j, 1]
            dz = positions[i, 2] - positions[j, 2]
            dist = np.sqrt(dx * dx + dy * dy + dz * dz)
            start = _start_order(dist / (radii[i] + radii[j]))
            m, ok, used = _adaptive_pair(
                positions[i, 0], positions[i, 1], positions[i, 2],
                orientations[i, 0], orientations[i, 1], orientations[i, 2], radii[i],
                positions[j, 0], positions[j, 1], positions[j, 2],
                orientations[j, 0], orientations[j, 1], orientations[j, 2], radii[j],
                start, rtol, abs_floor, MAX_TABLE_ORDER, p1, t1, p2, t2)
            m *= turns[i] * turns[j]
            table[i, j] = m
            table[j, i] = m
            orders[i, j] = used if ok else -used
            orders[j, i] = orders[i, j]
    return table, orders
