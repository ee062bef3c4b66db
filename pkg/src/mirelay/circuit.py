"""Impedance description of the relayed channel and its two-port reduction.

A network of Tx, Rx, and N relay coils forms a (2+N)-port with impedance
blocks built from coil parameters and mutual inductances.  Terminating the
relay ports with their loads and eliminating them reduces the system to an
effective 2x2 impedance matrix

    Z = Z_tr + w^2 * M * Z_Rs^{-1} * M^T

where Z_Rs collects the relay loop impedances (loads included) and M the
relay-to-endpoint mutual inductances.  Open-circuited relays carry no current
and are excluded from the matrices entirely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.linalg import lapack

from . import geometry
from .errors import ConfigError, NumericalError, PassivityError
from .geometry import Coil

# Condition-number ceiling for the relay system; estimates beyond this raise
# NumericalError instead of returning garbage.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class LoadState:
    """Termination of one relay port.

    kind "resonant" stores the series capacitance (farads), "open" breaks the
    loop (the relay is then electromagnetically inert), and "custom" is an
    explicit passive impedance (Re >= 0).
    """

    kind: str
    capacitance: float | None = None
    impedance: complex | None = None

    def __post_init__(self):
        if self.kind not in ("resonant", "open", "custom"):
            raise ConfigError(f"unknown load kind {self.kind!r}")
        if self.kind == "resonant":
            if self.capacitance is None or not self.capacitance > 0:
                raise ConfigError(f"resonant load needs a positive capacitance, got {self.capacitance!r}")
        if self.kind == "custom":
            if self.impedance is None:
                raise ConfigError("custom load needs an impedance")
            if complex(self.impedance).real < 0:
                raise ConfigError(
                    f"custom load impedance must be passive (Re >= 0), got {self.impedance!r}")

    @staticmethod
    def resonant(capacitance: float) -> "LoadState":
        return LoadState(kind="resonant", capacitance=float(capacitance))

    @staticmethod
    def resonant_for(self_inductance: float, frequency: float) -> "LoadState":
        """Capacitor resonating the given inductance at the given frequency."""
        omega = 2.0 * math.pi * frequency
        return LoadState.resonant(1.0 / (omega * omega * self_inductance))

    @staticmethod
    def open_circuit() -> "LoadState":
        return LoadState(kind="open")

    @staticmethod
    def custom(impedance: complex) -> "LoadState":
        return LoadState(kind="custom", impedance=complex(impedance))

    @property
    def is_open(self) -> bool:
        return self.kind == "open"

    def termination(self, frequency: float) -> complex:
        """Series termination impedance at the given frequency (not for open loads)."""
        if self.kind == "resonant":
            omega = 2.0 * math.pi * frequency
            return 1.0 / (1j * omega * self.capacitance)
        if self.kind == "custom":
            return complex(self.impedance)
        raise ConfigError("an open-circuited relay has no termination impedance")


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable Tx/Rx/relays arrangement with its mutual-inductance cache.

    m_table is indexed 0 = tx, 1 = rx, 2.. = relays and is symmetric with a
    zero diagonal; when an M_tr override is set (misaligned arrangements) the
    [0, 1] entry holds the override instead of the geometric value.
    design_frequency is the frequency the relay capacitors were chosen for.
    """

    tx: Coil
    rx: Coil
    relays: tuple[tuple[Coil, LoadState], ...]
    mtr_override: float | None
    m_table: np.ndarray
    design_frequency: float = 13.56e6

    @staticmethod
    def build(tx: Coil, rx: Coil, relays: Sequence[tuple[Coil, LoadState]] = (),
              mtr_override: float | None = None,
              design_frequency: float = 13.56e6) -> "Network":
        """Compute the mutual-inductance cache and assemble the network."""
        coils = [tx, rx] + [coil for coil, _ in relays]
        table = geometry.mutual_inductance_table(coils)
        if mtr_override is not None:
            table[0, 1] = table[1, 0] = mtr_override
        table.setflags(write=False)
        return Network(tx=tx, rx=rx, relays=tuple(relays), mtr_override=mtr_override,
                       m_table=table, design_frequency=design_frequency)

    @property
    def n_relays(self) -> int:
        return len(self.relays)

    @property
    def m_tr(self) -> float:
        """Tx-Rx mutual inductance in effect (override included)."""
        return float(self.m_table[0, 1])

    def with_load_states(self, loads: Sequence[LoadState]) -> "Network":
        """Same geometry (cache reused), new relay terminations."""
        if len(loads) != self.n_relays:
            raise ConfigError(f"expected {self.n_relays} load states, got {len(loads)}")
        new_relays = tuple((coil, load) for (coil, _), load in zip(self.relays, loads))
        return replace(self, relays=new_relays)

    def closed_load(self, index: int) -> LoadState:
        """The termination relay `index` has when switched on.

        Relays stored with a non-open load keep it; relays stored open close
        onto the capacitor resonating them at design_frequency.
        """
        coil, load = self.relays[index]
        if not load.is_open:
            return load
        return LoadState.resonant_for(coil.self_inductance, self.design_frequency)

    def with_switch_state(self, state: np.ndarray) -> "Network":
        """Apply a boolean switch state (True = closed/resonant, False = open)."""
        state = np.asarray(state, dtype=bool).reshape(self.n_relays)
        loads = [self.closed_load(i) if state[i] else LoadState.open_circuit()
                 for i in range(self.n_relays)]
        return self.with_load_states(loads)


@dataclass(frozen=True)
class TwoPortZ:
    """Effective 2x2 impedance matrix (z12 = z21 by reciprocity)."""

    z11: complex
    z21: complex
    z22: complex
    frequency: float

    def __post_init__(self):
        if not (self.z11.real > 0 and self.z22.real > 0):
            raise PassivityError(
                f"two-port has nonpositive port resistance (Re z11 = {self.z11.real:.6g}, "
                f"Re z22 = {self.z22.real:.6g})")

    @property
    def z12(self) -> complex:
        return self.z21

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.z11, self.z21], [self.z21, self.z22]])


def direct_two_port(tx: Coil, rx: Coil, mtr: float, freq: float) -> TwoPortZ:
    """Two-port of the bare coupled Tx/Rx coils: z21 = j*w*M_tr (no relays)."""
    if not freq > 0:
        raise ConfigError(f"frequency must be positive, got {freq!r}")
    omega = 2.0 * math.pi * freq
    return TwoPortZ(z11=tx.resistance + 1j * omega * tx.self_inductance,
                    z21=1j * omega * mtr,
                    z22=rx.resistance + 1j * omega * rx.self_inductance,
                    frequency=freq)


def _active_indices(net: Network) -> list[int]:
    return [i for i, (_, load) in enumerate(net.relays) if not load.is_open]


def relay_system_matrices(net: Network, freq: float) -> tuple[np.ndarray, np.ndarray]:
    """(Z_Rs, M) for the non-open relays of the network at a frequency.

    Z_Rs is N'xN' with loop impedances R_n + j*w*L_n + Z_load on the diagonal
    and j*w*M_{n,m} off it; M is the 2xN' matrix of plain (jw-free) mutual
    inductances M_{tx,n} / M_{rx,n}.  Open-circuited relays are excluded
    entirely: they carry no current and do not interact.
    """
    if not freq > 0:
        raise ConfigError(f"frequency must be positive, got {freq!r}")
    omega = 2.0 * math.pi * freq
    active = _active_indices(net)
    n = len(active)
    if n == 0:
        return np.zeros((0, 0), dtype=complex), np.zeros((2, 0), dtype=complex)
    rows = np.asarray(active, dtype=np.intp) + 2
    z_rs = 1j * omega * net.m_table[np.ix_(rows, rows)]
    diag = np.empty(n, dtype=complex)
    for row, i in enumerate(active):
        coil, load = net.relays[i]
        diag[row] = (coil.resistance + 1j * omega * coil.self_inductance
                     + load.termination(freq))
    np.fill_diagonal(z_rs, diag)
    m_cross = net.m_table[:2, rows].astype(complex)
    return z_rs, m_cross


def factorized_relay_system(z_rs: np.ndarray, freq: float):
    """LU-factor Z_Rs with a condition estimate guard.

    Returns (lu, piv).  Raises NumericalError when the factorization is
    singular or the 1-norm condition estimate exceeds CONDITION_LIMIT.
    """
    anorm = np.linalg.norm(z_rs, 1)
    lu, piv, info = lapack.zgetrf(z_rs)
    if info != 0:
        raise NumericalError(f"relay system is singular at {freq:.6g} Hz (zgetrf info={info})")
    rcond, info = lapack.zgecon(lu, anorm)
    if info != 0 or not np.isfinite(rcond) or rcond < 1.0 / CONDITION_LIMIT:
        cond = np.inf if rcond == 0 else 1.0 / max(rcond, np.finfo(float).tiny)
        raise NumericalError(
            f"relay system is ill-conditioned at {freq:.6g} Hz "
            f"(condition estimate {cond:.3g} > {CONDITION_LIMIT:.0e})")
    return lu, piv


def _reduction_term(net: Network, freq: float) -> tuple[np.ndarray, int]:
    """(w^2 * M * Z_Rs^{-1} * M^T, N') via a guarded linear solve."""
    z_rs, m_cross = relay_system_matrices(net, freq)
    n = z_rs.shape[0]
    if n == 0:
        return np.zeros((2, 2), dtype=complex), 0
    omega = 2.0 * math.pi * freq
    lu, piv = factorized_relay_system(z_rs, freq)
    x, info = lapack.zgetrs(lu, piv, m_cross.T)
    if info != 0:
        raise NumericalError(f"relay system solve failed at {freq:.6g} Hz (zgetrs info={info})")
    return omega * omega * (m_cross @ x), n


def effective_two_port(net: Network, freq: float) -> TwoPortZ:
    """Effective Tx-Rx two-port with all non-open relays eliminated.

    Computes Z_tr + w^2 * M * Z_Rs^{-1} * M^T through a linear solve (never an
    explicit inverse); with zero active relays this is exactly the direct
    two-port.  Raises NumericalError when Z_Rs is singular or its condition
    estimate exceeds CONDITION_LIMIT.
    """
    base = direct_two_port(net.tx, net.rx, net.m_tr, freq)
    term, n = _reduction_term(net, freq)
    if n == 0:
        return base
    z21 = base.z21 + (term[0, 1] + term[1, 0]) / 2.0
    return TwoPortZ(z11=base.z11 + term[0, 0], z21=z21,
                    z22=base.z22 + term[1, 1], frequency=freq)


def transimpedance_phasors(net: Network, freq: float) -> np.ndarray:
    """The 1 + N'^2 complex phasors whose non-coherent sum is z21.

    Element 0 is the direct path j*w*M_tr; element 1 + n*N' + m is the relay
    path w^2 * M_tx,n * (Z_Rs^{-1})_{n,m} * M_rx,m.  Builds the explicit
    inverse, so intended for analysis at moderate relay counts.
    """
    z_rs, m_cross = relay_system_matrices(net, freq)
    omega = 2.0 * math.pi * freq
    n = z_rs.shape[0]
    phasors = np.empty(1 + n * n, dtype=complex)
    phasors[0] = 1j * omega * net.m_tr
    if n:
        lu, piv = factorized_relay_system(z_rs, freq)
        inv, info = lapack.zgetri(lu, piv)
        if info != 0:
            raise NumericalError(f"relay system inversion failed at {freq:.6g} Hz")
        paths = omega * omega * np.outer(m_cross[0], m_cross[1]) * inv
        phasors[1:] = paths.reshape(-1)
    return phasors
