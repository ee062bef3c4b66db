"""Maximizing the matched gain over relay switch states and frequency.

Relays are switched between their closed termination (resonant capacitor)
and open circuit, giving 2^N binary states.  Searches share one
ReducedSwitchSystem per (network, frequency): it factorizes the all-closed
relay system once, after which any switch state is evaluated through an
algebraically exact update — a direct sub-solve over the closed set when few
relays are closed, or a Schur-complement correction on the precomputed
inverse over the opened set when most are.  Both paths reproduce
effective_two_port up to round-off while avoiding a fresh dense
factorization per state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .circuit import Network, effective_two_port, factorized_relay_system
from .errors import ConfigError, NumericalError
from .matching import power_gain, rho_chi, rho_chi_values

# SwitchState is a boolean mask over the relays: True = closed (resonant),
# False = open-circuited.
SwitchState = np.ndarray


def state_to_hex(state: np.ndarray) -> str:
    """Compact hex encoding of a switch state (bit i = relay i)."""
    return np.packbits(np.asarray(state, dtype=bool), bitorder="little").tobytes().hex()


def state_from_hex(text: str, n_relays: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8),
                         bitorder="little")
    if len(bits) < n_relays:
        raise ConfigError(f"switch-state hex {text!r} too short for {n_relays} relays")
    return bits[:n_relays].astype(bool)


@dataclass(frozen=True)
class GaParams:
    """Genetic-search knobs.

    Each generation the `survivors` fittest states are kept (elitism is
    unconditional: survivors always re-enter the selection pool), every
    survivor spawns one mutated child (per-bit flip probability
    min(expected_mutation_flips / N, 0.5), at least one forced flip), and
    `recombined_per_generation` children are produced by uniform crossover
    of two distinct survivors.
    """

    generations: int = 500
    survivors: int = 20
    recombined_per_generation: int = 4
    expected_mutation_flips: float = 3.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.generations < 1:
            raise ConfigError(f"generations must be >= 1, got {self.generations}")
        if self.survivors < 2:
            raise ConfigError(f"survivors must be >= 2, got {self.survivors}")
        if self.recombined_per_generation < 0:
            raise ConfigError("recombined_per_generation must be >= 0")
        if not self.expected_mutation_flips > 0:
            raise ConfigError("expected_mutation_flips must be positive")


class ReducedSwitchSystem:
    """Shared per-(network, frequency) state for fast switch-state evaluation.

    Builds the all-closed relay system A (every relay on its closed
    termination), its guarded inverse B, and the projections w = B M^T and
    G2 = M B M^T.  evaluate(mask) then returns the matched gain of the
    network restricted to the closed set of `mask`.
    """

    def __init__(self, net: Network, freq: float):
        if net.n_relays < 1:
            raise ConfigError("switch optimization needs at least one relay")
        self.net = net
        self.freq = float(freq)
        omega = 2.0 * math.pi * self.freq
        self.omega = omega
        n = net.n_relays
        a = np.zeros((n, n), dtype=complex)
        g = np.zeros((2, n))
        for i in range(n):
            coil = net.relays[i][0]
            load = net.closed_load(i)
            a[i, i] = coil.resistance + 1j * omega * coil.self_inductance + load.termination(self.freq)
            g[0, i] = net.m_table[0, 2 + i]
            g[1, i] = net.m_table[1, 2 + i]
        off = 1j * omega * net.m_table[2:, 2:]
        a += off - np.diag(np.diag(off))
        self.a = a
        self.g = g
        lu, piv = factorized_relay_system(a, self.freq)
        b, info = lapack.zgetri(lu, piv)
        if info != 0:
            raise NumericalError(f"relay system inversion failed at {self.freq:.6g} Hz")
        self.b = b
        self.w = b @ g.T.astype(complex)
        self.g2 = g @ self.w
        self.z11_base = net.tx.resistance + 1j * omega * net.tx.self_inductance
        self.z22_base = net.rx.resistance + 1j * omega * net.rx.self_inductance
        self.z21_base = 1j * omega * net.m_tr

    @property
    def n_relays(self) -> int:
        return self.g.shape[1]

    def _reduction(self, mask: np.ndarray) -> np.ndarray:
        n = self.n_relays
        closed = int(mask.sum())
        if closed == 0:
            return np.zeros((2, 2), dtype=complex)
        if closed == n:
            return self.g2
        if closed <= n - closed:
            s = np.flatnonzero(mask)
            a_ss = self.a[np.ix_(s, s)]
            g_s = self.g[:, s]
            x = np.linalg.solve(a_ss, g_s.T.astype(complex))
            return g_s @ x
        o = np.flatnonzero(~mask)
        b_oo = self.b[np.ix_(o, o)]
        w_o = self.w[o]
        y = np.linalg.solve(b_oo, w_o)
        return self.g2 - w_o.T @ y

    def evaluate(self, mask: np.ndarray) -> float:
        """Matched gain eta of the network with the given switch state."""
        mask = np.asarray(mask, dtype=bool).reshape(self.n_relays)
        try:
            q = self._reduction(mask)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"switch-state subsystem is singular at {self.freq:.6g} Hz") from exc
        w2 = self.omega * self.omega
        z11 = self.z11_base + w2 * q[0, 0]
        z22 = self.z22_base + w2 * q[1, 1]
        z21 = self.z21_base + w2 * (q[0, 1] + q[1, 0]) / 2.0
        rho, chi = rho_chi_values(z11, z21, z22)
        return power_gain(rho, chi)


def _genetic(reduced: ReducedSwitchSystem, params: GaParams,
             trace: list | None = None) -> tuple[np.ndarray, float]:
    n = reduced.n_relays
    rng = np.random.default_rng(params.rng_seed)
    memo: dict[bytes, float] = {}

    def fitness(state: np.ndarray) -> float:
        key = state.tobytes()
        eta = memo.get(key)
        if eta is None:
            eta = reduced.evaluate(state)
            memo[key] = eta
        return eta

    population = [np.ones(n, dtype=bool), np.zeros(n, dtype=bool)]
    for _ in range(params.survivors - 2):
        population.append(rng.random(n) < 0.5)

    flip_p = min(params.expected_mutation_flips / n, 0.5)
    best_state = population[0].copy()
    best_eta = -1.0

    def rank(states: list[np.ndarray]) -> list[np.ndarray]:
        return sorted(states, key=lambda s: (-fitness(s), s.tobytes()))

    survivors = rank(population)[: params.survivors]
    for state in survivors:
        if fitness(state) > best_eta:
            best_eta = fitness(state)
            best_state = state.copy()

    for generation in range(params.generations):
        children = []
        for state in survivors:
            flips = rng.random(n) < flip_p
            if not flips.any():
                flips[rng.integers(n)] = True
            children.append(state ^ flips)
        for _ in range(params.recombined_per_generation):
            if len(survivors) >= 2:
                i = int(rng.integers(len(survivors)))
                j = int(rng.integers(len(survivors) - 1))
                if j >= i:
                    j += 1
                pick = rng.random(n) < 0.5
                children.append(np.where(pick, survivors[i], survivors[j]))
        survivors = rank(survivors + children)[: params.survivors]
        top = survivors[0]
        if fitness(top) > best_eta:
            best_eta = fitness(top)
            best_state = top.copy()
        if trace is not None:
            trace.append((generation, best_eta))
    return best_state, best_eta


def optimize_genetic(net: Network, freq: float, params: GaParams = GaParams(),
                     trace: list | None = None) -> tuple[np.ndarray, float]:
    """Genetic search over the 2^N switch states; returns (state, eta).

    The initial population holds the all-on state, the all-off state, and
    random states, and elitism keeps the best state alive, so the result is
    never worse than either baseline.  Deterministic for a given
    params.rng_seed.  When `trace` is a list, (generation, best_eta) pairs
    are appended to it.
    """
    return _genetic(ReducedSwitchSystem(net, freq), params, trace)


def _one_relay(reduced: ReducedSwitchSystem) -> tuple[int, float]:
    n = reduced.n_relays
    mask = np.zeros(n, dtype=bool)
    best_index = 0
    best_eta = -1.0
    for i in range(n):
        mask[:] = False
        mask[i] = True
        eta = reduced.evaluate(mask)
        if eta > best_eta:
            best_eta = eta
            best_index = i
    return best_index, best_eta


def optimize_one_relay(net: Network, freq: float) -> tuple[int, float]:
    """Best single-relay activation: exhaustive over the N one-hot states.

    Returns (relay index, eta); ties resolve to the smallest index.
    """
    return _one_relay(ReducedSwitchSystem(net, freq))


def _n_minus_one(reduced: ReducedSwitchSystem) -> tuple[int, float]:
    n = reduced.n_relays
    mask = np.ones(n, dtype=bool)
    best_index = 0
    best_eta = -1.0
    for i in range(n):
        mask[:] = True
        mask[i] = False
        eta = reduced.evaluate(mask)
        if eta > best_eta:
            best_eta = eta
            best_index = i
    return best_index, best_eta


def optimize_n_minus_one(net: Network, freq: float) -> tuple[int, float]:
    """Best single-relay deactivation: exhaustive over the N leave-one-out states.

    Always opens exactly one relay (the scheme's result can therefore lie
    below the all-on gain).  Ties resolve to the smallest index.
    """
    return _n_minus_one(ReducedSwitchSystem(net, freq))


def exhaustive_search(net: Network, freq: float) -> tuple[np.ndarray, float]:
    """Brute-force optimum over all 2^N switch states (test oracle; N <= ~16)."""
    n = net.n_relays
    if n > 20:
        raise ConfigError(f"exhaustive search over 2^{n} states is not sensible")
    best_state = np.zeros(n, dtype=bool)
    best_eta = -1.0
    for code in range(2 ** n):
        mask = np.array([(code >> i) & 1 for i in range(n)], dtype=bool)
        z = effective_two_port(net.with_switch_state(mask), freq)
        eta = power_gain(*rho_chi(z))
        if eta > best_eta:
            best_eta = eta
            best_state = mask
    return best_state, best_eta


def _golden_section(func, lo: float, hi: float, iterations: int = 60) -> tuple[float, float]:
    """Golden-section maximization of func on [lo, hi] (deterministic)."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1 = func(x1)
    f2 = func(x2)
    for _ in range(iterations):
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = func(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = func(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def optimize_frequency(net: Network, band: tuple[float, float] | None = None,
                       grid_points: int = 401) -> tuple[float, float]:
    """Best operating frequency while the relay terminations stay fixed.

    Scans `grid_points` frequencies across `band` (default: design frequency
    +/- 10%), refines around the best grid point with a golden-section
    search, and returns (f_star, eta_star).  The design frequency is always
    a candidate when it lies inside the band, so eta_star >= eta(f0) there;
    exact ties resolve to the lowest frequency.  Relay capacitors keep their
    design values — only the operating point moves.
    """
    f0 = net.design_frequency
    if band is None:
        band = (0.9 * f0, 1.1 * f0)
    f_lo, f_hi = band
    if not (0 < f_lo < f_hi):
        raise ConfigError(f"need 0 < f_lo < f_hi, got {band!r}")
    if grid_points < 2:
        raise ConfigError(f"grid_points must be >= 2, got {grid_points}")

    def eta_at(freq: float) -> float:
        try:
            z = effective_two_port(net, freq)
            return power_gain(*rho_chi(z))
        except NumericalError:
            return math.nan

    grid = np.linspace(f_lo, f_hi, grid_points)
    etas = np.array([eta_at(f) for f in grid])
    if np.isnan(etas).all():
        raise NumericalError(
            f"relay system is ill-conditioned across the whole band {band!r}")
    best = int(np.nanargmax(etas))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid_points - 1)]
    def eta_or_neg(freq: float) -> float:
        eta = eta_at(freq)
        return -1.0 if math.isnan(eta) else eta
    f_gold, eta_gold = _golden_section(eta_or_neg, lo, hi)

    candidates = [(float(grid[best]), float(etas[best])), (float(f_gold), float(eta_gold))]
    if f_lo <= f0 <= f_hi:
        candidates.append((float(f0), eta_or_neg(f0)))
    candidates.sort(key=lambda c: c[0])
    f_star, eta_star = candidates[0]
    for f, eta in candidates[1:]:
        if eta > eta_star:
            f_star, eta_star = f, eta
    return f_star, eta_star
