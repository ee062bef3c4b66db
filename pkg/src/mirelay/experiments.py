"""Monte Carlo experiments over randomly sampled relay networks.

A trial samples one network (endpoint arrangement set by the scenario,
relays drawn from the spheroidal region), evaluates every requested scheme
on it, and emits one record per scheme.  Trials are seeded independently of
each other and of the worker count, so results are bit-identical whether
run serially or across a process pool.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import k as BOLTZMANN

from .circuit import Network
from .errors import ConfigError, GeometryError, NumericalError
from .geometry import Coil, SamplingConfig, canonical_pair, sample_network
from .optimize import (GaParams, ReducedSwitchSystem, _genetic, _n_minus_one,
                       _one_relay, optimize_frequency, state_to_hex)

SCHEMES = ("none", "all", "one_relay", "n_minus_one", "freq_tuning", "genetic")
SCENARIOS = ("coaxial", "misaligned", "random-orientations")
KINDS = ("cdf", "rates", "frequency_response")
PERCENTILES = (1, 10, 25, 50, 75, 90, 99)


@dataclass(frozen=True)
class RateParams:
    """Link-budget constants for the achievable-rate mapping."""

    transmit_power: float = 1e-6
    bandwidth: float = 1e3
    temperature: float = 300.0
    noise_figure_db: float = 15.0

    def __post_init__(self):
        for name in ("transmit_power", "bandwidth", "temperature"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    @property
    def noise_power(self) -> float:
        return BOLTZMANN * self.temperature * self.bandwidth * 10.0 ** (self.noise_figure_db / 10.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a Monte Carlo experiment."""

    scenario: str = "misaligned"
    tx_rx_distance: float = 0.5
    relay_densities: tuple[float, ...] = (0.1, 0.3, 1.0)
    trials: int = 2000
    schemes: tuple[str, ...] = ("none", "all")
    kind: str = "cdf"
    design_frequency: float = 13.56e6
    rng_seed: int = 0
    rate: RateParams = RateParams()
    attenuation_db: float = 23.7
    min_coil_separation: float | None = None
    fixed_count: int | None = None
    ga: GaParams = GaParams()
    freq_band: tuple[float, float] | None = None
    freq_grid_points: int = 101
    description: str = ""

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown schemes {unknown}; expected a subset of {SCHEMES}")
        if not self.schemes:
            raise ConfigError("schemes must not be empty")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.relay_densities:
            raise ConfigError("relay_densities must not be empty")
        if any(d < 0 for d in self.relay_densities):
            raise ConfigError(f"relay densities must be >= 0, got {self.relay_densities}")
        if not self.tx_rx_distance > 0:
            raise ConfigError("tx_rx_distance must be positive")
        if not self.design_frequency > 0:
            raise ConfigError("design_frequency must be positive")


@dataclass(frozen=True)
class TrialRecord:
    """One (trial, scheme) outcome."""

    density: float
    trial_index: int
    n_relays: int
    scheme: str
    eta: float
    eta_db: float
    gain_db: float
    detail: str = ""


@dataclass(frozen=True)
class Exclusion:
    """A trial dropped for a reported reason (never silently)."""

    density: float
    trial_index: int
    reason: str


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: tuple[TrialRecord, ...]
    exclusions: tuple[Exclusion, ...]

    @property
    def attempted_trials(self) -> int:
        return len(self.config.relay_densities) * self.config.trials

    @property
    def exclusion_fraction(self) -> float:
        return len(self.exclusions) / self.attempted_trials


def db(eta: float) -> float:
    """Power ratio in dB; 0 maps to -inf."""
    return 10.0 * math.log10(eta) if eta > 0 else -math.inf


def _trial_seeds(master: int, density_index: int, trial: int) -> tuple[int, int, int]:
    ss = np.random.SeedSequence(entropy=master, spawn_key=(density_index, trial))
    s = ss.generate_state(3)
    return int(s[0]), int(s[1]), int(s[2])


def _endpoints(cfg: ExperimentConfig, orientation_seed: int) -> tuple[Coil, Coil, float | None]:
    if cfg.scenario == "coaxial":
        return canonical_pair(cfg.tx_rx_distance, "coaxial")
    if cfg.scenario == "misaligned":
        return canonical_pair(cfg.tx_rx_distance, "misaligned",
                              attenuation_db=cfg.attenuation_db)
    tx, rx, _ = canonical_pair(cfg.tx_rx_distance, "coaxial")
    rng = np.random.default_rng(orientation_seed)
    points = rng.standard_normal((2, 3))
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    tx = replace(tx, orientation=tuple(points[0]))
    rx = replace(rx, orientation=tuple(points[1]))
    return tx, rx, None


def _sample_trial_network(cfg: ExperimentConfig, density: float,
                          sampling_seed: int, orientation_seed: int) -> Network:
    tx, rx, override = _endpoints(cfg, orientation_seed)
    sampling = SamplingConfig(tx_rx_distance=cfg.tx_rx_distance, relay_density=density,
                              rng_seed=sampling_seed,
                              min_coil_separation=cfg.min_coil_separation,
                              fixed_count=cfg.fixed_count)
    return sample_network(sampling, tx, rx, design_frequency=cfg.design_frequency,
                          mtr_override=override)


def _run_trial(cfg: ExperimentConfig, density_index: int, trial: int) -> list[TrialRecord]:
    density = cfg.relay_densities[density_index]
    sampling_seed, ga_seed, orientation_seed = _trial_seeds(cfg.rng_seed, density_index, trial)
    net = _sample_trial_network(cfg, density, sampling_seed, orientation_seed)
    n = net.n_relays
    f0 = cfg.design_frequency

    reduced = ReducedSwitchSystem(net, f0) if n >= 1 else None
    if reduced is not None:
        eta_none = reduced.evaluate(np.zeros(n, dtype=bool))
    else:
        from .circuit import direct_two_port
        from .matching import power_gain, rho_chi
        eta_none = power_gain(*rho_chi(direct_two_port(net.tx, net.rx, net.m_tr, f0)))
    none_db = db(eta_none)

    def record(scheme: str, eta: float, detail: str = "") -> TrialRecord:
        eta_db = db(eta)
        if math.isinf(eta_db) and math.isinf(none_db):
            gain = 0.0
        else:
            gain = eta_db - none_db
        return TrialRecord(density=density, trial_index=trial, n_relays=n,
                           scheme=scheme, eta=eta, eta_db=eta_db, gain_db=gain,
                           detail=detail)

    rows = []
    for scheme in cfg.schemes:
        if scheme == "none" or reduced is None:
            rows.append(record(scheme, eta_none))
        elif scheme == "all":
            rows.append(record(scheme, reduced.evaluate(np.ones(n, dtype=bool))))
        elif scheme == "one_relay":
            index, eta = _one_relay(reduced)
            rows.append(record(scheme, eta, detail=f"relay={index}"))
        elif scheme == "n_minus_one":
            index, eta = _n_minus_one(reduced)
            rows.append(record(scheme, eta, detail=f"opened={index}"))
        elif scheme == "freq_tuning":
            f_star, eta = optimize_frequency(net, band=cfg.freq_band,
                                             grid_points=cfg.freq_grid_points)
            rows.append(record(scheme, eta, detail=f"f={f_star:.1f}"))
        elif scheme == "genetic":
            params = replace(cfg.ga, rng_seed=ga_seed)
            state, eta = _genetic(reduced, params)
            rows.append(record(scheme, eta, detail=f"state={state_to_hex(state)}"))
    return rows


def _trial_task(cfg: ExperimentConfig, density_index: int,
                trial: int) -> tuple[list[TrialRecord] | None, str | None]:
    try:
        return _run_trial(cfg, density_index, trial), None
    except (NumericalError, GeometryError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def run_cdf_experiment(cfg: ExperimentConfig, workers: int = 1,
                       progress=None) -> ExperimentResult:
    """Run cfg.trials trials per density and collect per-scheme records.

    Trials that fail with a numerical or geometric error are reported as
    exclusions, never silently dropped.  `progress`, when given, is called
    with (completed, total) after every trial.  Results are independent of
    `workers`.
    """
    tasks = [(di, ti) for di in range(len(cfg.relay_densities))
             for ti in range(cfg.trials)]
    records: list[TrialRecord] = []
    exclusions: list[Exclusion] = []
    done = 0

    def consume(di: int, ti: int, outcome) -> None:
        nonlocal done
        rows, reason = outcome
        if rows is not None:
            records.extend(rows)
        else:
            exclusions.append(Exclusion(density=cfg.relay_densities[di],
                                        trial_index=ti, reason=reason))
        done += 1
        if progress is not None:
            progress(done, len(tasks))

    if workers <= 1:
        for di, ti in tasks:
            consume(di, ti, _trial_task(cfg, di, ti))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_trial_task, cfg, di, ti) for di, ti in tasks]
            for (di, ti), future in zip(tasks, futures):
                consume(di, ti, future.result())
    return ExperimentResult(config=cfg, records=tuple(records),
                            exclusions=tuple(exclusions))


def frequency_response(net: Network, band: tuple[float, float] | None = None,
                       grid_points: int = 401,
                       states: dict[str, np.ndarray] | None = None,
                       ) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Matched gain across a frequency band for one or more switch states.

    Returns (frequencies, {label: eta array}); grid points where the relay
    system is ill-conditioned hold NaN.  Default band is the design
    frequency +/- 10%; default state is every relay closed.
    """
    from .circuit import effective_two_port
    from .matching import power_gain, rho_chi

    f0 = net.design_frequency
    if band is None:
        band = (0.9 * f0, 1.1 * f0)
    f_lo, f_hi = band
    if not (0 < f_lo < f_hi):
        raise ConfigError(f"need 0 < f_lo < f_hi, got {band!r}")
    if grid_points < 2:
        raise ConfigError(f"grid_points must be >= 2, got {grid_points}")
    if states is None:
        states = {"all": np.ones(net.n_relays, dtype=bool)}
    freqs = np.linspace(f_lo, f_hi, grid_points)
    curves: dict[str, np.ndarray] = {}
    for label, state in states.items():
        switched = net.with_switch_state(np.asarray(state, dtype=bool))
        etas = np.empty(grid_points)
        for i, f in enumerate(freqs):
            try:
                etas[i] = power_gain(*rho_chi(effective_two_port(switched, float(f))))
            except NumericalError:
                etas[i] = math.nan
        curves[label] = etas
    return freqs, curves


def achievable_rate(eta: float | np.ndarray, rate: RateParams = RateParams()):
    """Shannon rate B log2(1 + eta P_t / P_N) in bit/s for matched gain eta."""
    snr = np.asarray(eta) * rate.transmit_power / rate.noise_power
    out = rate.bandwidth * np.log2(1.0 + snr)
    return float(out) if np.isscalar(eta) or out.ndim == 0 else out


@dataclass(frozen=True)
class RateSummary:
    density: float
    scheme: str
    n_trials: int
    mean_rate: float
    outage_rate: float  # 1st-percentile rate


def rate_vs_density(result: ExperimentResult) -> list[RateSummary]:
    """Mean and 1%-outage achievable rate per (density, scheme)."""
    rate = result.config.rate
    out = []
    for density in result.config.relay_densities:
        for scheme in result.config.schemes:
            etas = np.array([r.eta for r in result.records
                             if r.density == density and r.scheme == scheme])
            if len(etas) == 0:
                continue
            rates = achievable_rate(etas, rate)
            out.append(RateSummary(density=density, scheme=scheme, n_trials=len(etas),
                                   mean_rate=float(np.mean(rates)),
                                   outage_rate=float(np.percentile(rates, 1))))
    return out


def summarize(result: ExperimentResult) -> list[dict]:
    """Per-(density, scheme) distribution summary rows for reporting.

    Each row carries the trial count, eta percentiles in dB
    (PERCENTILES), the median relay gain over the no-relay reference, and
    the fraction of trials the scheme strictly improves on it.
    """
    rows = []
    for density in result.config.relay_densities:
        for scheme in result.config.schemes:
            recs = [r for r in result.records
                    if r.density == density and r.scheme == scheme]
            if not recs:
                continue
            eta_db = np.array([r.eta_db for r in recs])
            gain_db = np.array([r.gain_db for r in recs])
            row = {"density": density, "scheme": scheme, "n_trials": len(recs),
                   "median_gain_db": float(np.median(gain_db)),
                   "improving_fraction": float(np.mean(gain_db > 0.0))}
            for p in PERCENTILES:
                row[f"eta_db_p{p}"] = float(np.percentile(eta_db, p))
            rows.append(row)
    return rows
