"""Acceptance gate: the package's primary behavioural guarantees.

Three layers, one test per guarantee:

* analytic identities that must hold to numerical round-off,
* oracle comparisons against slow independent implementations,
* Monte Carlo statistics of the canonical arrangements, checked against
  frozen target windows.

Every Monte Carlo run is deterministic for its frozen seed, so the
statistics tests always see the same numbers.  The full module takes a few
hours on one core; the identity and oracle layers alone finish in minutes
(`pytest tests/test_acceptance.py -k "identity or oracle"`).  Set
MIRELAY_TEST_PROGRESS to a file path to watch trial progress.
"""
import math
import os
import time

import numpy as np
import pytest

from mirelay import (ExperimentConfig, GaParams, GeometryError, RateParams,
                     SamplingConfig, TwoPortZ, achievable_rate, canonical_pair,
                     channel_coefficient, direct_two_port, effective_two_port,
                     exhaustive_search, gain_report, matched_terminations,
                     mutual_inductance, optimize_genetic, optimize_n_minus_one,
                     optimize_one_relay, power_gain, power_gain_direct,
                     rate_vs_density, reference_coil, rho_chi,
                     run_cdf_experiment, sample_network, scattering_s21,
                     summarize, transimpedance_phasors)

from _oracles import (neumann_mutual_inductance, random_coil_pose,
                      random_passive_two_port)

SEED = 20260816
F0 = 13.56e6
BOLTZMANN = 1.380649e-23


def _progress_logger(tag: str):
    path = os.environ.get("MIRELAY_TEST_PROGRESS")
    if not path:
        return None

    def log(done: int, total: int) -> None:
        if done == total or done % max(1, total // 50) == 0:
            with open(path, "a") as fh:
                fh.write(f"{time.strftime('%H:%M:%S')} {tag} {done}/{total}\n")

    return log


def _run(tag: str, cfg: ExperimentConfig):
    result = run_cdf_experiment(cfg, progress=_progress_logger(tag))
    # a meaningful statistic requires essentially every trial to count
    assert result.exclusion_fraction < 1e-3, result.exclusions[:5]
    return result


def _row(result, density: float, scheme: str) -> dict:
    for row in summarize(result):
        if row["density"] == density and row["scheme"] == scheme:
            return row
    raise AssertionError(f"no summary row for density={density} scheme={scheme}")


def _sampled(fixed_count: int, seed: int):
    tx, rx, _ = canonical_pair(0.5)
    cfg = SamplingConfig(tx_rx_distance=0.5, relay_density=0.0, rng_seed=seed,
                         fixed_count=fixed_count)
    return sample_network(cfg, tx, rx)


# ---------------------------------------------------------------------------
# Monte Carlo fixtures (shared across the statistics tests)


@pytest.fixture(scope="module")
def misaligned_sparse():
    return _run("misaligned-0.1", ExperimentConfig(
        scenario="misaligned", tx_rx_distance=0.5, relay_densities=(0.1,),
        trials=4000, schemes=("none", "all"), rng_seed=SEED))


@pytest.fixture(scope="module")
def misaligned_dense():
    return _run("misaligned-1.0", ExperimentConfig(
        scenario="misaligned", tx_rx_distance=0.5, relay_densities=(1.0,),
        trials=2000, schemes=("none", "all"), rng_seed=SEED))


@pytest.fixture(scope="module")
def coaxial_sweep():
    return _run("coaxial", ExperimentConfig(
        scenario="coaxial", tx_rx_distance=0.5, relay_densities=(0.1, 0.3, 1.0),
        trials=2000, schemes=("none", "all"), rng_seed=SEED))


@pytest.fixture(scope="module")
def scheme_comparison():
    return _run("schemes-1.0", ExperimentConfig(
        scenario="random-orientations", tx_rx_distance=0.5,
        relay_densities=(1.0,), trials=500,
        schemes=("none", "all", "one_relay", "n_minus_one", "freq_tuning",
                 "genetic"),
        rng_seed=SEED, ga=GaParams(generations=150), freq_grid_points=51))


# ---------------------------------------------------------------------------
# Identity layer: exact relations on random passive two-ports


def test_identity_gain_channel_coefficient_scattering():
    """eta = |h|^2 and h = S21 on 10^4 random passive two-ports (< 1e-10)."""
    rng = np.random.default_rng(SEED)
    worst_eta = worst_s21 = 0.0
    for _ in range(10_000):
        z11, z21, z22, _, _ = random_passive_two_port(rng)
        z = TwoPortZ(z11=z11, z21=z21, z22=z22, frequency=F0)
        h = channel_coefficient(z)
        worst_eta = max(worst_eta, abs(abs(h) ** 2 - power_gain(*rho_chi(z))))
        worst_s21 = max(worst_s21, abs(h - scattering_s21(z)))
    assert worst_eta < 1e-10
    assert worst_s21 < 1e-10


def test_identity_matching_fixed_point():
    """Conjugate-matching fixed-point residuals < 1e-10 on the same set."""
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(10_000):
        z11, z21, z22, _, _ = random_passive_two_port(rng)
        z = TwoPortZ(z11=z11, z21=z21, z22=z22, frequency=F0)
        z_in, z_out = matched_terminations(z)
        res_in = abs(z.z11 - z.z21 ** 2 / (z.z22 + np.conj(z_out)) - z_in)
        res_out = abs(z.z22 - z.z21 ** 2 / (z.z11 + np.conj(z_in)) - z_out)
        worst = max(worst, res_in / abs(z_in), res_out / abs(z_out))
    assert worst < 1e-10


def test_identity_phasor_sum_equals_transimpedance():
    """Relay path phasors sum to the reduced z21 (rel < 1e-10, N <= 50)."""
    tx, rx, _ = canonical_pair(0.5)
    worst = 0.0
    for count, seed in ((1, 1), (5, 2), (17, 3), (33, 4), (50, 5), (50, 6)):
        cfg = SamplingConfig(tx_rx_distance=0.5, relay_density=0.0,
                             rng_seed=seed, fixed_count=count)
        net = sample_network(cfg, tx, rx)
        for freq in (F0, 1.02 * F0):
            z21 = effective_two_port(net, freq).z21
            total = np.sum(transimpedance_phasors(net, freq))
            worst = max(worst, abs(total - z21) / abs(z21))
    assert worst < 1e-10


def test_identity_direct_link_formula_equivalence():
    """The k*sqrt(QtQr) form equals the general (rho, chi) gain at rho = 0."""
    rng = np.random.default_rng(7)
    omega = 2.0 * math.pi * F0
    worst = 0.0
    for _ in range(2000):
        lt, lr = 10.0 ** rng.uniform(-7, -4), 10.0 ** rng.uniform(-7, -4)
        rt, rr = 10.0 ** rng.uniform(-1, 2), 10.0 ** rng.uniform(-1, 2)
        k = 10.0 ** rng.uniform(-6, -0.5)
        m = k * math.sqrt(lt * lr)
        z = TwoPortZ(z11=rt + 1j * omega * lt, z21=1j * omega * m,
                     z22=rr + 1j * omega * lr, frequency=F0)
        eta_general = power_gain(*rho_chi(z))
        eta_direct = power_gain_direct(k, omega * lt / rt, omega * lr / rr)
        worst = max(worst, abs(eta_general - eta_direct) / eta_direct)
    assert worst < 1e-13


# ---------------------------------------------------------------------------
# Oracle layer: slow independent implementations


def test_oracle_quadrature_matches_refined_integration():
    """Adaptive quadrature vs fixed high-order oracle: rel < 1e-6, 100 pairs."""
    rng = np.random.default_rng(42)
    used = 0
    tries = 0
    worst = 0.0
    while used < 100:
        tries += 1
        assert tries < 500, "could not find 100 comparable coil pairs"
        p1, a1 = random_coil_pose(rng)
        p2, a2 = random_coil_pose(rng)
        c1 = reference_coil(position=p1, orientation=a1)
        c2 = reference_coil(position=p2, orientation=a2)
        try:
            m = mutual_inductance(c1, c2)
        except GeometryError:
            continue  # overlapping loops: no reference value either
        m_hi = neumann_mutual_inductance(p1, a1, c1.radius, c1.turns,
                                         p2, a2, c2.radius, c2.turns, order=2048)
        if abs(m_hi) < 1e-15:
            continue  # relative error is meaningless on a vanishing coupling
        m_lo = neumann_mutual_inductance(p1, a1, c1.radius, c1.turns,
                                         p2, a2, c2.radius, c2.turns, order=1024)
        if abs(m_hi - m_lo) > 0.3e-6 * abs(m_hi):
            continue  # the oracle itself has not converged for this pose
        used += 1
        worst = max(worst, abs(m - m_hi) / abs(m_hi))
    assert worst < 1e-6


def test_oracle_genetic_reaches_enumerated_optimum():
    """GA >= 0.99x the exhaustive optimum in >= 95 of 100 seeded trials."""
    successes = 0
    for seed in range(100):
        net = _sampled(fixed_count=12, seed=seed)
        _, eta_exh = exhaustive_search(net, F0)
        _, eta_ga = optimize_genetic(net, F0,
                                     GaParams(generations=60, rng_seed=seed))
        if eta_ga >= 0.99 * eta_exh:
            successes += 1
    assert successes >= 95


def test_oracle_single_switch_schemes_match_enumeration():
    """1-relay and N-1 pick exactly the state slow enumeration picks."""
    for seed in range(200, 220):
        net = _sampled(fixed_count=9, seed=seed)
        n = net.n_relays

        def eta_of(mask):
            z = effective_two_port(net.with_switch_state(mask), F0)
            return power_gain(*rho_chi(z))

        one_hot = [eta_of(np.eye(n, dtype=bool)[i]) for i in range(n)]
        index, eta = optimize_one_relay(net, F0)
        assert index == int(np.argmax(one_hot))
        assert eta == pytest.approx(max(one_hot), rel=1e-10)

        leave_one = [eta_of(~np.eye(n, dtype=bool)[i]) for i in range(n)]
        index, eta = optimize_n_minus_one(net, F0)
        assert index == int(np.argmax(leave_one))
        assert eta == pytest.approx(max(leave_one), rel=1e-10)


def test_oracle_matched_terminations_are_global():
    """+/-1% termination perturbations never increase delivered power."""

    def transducer_gain(z, z_source, z_load):
        a = np.array([[z.z11 + z_source, z.z21], [z.z21, z.z22 + z_load]],
                     dtype=complex)
        _, i2 = np.linalg.solve(a, np.array([1.0, 0.0], dtype=complex))
        p_load = 0.5 * abs(i2) ** 2 * np.real(z_load)
        return p_load / (1.0 / (8.0 * np.real(z_source)))

    rng = np.random.default_rng(SEED + 1)
    for _ in range(1000):
        z11, z21, z22, _, _ = random_passive_two_port(rng)
        z = TwoPortZ(z11=z11, z21=z21, z22=z22, frequency=F0)
        report = gain_report(z)
        z_s = np.conj(report.z_in)
        z_l = np.conj(report.z_out)
        matched = transducer_gain(z, z_s, z_l)
        assert matched == pytest.approx(report.eta, rel=1e-9)
        for dl in (0.99, 1.01, 1.0 + 0.01j, 1.0 - 0.01j):
            assert transducer_gain(z, z_s, z_l * dl) <= matched * (1 + 1e-9)
            assert transducer_gain(z, z_s * dl, z_l) <= matched * (1 + 1e-9)


# ---------------------------------------------------------------------------
# Statistics layer: canonical-arrangement Monte Carlo targets


def test_statistics_misaligned_sparse(misaligned_sparse):
    """Misaligned 50 cm, 0.1 relays/dm^3: median relay gain 4.7 +/- 1.5 dB,
    improving fraction 87.1 +/- 2 points."""
    row = _row(misaligned_sparse, 0.1, "all")
    assert row["n_trials"] == 4000
    assert 3.2 <= row["median_gain_db"] <= 6.2
    assert 0.851 <= row["improving_fraction"] <= 0.891


def test_statistics_misaligned_dense(misaligned_dense):
    """Misaligned 50 cm, 1 relay/dm^3: median relay gain 13.8 +/- 1.5 dB,
    improving fraction 96.7 +/- 2 points."""
    row = _row(misaligned_dense, 1.0, "all")
    assert row["n_trials"] == 2000
    assert 12.3 <= row["median_gain_db"] <= 15.3
    assert 0.947 <= row["improving_fraction"] <= 0.987


def test_statistics_coaxial_relays_rarely_help(coaxial_sweep):
    """Coaxial 50 cm: median gain of closing all relays stays below +1 dB
    and the median gain declines as the cloud gets denser."""
    medians = []
    for density in (0.1, 0.3, 1.0):
        row = _row(coaxial_sweep, density, "all")
        assert row["n_trials"] == 2000
        assert row["median_gain_db"] <= 1.0
        medians.append(row["eta_db_p50"])
    assert medians[0] > medians[1] > medians[2]


def test_statistics_scheme_ordering(scheme_comparison):
    """1 relay/dm^3, random orientations: genetic >= N-1 >= all-on in median
    gain, frequency tuning lands between N-1 and genetic, and genetic
    improves on the bare link in every single trial."""
    med = {s: _row(scheme_comparison, 1.0, s)["median_gain_db"]
           for s in ("all", "one_relay", "n_minus_one", "freq_tuning",
                     "genetic")}
    assert med["genetic"] >= med["n_minus_one"] >= med["all"]
    assert med["n_minus_one"] <= med["freq_tuning"] <= med["genetic"]
    gains = [r.gain_db for r in scheme_comparison.records
             if r.scheme == "genetic"]
    assert len(gains) == 500
    assert min(gains) > 0.0


def test_rate_spot_values():
    """achievable_rate matches independent arithmetic to 1e-9 relative."""
    rate = RateParams()
    noise = BOLTZMANN * 300.0 * 1e3 * 10.0 ** 1.5
    for eta in (1.0, 1e-2, 3.7e-5, 1e-9):
        expected = 1e3 * math.log2(1.0 + eta * 1e-6 / noise)
        assert abs(achievable_rate(eta, rate) - expected) <= 1e-9 * expected
    custom = RateParams(transmit_power=5e-3, bandwidth=2e4, temperature=290.0,
                        noise_figure_db=7.0)
    noise = BOLTZMANN * 290.0 * 2e4 * 10.0 ** 0.7
    expected = 2e4 * math.log2(1.0 + 0.02 * 5e-3 / noise)
    assert abs(achievable_rate(0.02, custom) - expected) <= 1e-9 * expected


def test_rate_outage_improvement(scheme_comparison):
    """Genetic switching lifts the 1%-outage rate above all-relays-on."""
    outage = {s.scheme: s.outage_rate for s in rate_vs_density(scheme_comparison)}
    assert outage["genetic"] > outage["all"]
