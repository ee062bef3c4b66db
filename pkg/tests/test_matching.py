"""Matched power gain, channel coefficient, and conjugate terminations."""
import math

import numpy as np
import pytest

from mirelay import (ConfigError, PassivityError, TwoPortZ, canonical_pair,
                     channel_coefficient, direct_two_port, gain_report,
                     matched_terminations, power_gain, power_gain_direct,
                     rho_chi, scattering_s21)
from mirelay.matching import rho_chi_values

from _oracles import random_passive_two_port

F0 = 13.56e6
OMEGA0 = 2.0 * math.pi * F0


def _two_port(z11, z21, z22):
    return TwoPortZ(z11=complex(z11), z21=complex(z21), z22=complex(z22),
                    frequency=F0)


def _transducer_gain(z, z_source, z_load, volts=1.0):
    """Delivered power over source available power, by direct mesh solve."""
    a = np.array([[z.z11 + z_source, z.z21], [z.z21, z.z22 + z_load]],
                 dtype=complex)
    _, i2 = np.linalg.solve(a, np.array([volts, 0.0], dtype=complex))
    p_load = 0.5 * abs(i2) ** 2 * np.real(z_load)
    p_available = volts ** 2 / (8.0 * np.real(z_source))
    return p_load / p_available


# ---------------------------------------------------------------------------
# rho / chi ratios


def test_rho_chi_direct_link():
    tx, rx, _ = canonical_pair(0.5)
    mtr = 4.7071e-11
    z = direct_two_port(tx, rx, mtr, F0)
    rho, chi = rho_chi(z)
    assert rho == 0.0
    assert chi == pytest.approx(OMEGA0 * mtr / math.sqrt(tx.resistance * rx.resistance))


def test_rho_chi_scale_invariance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        z11, z21, z22, rho, chi = random_passive_two_port(rng)
        for scale in (1.0, 1e-3, 1e4):
            got_rho, got_chi = rho_chi_values(scale * z11, scale * z21, scale * z22)
            assert got_rho == pytest.approx(rho, rel=1e-12, abs=1e-15)
            assert got_chi == pytest.approx(chi, rel=1e-12, abs=1e-15)


def test_rho_chi_rejects_nonpassive():
    with pytest.raises(PassivityError):
        rho_chi_values(-1.0 + 0j, 0.1 + 0j, 1.0 + 0j)
    # |rho| > 1 beyond round-off means Re Z is indefinite
    with pytest.raises(PassivityError):
        rho_chi_values(1.0 + 0j, 1.0 + 2e-9 + 0j, 1.0 + 0j)


def test_rho_clip_absorbs_round_off():
    rho, chi = rho_chi_values(1.0 + 0j, 1.0 + 5e-10 + 0j, 1.0 + 0j)
    assert rho == 1.0
    assert chi == 0.0
    assert power_gain(rho, chi) == 1.0


# ---------------------------------------------------------------------------
# Power gain formula


def test_power_gain_limits():
    assert power_gain(1.0, 0.0) == pytest.approx(1.0)
    assert power_gain(-1.0, 0.0) == pytest.approx(1.0)
    assert power_gain(0.0, 0.0) == 0.0
    with pytest.raises(ConfigError):
        power_gain(1.5, 0.0)


def test_power_gain_small_chi_expansion():
    # for a weak purely reactive link, eta ~ chi^2 / 4
    for chi in (1e-5, 1e-4, 1e-3):
        assert power_gain(0.0, chi) == pytest.approx(chi * chi / 4.0, rel=1e-5)


def test_power_gain_monotone_and_bounded():
    chis = np.logspace(-4, 3, 40)
    etas = [power_gain(0.0, c) for c in chis]
    assert all(b > a for a, b in zip(etas, etas[1:]))
    assert all(0.0 < e < 1.0 for e in etas)
    rhos = np.linspace(0.0, 0.999, 40)
    etas_r = [power_gain(r, 0.0) for r in rhos]
    assert all(b > a for a, b in zip(etas_r[1:], etas_r[2:]))
    assert power_gain(0.0, 100.0) > 0.98


def test_power_gain_direct_link_form():
    # Q of the reference coil at the design frequency
    q = OMEGA0 * 3.7e-6 / 1.0
    assert q == pytest.approx(315.25, rel=1e-3)
    for k in (1e-5, 1e-3, 0.05):
        assert power_gain_direct(k, q, q) == power_gain(0.0, k * q)
    with pytest.raises(ConfigError):
        power_gain_direct(1.2, q, q)
    with pytest.raises(ConfigError):
        power_gain_direct(0.1, -1.0, q)


# ---------------------------------------------------------------------------
# Matched terminations


def test_matched_terminations_decoupled_ports():
    z = _two_port(2.0 + 3.0j, 0.0, 5.0 - 1.0j)
    z_in, z_out = matched_terminations(z)
    assert z_in == pytest.approx(z.z11)
    assert z_out == pytest.approx(z.z22)


def test_matched_terminations_unit_chi():
    z = _two_port(1.0, 1.0j, 1.0)  # rho = 0, chi = 1
    z_in, _ = matched_terminations(z)
    assert z_in.real == pytest.approx(math.sqrt(2.0))


def test_matched_terminations_fixed_point():
    rng = np.random.default_rng(17)
    for _ in range(200):
        z11, z21, z22, _, _ = random_passive_two_port(rng)
        z = _two_port(z11, z21, z22)
        z_in, z_out = matched_terminations(z)
        assert z_in.real >= 0.0
        assert z_out.real >= 0.0
        lhs_in = z.z11 - z.z21 ** 2 / (z.z22 + np.conj(z_out))
        lhs_out = z.z22 - z.z21 ** 2 / (z.z11 + np.conj(z_in))
        assert lhs_in == pytest.approx(z_in, rel=1e-9, abs=1e-12 * abs(z_in))
        assert lhs_out == pytest.approx(z_out, rel=1e-9, abs=1e-12 * abs(z_out))


def test_matched_terminations_are_optimal():
    """Detuning either termination by 1% never helps the transducer gain."""
    rng = np.random.default_rng(23)
    for _ in range(100):
        z11, z21, z22, _, _ = random_passive_two_port(rng)
        z = _two_port(z11, z21, z22)
        report = gain_report(z)
        z_s = np.conj(report.z_in)
        z_l = np.conj(report.z_out)
        matched = _transducer_gain(z, z_s, z_l)
        assert matched == pytest.approx(report.eta, rel=1e-9)
        for ds in (0.99, 1.0, 1.01):
            for dl in (0.99, 1.0, 1.01):
                for rotate in (1.0, 1.0 + 0.01j):
                    got = _transducer_gain(z, z_s * ds * rotate, z_l * dl)
                    assert got <= matched * (1.0 + 1e-9)


# ---------------------------------------------------------------------------
# Channel coefficient and scattering


def test_channel_coefficient_magnitude_is_gain():
    rng = np.random.default_rng(5)
    for _ in range(300):
        z11, z21, z22, rho, chi = random_passive_two_port(rng)
        z = _two_port(z11, z21, z22)
        h = channel_coefficient(z)
        assert abs(h) ** 2 == pytest.approx(power_gain(*rho_chi(z)), rel=1e-11)


def test_channel_coefficient_limits():
    assert channel_coefficient(_two_port(1.0, 0.0, 1.0)) == 0.0
    # rho -> 1 is the lossless fully-coupled limit: h -> 1
    h = channel_coefficient(_two_port(1.0, 1.0 - 1e-12, 1.0))
    assert h == pytest.approx(1.0, abs=1e-5)


def test_scattering_matches_channel_coefficient():
    rng = np.random.default_rng(29)
    for _ in range(300):
        z11, z21, z22, _, _ = random_passive_two_port(rng)
        z = _two_port(z11, z21, z22)
        assert scattering_s21(z) == pytest.approx(channel_coefficient(z), rel=1e-9,
                                                  abs=1e-14)


def test_gain_report_is_consistent():
    z = _two_port(2.0 + 10.0j, 0.5 + 3.0j, 4.0 - 2.0j)
    report = gain_report(z)
    rho, chi = rho_chi(z)
    assert (report.rho, report.chi) == (rho, chi)
    assert report.eta == power_gain(rho, chi)
    assert report.h == channel_coefficient(z)
    assert report.frequency == F0
    assert abs(report.h) ** 2 == pytest.approx(report.eta, rel=1e-12)
