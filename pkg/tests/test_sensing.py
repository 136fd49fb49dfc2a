"""Replica-correlator detection: threshold, closed form, Monte Carlo."""

import numpy as np
import pytest
from scipy.stats import norm

from fhjrc import channel, sensing
from fhjrc.waveform import PulseSymbol, WaveformConfig, synthesize_pulse

CFG = WaveformConfig()


def _setup(p_fa=0.1, enr_db=10.0, durs=(3, 3, 3, 3, 3)):
    pulse = synthesize_pulse(PulseSymbol((2, 4, 1, 5, 3), durs), CFG)
    energy = float(np.sum(np.real(pulse.samples) ** 2))
    return sensing.DetectionSetup(
        p_fa=p_fa, noise_var=channel.enr_to_noise_var(enr_db, energy), pulse=pulse)


def test_q_function_inverts():
    for p in (0.9, 0.5, 0.1, 0.01, 1e-4):
        assert sensing.q_function(sensing.q_inverse(p)) == pytest.approx(p, rel=1e-12)


def test_q_function_matches_gaussian_tail():
    assert sensing.q_function(0.0) == pytest.approx(0.5)
    assert sensing.q_function(1.0) == pytest.approx(norm.sf(1.0), rel=1e-12)


def test_threshold_scales_with_energy_and_noise():
    # gamma = sqrt(noise_var * energy) * Qinv(p_fa)
    gamma = sensing.threshold(0.1, 2.0, 8.0)
    assert gamma == pytest.approx(np.sqrt(16.0) * sensing.q_inverse(0.1), rel=1e-12)


def test_theoretical_pd_reference_point():
    # closed form at p_fa = 0.1, ENR = 10 dB
    assert sensing.theoretical_pd(0.1, 10.0) == pytest.approx(0.9700, abs=5e-4)


def test_theoretical_pd_monotone_in_enr():
    pds = [sensing.theoretical_pd(0.01, e) for e in np.linspace(-5, 20, 26)]
    assert all(b >= a for a, b in zip(pds, pds[1:]))


def test_theoretical_pd_exceeds_p_fa():
    for p_fa in (0.1, 0.01):
        assert sensing.theoretical_pd(p_fa, -60.0) == pytest.approx(p_fa, abs=1e-3)
        assert sensing.theoretical_pd(p_fa, 5.0) > p_fa


def test_matched_filter_statistic_is_real_projection():
    pulse = synthesize_pulse(PulseSymbol((1, 3, 2, 5, 4), (2, 2, 2, 2, 2)), CFG)
    s = np.real(pulse.samples)
    r = s + 0.1
    assert sensing.matched_filter_statistic(r, pulse.samples) == \
        pytest.approx(float(r @ s))


def test_monte_carlo_pd_matches_theory():
    setup = _setup(p_fa=0.1, enr_db=10.0)
    pd = sensing.monte_carlo_pd(setup, 4000, seed=11)
    assert pd == pytest.approx(sensing.theoretical_pd(0.1, setup.enr_db), abs=0.025)


def test_monte_carlo_pfa_matches_target():
    setup = _setup(p_fa=0.1, enr_db=10.0)
    assert sensing.monte_carlo_pfa(setup, 4000, seed=12) == pytest.approx(0.1, abs=0.02)


def test_monte_carlo_is_deterministic():
    setup = _setup()
    assert sensing.monte_carlo_pd(setup, 500, seed=3) == \
        sensing.monte_carlo_pd(setup, 500, seed=3)


def test_detection_setup_validates():
    pulse = synthesize_pulse(PulseSymbol((1, 2, 3, 4, 5), (1, 1, 1, 1, 1)), CFG)
    with pytest.raises(ValueError):
        sensing.DetectionSetup(p_fa=0.0, noise_var=1.0, pulse=pulse)


def test_pd_independent_of_duration_pattern():
    # equal-energy pulses give (nearly) the same operating point whatever
    # durations the codeword selected
    a = _setup(durs=(1, 1, 1, 1, 1))
    b = _setup(durs=(5, 5, 5, 5, 5))
    pda = sensing.monte_carlo_pd(a, 3000, seed=21)
    pdb = sensing.monte_carlo_pd(b, 3000, seed=22)
    assert abs(pda - pdb) <= 0.03
