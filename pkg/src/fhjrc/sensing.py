"""Matched-filter detection at the transceiver.

The closed-form threshold and detection probability follow the real
replica-correlator: trials correlate the real part of the synthesized pulse
against itself plus real Gaussian noise of variance sigma_w^2, and the pulse
energy entering the threshold is the energy of that real projection.  With
this convention the Monte Carlo estimate matches
P_D = Q[Q^{-1}(P_FA) - sqrt(ENR)] exactly, for any codeword of fixed energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .channel import derive_seed
from .waveform import SampleBuffer


def q_function(x: float) -> float:
    """Standard Gaussian right-tail probability."""
    return float(norm.sf(x))


def q_inverse(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("q_inverse requires 0 < p < 1")
    return float(norm.isf(p))


def threshold(p_fa: float, noise_var: float, pulse_energy: float) -> float:
    """Neyman-Pearson correlator threshold for a target false-alarm rate."""
    if not (noise_var > 0 and pulse_energy > 0):
        raise ValueError("noise variance and pulse energy must be positive")
    return float(np.sqrt(noise_var * pulse_energy)) * q_inverse(p_fa)


def matched_filter_statistic(r: np.ndarray, s: np.ndarray) -> float:
    """Real correlator sum Re(r[k]) * Re(s[k])."""
    r = np.asarray(r)
    s = np.asarray(s)
    if r.shape != s.shape:
        raise ValueError("received and replica buffers must have equal length")
    return float(np.sum(np.real(r) * np.real(s)))


def theoretical_pd(p_fa: float, enr_db: float) -> float:
    """Closed-form detection probability; waveform enters only through ENR."""
    return q_function(q_inverse(p_fa) - np.sqrt(10.0 ** (enr_db / 10.0)))


@dataclass(frozen=True)
class DetectionSetup:
    """One detection operating point: reference pulse plus noise statistics."""
    p_fa: float
    noise_var: float
    pulse: SampleBuffer

    def __post_init__(self):
        if not 0.0 < self.p_fa < 1.0:
            raise ValueError("p_fa must lie in (0, 1)")
        if not self.real_energy > 0:
            raise ValueError("pulse must have positive real-projection energy")

    @property
    def real_energy(self) -> float:
        return float(np.sum(np.real(self.pulse.samples) ** 2))

    @property
    def enr_db(self) -> float:
        return 10.0 * np.log10(self.real_energy / self.noise_var)

    @property
    def gamma(self) -> float:
        return threshold(self.p_fa, self.noise_var, self.real_energy)


def monte_carlo_pd(setup: DetectionSetup, trials: int, seed: int) -> float:
    """Fraction of signal-present trials whose correlator exceeds the threshold."""
    if trials < 1:
        raise ValueError("at least one trial required")
    s_real = np.real(setup.pulse.samples)
    gamma = setup.gamma
    sigma = np.sqrt(setup.noise_var)
    hits = 0
    for trial in range(trials):
        rng = np.random.default_rng(derive_seed(seed, trial))
        r = s_real + rng.normal(0.0, sigma, s_real.size)
        if float(r @ s_real) > gamma:
            hits += 1
    return hits / trials


def monte_carlo_pfa(setup: DetectionSetup, trials: int, seed: int) -> float:
    """Empirical exceedance rate with no signal present (threshold check)."""
    if trials < 1:
        raise ValueError("at least one trial required")
    s_real = np.real(setup.pulse.samples)
    gamma = setup.gamma
    sigma = np.sqrt(setup.noise_var)
    hits = 0
    for trial in range(trials):
        rng = np.random.default_rng(derive_seed(seed, trial))
        r = rng.normal(0.0, sigma, s_real.size)
        if float(r @ s_real) > gamma:
            hits += 1
    return hits / trials
