"""AWGN, Doppler, and noise-level conversions, deterministic under seeding."""

from __future__ import annotations

import numpy as np

from .waveform import SampleBuffer


def derive_seed(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    """Per-trial seed so parallel and serial sweeps agree sample-for-sample."""
    return np.random.SeedSequence(entropy=abs(int(master_seed)),
                                  spawn_key=(abs(int(trial_index)),))


def apply_awgn(x: SampleBuffer, noise_var: float, seed) -> SampleBuffer:
    """Add circular complex Gaussian noise with total variance noise_var.

    Each real component gets variance noise_var/2 so E|w|^2 = noise_var.
    """
    if noise_var < 0:
        raise ValueError("noise variance must be nonnegative")
    if noise_var == 0:
        return x
    rng = np.random.default_rng(seed)
    scale = np.sqrt(noise_var / 2.0)
    noise = rng.normal(0.0, scale, len(x)) + 1j * rng.normal(0.0, scale, len(x))
    return SampleBuffer(x.samples + noise, x.sample_rate)


def real_awgn(length: int, noise_var: float, seed) -> np.ndarray:
    """Real Gaussian noise at variance noise_var (sensing-trial convention)."""
    if noise_var < 0:
        raise ValueError("noise variance must be nonnegative")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, np.sqrt(noise_var), length)


def apply_doppler(x: SampleBuffer, doppler_hz: float) -> SampleBuffer:
    """Multiply by a unit-modulus rotating phasor; magnitudes are untouched."""
    if abs(doppler_hz) >= x.sample_rate / 2.0:
        raise ValueError("doppler must satisfy |d| < sample_rate/2")
    if doppler_hz == 0.0:
        return x
    k = np.arange(len(x))
    return SampleBuffer(x.samples * np.exp(2j * np.pi * doppler_hz * k / x.sample_rate),
                        x.sample_rate)


def snr_to_noise_var(snr_db: float, signal_power: float) -> float:
    """Noise variance for a target in-pulse SNR (signal_power = A^2)."""
    if not signal_power > 0:
        raise ValueError("signal power must be positive")
    return signal_power / 10.0 ** (snr_db / 10.0)


def enr_to_noise_var(enr_db: float, pulse_energy: float) -> float:
    """Noise variance for a target energy-to-noise ratio in dB."""
    if not pulse_energy > 0:
        raise ValueError("pulse energy must be positive")
    return pulse_energy / 10.0 ** (enr_db / 10.0)


def noise_var_to_enr(noise_var: float, pulse_energy: float) -> float:
    if not (noise_var > 0 and pulse_energy > 0):
        raise ValueError("noise variance and pulse energy must be positive")
    return 10.0 * np.log10(pulse_energy / noise_var)
