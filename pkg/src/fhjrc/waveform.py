"""Frequency-hopping pulse synthesis and energy/PAPR metrics.

A pulse is a concatenation of constant-frequency sub-pulses.  Sub-pulse n
plays the complex exponential at ``freq_indices[n] * f_f`` Hz for
``dur_set[dur_indices[n] - 1]`` seconds (rounded to whole samples).  The
amplitude is chosen per pulse so the total energy is fixed regardless of
which durations the codeword selected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np


class InvalidSymbolError(ValueError):
    """Symbol indices are out of range or violate the hop constraint."""


class WindowOverflowError(ValueError):
    """Pulse does not fit inside the capture window."""


class UndefinedPaprError(ValueError):
    """PAPR requested for an all-zero window."""


DEFAULT_N_S = 2048
DEFAULT_SAMPLE_RATE = 1.0


def default_duration_set(sample_rate: float = DEFAULT_SAMPLE_RATE,
                         n_s: int = DEFAULT_N_S) -> Tuple[float, ...]:
    """Sub-pulse duration selection set (1, 1.5, 2, 2.5, 3) duration units.

    One unit is n_s/25 samples, so the longest codeword (five sub-pulses of
    3 units) still fits a 2048-sample capture window with room for a random
    start offset.
    """
    unit = n_s / 25.0 / sample_rate
    return tuple(m * unit for m in (1.0, 1.5, 2.0, 2.5, 3.0))


@dataclass(frozen=True)
class PulseSymbol:
    """One codeword: per-sub-pulse frequency and duration selections.

    freq_indices are 1-based multiples of the fundamental frequency;
    dur_indices are 1-based positions into the duration selection set.
    """
    freq_indices: Tuple[int, ...]
    dur_indices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "freq_indices", tuple(int(v) for v in self.freq_indices))
        object.__setattr__(self, "dur_indices", tuple(int(v) for v in self.dur_indices))
        if len(self.freq_indices) != len(self.dur_indices):
            raise InvalidSymbolError("frequency and duration sequences differ in length")
        for a, b in zip(self.freq_indices, self.freq_indices[1:]):
            if a == b:
                raise InvalidSymbolError("adjacent sub-pulses must hop to a different frequency")

    @property
    def n_f(self) -> int:
        return len(self.freq_indices)


@dataclass(frozen=True)
class SampleBuffer:
    """Complex baseband samples at a fixed sampling rate."""
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if samples.size and not np.all(np.isfinite(samples.view(np.float64))):
            raise ValueError("samples must be finite")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class WaveformConfig:
    """Pulse-synthesis parameters (defaults follow the simulation setup)."""
    n_f: int = 5
    sample_rate: float = DEFAULT_SAMPLE_RATE
    f_f: float = DEFAULT_SAMPLE_RATE / 16.0
    dur_set: Tuple[float, ...] = field(default_factory=default_duration_set)
    n_s: int = DEFAULT_N_S
    pulse_energy: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "dur_set", tuple(float(d) for d in self.dur_set))
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if not self.f_f * self.n_f < self.sample_rate / 2.0:
            raise ValueError("highest hop frequency must stay below sample_rate/2")
        if any(d <= 0 for d in self.dur_set):
            raise ValueError("durations must be positive")
        if any(b <= a for a, b in zip(self.dur_set, self.dur_set[1:])):
            raise ValueError("dur_set must be strictly increasing")
        if self.n_f * self.segment_samples(len(self.dur_set)) > self.n_s:
            raise ValueError("longest pulse exceeds the capture window")
        if not self.pulse_energy > 0:
            raise ValueError("pulse_energy must be positive")

    @property
    def n_t(self) -> int:
        return len(self.dur_set)

    def segment_samples(self, dur_index: int) -> int:
        """Whole-sample length of one sub-pulse (round half up)."""
        return int(np.floor(self.dur_set[dur_index - 1] * self.sample_rate + 0.5))

    def total_samples(self, symbol: PulseSymbol) -> int:
        return sum(self.segment_samples(d) for d in symbol.dur_indices)


def validate_symbol(symbol: PulseSymbol, cfg: WaveformConfig) -> None:
    if symbol.n_f != cfg.n_f:
        raise InvalidSymbolError(f"symbol has {symbol.n_f} sub-pulses, expected {cfg.n_f}")
    for f in symbol.freq_indices:
        if not 1 <= f <= cfg.n_f:
            raise InvalidSymbolError(f"frequency index {f} outside 1..{cfg.n_f}")
    for d in symbol.dur_indices:
        if not 1 <= d <= cfg.n_t:
            raise InvalidSymbolError(f"duration index {d} outside 1..{cfg.n_t}")


def synthesize_pulse(symbol: PulseSymbol, cfg: WaveformConfig) -> SampleBuffer:
    """Concatenate the sub-pulse exponentials and normalize total energy.

    Each sub-pulse restarts at phase 0.  Amplitude is sqrt(E_p / N_p) so
    that sum |s[k]|^2 equals cfg.pulse_energy whatever durations the
    codeword selected.
    """
    validate_symbol(symbol, cfg)
    seg_lens = [cfg.segment_samples(d) for d in symbol.dur_indices]
    n_p = sum(seg_lens)
    if n_p > cfg.n_s:
        raise WindowOverflowError(f"pulse of {n_p} samples exceeds window of {cfg.n_s}")
    amp = np.sqrt(cfg.pulse_energy / n_p)
    segments = []
    for f_idx, seg_len in zip(symbol.freq_indices, seg_lens):
        freq = f_idx * cfg.f_f
        k = np.arange(seg_len)
        segments.append(amp * np.exp(2j * np.pi * freq * k / cfg.sample_rate))
    return SampleBuffer(np.concatenate(segments), cfg.sample_rate)


def place_in_window(pulse: SampleBuffer, start: int, cfg: WaveformConfig) -> SampleBuffer:
    """Zero-pad the pulse into an n_s-sample capture window at `start`."""
    if start < 0 or start + len(pulse) > cfg.n_s:
        raise WindowOverflowError(
            f"pulse of {len(pulse)} samples does not fit at start={start} in window of {cfg.n_s}")
    window = np.zeros(cfg.n_s, dtype=np.complex128)
    window[start:start + len(pulse)] = pulse.samples
    return SampleBuffer(window, pulse.sample_rate)


def compute_papr(window: SampleBuffer, pri_samples: int) -> float:
    """Peak-to-average power ratio in dB over one pulse repetition interval.

    The average includes the silent part of the PRI, so packing a fixed
    pulse energy into a shorter pulse raises the result.
    """
    if not len(window) > 0:
        raise UndefinedPaprError("empty window")
    if pri_samples < len(window):
        raise ValueError("pri_samples must cover the window")
    power = np.abs(window.samples) ** 2
    peak = float(power.max())
    if peak == 0.0:
        raise UndefinedPaprError("all-zero window has no defined PAPR")
    mean = float(power.sum()) / pri_samples
    return 10.0 * np.log10(peak / mean)


def instantaneous_frequency(buf: SampleBuffer) -> np.ndarray:
    """Per-sample frequency from adjacent-sample phase differences, Hz."""
    phase_step = np.angle(buf.samples[1:] * np.conj(buf.samples[:-1]))
    return phase_step * buf.sample_rate / (2.0 * np.pi)
