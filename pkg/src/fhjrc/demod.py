"""Box-geometry demodulation: image -> (frequencies, durations) -> bits.

The receiver never sees channel state: it maps detector boxes to sub-pulse
frequency/duration estimates, removes any common vertical (Doppler) offset
against the fundamental-frequency grid, and quantizes onto the codebook.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .codebook import Codebook
from .detector import (BoundingBox, ClassicalDetectorParams, DetectionErasureError,
                       detect_classical)
from .tfa import CwdConfig, TimeFrequencyImage, cwd, resize_nearest
from .waveform import PulseSymbol, SampleBuffer, WaveformConfig

DEFAULT_IMAGE_SIZE = 500


@dataclass(frozen=True)
class DemodResult:
    """Outcome of one window; erasures carry None in symbol and bits."""
    f_hat: Optional[Tuple[float, ...]]
    t_hat: Optional[Tuple[float, ...]]
    symbol: Optional[PulseSymbol]
    bits: Optional[str]

    @property
    def is_erasure(self) -> bool:
        return self.symbol is None


ERASURE = DemodResult(None, None, None, None)


def boxes_to_params(boxes: Sequence[BoundingBox], l: int, n_s: int,
                    f_s: float) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """Per-box frequency (from the vertical center) and duration (from width)."""
    f_hat = tuple(f_s * (b.y_min + b.y_max) / (4.0 * l) for b in boxes)
    t_hat = tuple(n_s * (b.x_max - b.x_min) / (l * f_s) for b in boxes)
    return f_hat, t_hat


def estimate_common_offset(f_hat: Sequence[float], f_f: float, n_f: int,
                           resolution: int = 200) -> float:
    """Common vertical shift of all lines relative to the f_f grid.

    Grid search over [-f_f/2, f_f/2]; the winning shift is subtracted before
    quantization so a Doppler offset moves every estimate back on-grid.
    """
    if len(f_hat) < 2:
        return 0.0
    f_hat = np.asarray(f_hat, dtype=np.float64)
    deltas = np.linspace(-f_f / 2.0, f_f / 2.0, resolution + 1)
    best_delta, best_cost = 0.0, np.inf
    for delta in deltas:
        shifted = f_hat - delta
        grid = np.clip(np.round(shifted / f_f), 1, n_f) * f_f
        cost = float(np.abs(shifted - grid).sum())
        if cost < best_cost - 1e-12:
            best_cost, best_delta = cost, float(delta)
    return best_delta


def demodulate(window: SampleBuffer, book: Codebook, wf_cfg: WaveformConfig,
               cwd_cfg: CwdConfig = CwdConfig(), l: int = DEFAULT_IMAGE_SIZE,
               detector: Optional[Callable[[TimeFrequencyImage, int], List[BoundingBox]]] = None,
               detector_params: ClassicalDetectorParams = ClassicalDetectorParams(),
               ) -> DemodResult:
    """Full receive pipeline for one capture window.

    cwd -> resize -> detect -> box geometry -> offset correction -> nearest
    codeword -> bits.  Every structural failure (wrong box count, silent
    image, unaddressable codeword) collapses to an erasure, which scoring
    counts as a symbol error.
    """
    img = resize_nearest(cwd(window, cwd_cfg), l)
    if detector is None:
        detector = lambda image, count: detect_classical(image, count, detector_params,
                                                         label=book.scheme)
    try:
        boxes = detector(img, book.n_f)
    except DetectionErasureError:
        return ERASURE
    if len(boxes) != book.n_f:
        return ERASURE
    boxes = sorted(boxes, key=lambda b: b.x_min)
    f_hat, t_hat = boxes_to_params(boxes, l, len(window), window.sample_rate)
    delta = estimate_common_offset(f_hat, wf_cfg.f_f, wf_cfg.n_f)
    f_corr = tuple(f - delta for f in f_hat)
    symbol = book.nearest_codeword(f_corr, t_hat, wf_cfg.f_f, wf_cfg.dur_set)
    try:
        bits = book.decode(symbol)
    except Exception:
        return DemodResult(f_corr, t_hat, symbol, None)
    return DemodResult(f_corr, t_hat, symbol, bits)


def compute_ser(truth: Sequence[PulseSymbol], decoded: Sequence[DemodResult]) -> float:
    """Fraction of wrongly decoded pulses; erasures count as errors."""
    if len(truth) != len(decoded):
        raise ValueError("truth and decoded lists differ in length")
    if not truth:
        raise ValueError("at least one symbol required")
    errors = sum(
        1 for t, d in zip(truth, decoded)
        if d.is_erasure or d.symbol != t)
    return errors / len(truth)
