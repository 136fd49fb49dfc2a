"""Choi-Williams time-frequency images of capture windows.

The distribution is evaluated on the bilinear product r[k+mu+tau]r*[k+mu-tau]
with an exponential kernel in (tau, mu), a symmetric lag window W_N (Hamming)
and a rectangular smoothing window W_M.  Because the product advances the
phase at twice the signal frequency, frequency bin n of the N-point lag DFT
maps to n * f_s / (2N): N rows span [0, f_s/2).

Rows are stored bottom-origin (row 0 = 0 Hz).  File export flips to the
usual top-origin raster order.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .waveform import SampleBuffer


@dataclass(frozen=True)
class CwdConfig:
    """Kernel and sampling parameters of the distribution.

    Defaults (N=512, M=64, stride=4) keep a full SER sweep tractable; a
    higher-resolution profile (N=2048, stride=1) is just another config.
    """
    lag_window_n: int = 512
    smooth_window_m: int = 64
    sigma: float = 1.0
    time_stride: int = 4

    def __post_init__(self):
        for name in ("lag_window_n", "smooth_window_m"):
            v = getattr(self, name)
            if v < 2 or v & (v - 1):
                raise ValueError(f"{name} must be a power of 2, got {v}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.time_stride < 1:
            raise ValueError("time_stride must be >= 1")

    @property
    def freq_bins(self) -> int:
        return self.lag_window_n


@dataclass(frozen=True)
class TimeFrequencyImage:
    """Nonnegative magnitude image, globally normalized to [0, 1].

    Row r corresponds to frequency r * freq_span / rows (bottom origin);
    column c to time c * window_len / cols samples.
    """
    pixels: np.ndarray
    window_len: int
    freq_span: float
    silent: bool = False

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        object.__setattr__(self, "pixels", pixels)
        if pixels.ndim != 2:
            raise ValueError("pixels must be a 2-D matrix")
        if pixels.size and (pixels.min() < 0.0 or pixels.max() > 1.0):
            raise ValueError("pixels must lie in [0, 1]")

    @property
    def rows(self) -> int:
        return self.pixels.shape[0]

    @property
    def cols(self) -> int:
        return self.pixels.shape[1]

    def row_of_frequency(self, freq_hz: float) -> float:
        return freq_hz * self.rows / self.freq_span

    def frequency_of_row(self, row: float) -> float:
        return row * self.freq_span / self.rows


def _lag_window(n: int) -> np.ndarray:
    """Symmetric Hamming window over tau = -N/2 .. N/2 (length N+1)."""
    return np.hamming(n + 1)


def _cwd_kernel(tau: int, mu: np.ndarray, sigma: float) -> np.ndarray:
    """Exponential kernel in (tau, mu); tau != 0."""
    spread = 4.0 * tau * tau / sigma
    return np.exp(-(mu.astype(np.float64) ** 2) / spread) / np.sqrt(np.pi * spread)


def cwd(window: SampleBuffer, cfg: CwdConfig = CwdConfig(),
        n_s: Optional[int] = None) -> TimeFrequencyImage:
    """Choi-Williams magnitude image of an n_s-sample capture window.

    Uses conjugate symmetry in tau (the distribution is real before the
    magnitude), evaluates times k = 0, stride, 2*stride, ... and all N
    frequency bins via an FFT over the lag axis.
    """
    r = window.samples
    if n_s is not None and len(r) != n_s:
        raise ValueError(f"window has {len(r)} samples, expected {n_s}")
    n = cfg.lag_window_n
    m = cfg.smooth_window_m
    half_n, half_m = n // 2, m // 2
    n_samp = r.size
    ks = np.arange(0, n_samp, cfg.time_stride)

    pad = half_n + half_m
    rp = np.zeros(n_samp + 2 * pad, dtype=np.complex128)
    rp[pad:pad + n_samp] = r

    mu = np.arange(-half_m, half_m + 1)
    w_n = _lag_window(n)

    # g[k, tau] for tau = 0 .. N/2; negative lags follow by conjugation
    g = np.empty((ks.size, half_n + 1), dtype=np.complex128)
    # tau = 0: the kernel degenerates to a unit impulse at mu = 0
    g[:, 0] = (rp[pad + ks] * np.conj(rp[pad + ks]))
    base = pad - half_m  # offset of mu = -M/2 at k = 0
    for tau in range(1, half_n + 1):
        kern = _cwd_kernel(tau, mu, cfg.sigma)
        u = rp[base + tau:base + tau + n_samp + m] * \
            np.conj(rp[base - tau:base - tau + n_samp + m])
        windows = sliding_window_view(u, m + 1)[ks]
        g[:, tau] = windows @ kern

    spread = np.zeros((ks.size, n), dtype=np.complex128)
    taus = np.arange(0, half_n + 1)
    spread[:, taus] = w_n[half_n + taus] * g
    neg = np.arange(1, half_n + 1)
    spread[:, (-neg) % n] += w_n[half_n - neg] * np.conj(g[:, neg])

    cw = 2.0 * np.real(np.fft.fft(spread, axis=1))
    mag = np.abs(cw).T  # rows = frequency bins, cols = time
    peak = mag.max() if mag.size else 0.0
    if peak > 0.0:
        return TimeFrequencyImage(mag / peak, n_samp, window.sample_rate / 2.0)
    return TimeFrequencyImage(mag, n_samp, window.sample_rate / 2.0, silent=True)


def cwd_brute_force(window: SampleBuffer, cfg: CwdConfig) -> TimeFrequencyImage:
    """Literal double-sum evaluation; oracle for the optimized path."""
    r = window.samples
    n = cfg.lag_window_n
    m = cfg.smooth_window_m
    half_n, half_m = n // 2, m // 2
    n_samp = r.size
    w_n = _lag_window(n)

    def at(idx: int) -> complex:
        return r[idx] if 0 <= idx < n_samp else 0.0

    ks = range(0, n_samp, cfg.time_stride)
    cw = np.zeros((n, len(ks)))
    for col, k in enumerate(ks):
        for bin_n in range(n):
            acc = 0.0 + 0.0j
            for tau in range(-half_n, half_n + 1):
                if tau == 0:
                    inner = at(k) * np.conj(at(k))
                else:
                    inner = 0.0 + 0.0j
                    spread = 4.0 * tau * tau / cfg.sigma
                    for mu in range(-half_m, half_m + 1):
                        kern = np.exp(-mu * mu / spread) / np.sqrt(np.pi * spread)
                        inner += kern * at(k + mu + tau) * np.conj(at(k + mu - tau))
                acc += w_n[half_n + tau] * np.exp(-2j * np.pi * bin_n * tau / n) * inner
            cw[bin_n, col] = 2.0 * acc.real
    mag = np.abs(cw)
    peak = mag.max()
    if peak > 0.0:
        return TimeFrequencyImage(mag / peak, n_samp, window.sample_rate / 2.0)
    return TimeFrequencyImage(mag, n_samp, window.sample_rate / 2.0, silent=True)


def resize_nearest(img: TimeFrequencyImage, l: int) -> TimeFrequencyImage:
    """Nearest-neighbor resize to l x l; pixel values are copied, not blended."""
    if l < 2:
        raise ValueError("target size must be at least 2")
    rows = (np.arange(l) * img.rows) // l
    cols = (np.arange(l) * img.cols) // l
    return TimeFrequencyImage(img.pixels[np.ix_(rows, cols)], img.window_len,
                              img.freq_span, silent=img.silent)


def to_grayscale_bytes(img: TimeFrequencyImage) -> np.ndarray:
    """8-bit top-origin raster (row 0 = highest frequency)."""
    return np.round(255.0 * img.pixels[::-1, :]).astype(np.uint8)


def write_pgm(img: TimeFrequencyImage, path: str) -> None:
    """Binary P5 portable graymap."""
    data = to_grayscale_bytes(img)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_png(img: TimeFrequencyImage, path: str) -> None:
    """Lossless 8-bit grayscale PNG."""
    from PIL import Image

    Image.fromarray(to_grayscale_bytes(img), mode="L").save(path, format="PNG")


def read_gray_image(path: str) -> np.ndarray:
    """Load a P5 or PNG grayscale file as a top-origin uint8 array."""
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"P5":
        with open(path, "rb") as fh:
            assert fh.readline().strip() == b"P5"
            line = fh.readline()
            while line.startswith(b"#"):
                line = fh.readline()
            w, h = (int(v) for v in line.split())
            maxval = int(fh.readline())
            data = np.frombuffer(fh.read(w * h), dtype=np.uint8)
        if maxval != 255:
            raise ValueError("only 8-bit graymaps are supported")
        return data.reshape(h, w)
    from PIL import Image

    return np.asarray(Image.open(path).convert("L"))
