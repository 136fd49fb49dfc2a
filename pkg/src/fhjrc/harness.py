"""Reproducible experiment runners behind the command-line interface.

Every runner is a pure function of (config, seed): per-trial seeds are
derived from the master seed and the trial index, so outputs are
byte-identical across runs and across serial/parallel execution orders.
"""

from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import channel, sensing
from .codebook import Codebook, COSTAS_SEARCH_BOUND
from .demod import DEFAULT_IMAGE_SIZE, DemodResult, compute_ser, demodulate
from .detector import ClassicalDetectorParams, ground_truth_boxes
from .tfa import CwdConfig, cwd, resize_nearest, write_pgm, write_png
from .waveform import PulseSymbol, WaveformConfig, place_in_window, synthesize_pulse

DEFAULT_SNR_GRID_DB = tuple(range(-10, 12, 2))
DATASET_SNR_GRID_DB = tuple(range(-6, 12, 2))


def _format(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """UTF-8, LF-terminated CSV with a header row."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in row])


# ---------------------------------------------------------------------------
# detection-probability sweep

PD_WAVEFORMS = ("random", "costas", "fixed-duration")


def _waveform_symbol(waveform: str, wf_cfg: WaveformConfig, rng: np.random.Generator,
                     books: dict) -> PulseSymbol:
    if waveform == "fixed-duration":
        costas = books["costas"]
        freqs = costas.costas_arrays[int(rng.integers(len(costas.costas_arrays)))]
        mid = (wf_cfg.n_t + 1) // 2
        return PulseSymbol(freqs, (mid,) * wf_cfg.n_f)
    book = books[waveform]
    return book.index_to_symbol(int(rng.integers(book.size)))


def run_pd_sweep(p_fas: Sequence[float] = (0.1, 0.01),
                 enrs_db: Sequence[float] = (5.0, 10.0, 15.0),
                 trials: int = 10_000,
                 seed: int = 0,
                 wf_cfg: WaveformConfig = WaveformConfig(),
                 ) -> List[Tuple[str, float, float, float, float]]:
    """Monte Carlo vs closed-form detection probability per waveform family.

    Rows: (waveform, p_fa, enr_db, pd_sim, pd_theory).
    """
    books = {"random": Codebook("random", wf_cfg.n_f, wf_cfg.n_t),
             "costas": Codebook("costas", wf_cfg.n_f, wf_cfg.n_t)}
    rows = []
    for wi, waveform in enumerate(PD_WAVEFORMS):
        rng = np.random.default_rng(channel.derive_seed(seed, wi))
        symbol = _waveform_symbol(waveform, wf_cfg, rng, books)
        pulse = synthesize_pulse(symbol, wf_cfg)
        real_energy = float(np.sum(np.real(pulse.samples) ** 2))
        for fi, p_fa in enumerate(p_fas):
            for ei, enr_db in enumerate(enrs_db):
                noise_var = channel.enr_to_noise_var(enr_db, real_energy)
                setup = sensing.DetectionSetup(p_fa=p_fa, noise_var=noise_var, pulse=pulse)
                point_seed = ((wi * len(p_fas) + fi) * len(enrs_db) + ei + 1) * 10_000_019 + seed
                pd_sim = sensing.monte_carlo_pd(setup, trials, point_seed)
                rows.append((waveform, p_fa, enr_db, pd_sim,
                             sensing.theoretical_pd(p_fa, enr_db)))
    return rows


PD_HEADER = ("waveform", "p_fa", "enr_db", "pd_sim", "pd_theory")


# ---------------------------------------------------------------------------
# capacity table

CAPACITY_HEADER = ("scheme", "n_f", "n_t", "size", "bits_per_pulse")


def run_capacity_table(grid: Sequence[Tuple[int, int]] = ((5, 5),),
                       ) -> List[Tuple[str, int, int, int, int]]:
    """Codebook sizes and bits/pulse for each (n_f, n_t) grid point."""
    rows = []
    for n_f, n_t in grid:
        for scheme in ("random", "costas"):
            if scheme == "costas" and n_f > COSTAS_SEARCH_BOUND:
                warnings.warn(f"skipping costas row: order {n_f} above search bound")
                continue
            book = Codebook(scheme, n_f, n_t)
            rows.append((scheme, n_f, n_t, book.size, book.bits_per_pulse))
    return rows


# ---------------------------------------------------------------------------
# symbol-error-rate sweep

SER_HEADER = ("scheme", "snr_db", "ser", "erasure_rate", "n_symbols")


def _random_payload(book: Codebook, rng: np.random.Generator) -> str:
    return "".join(str(b) for b in rng.integers(0, 2, book.bits_per_pulse))


def run_one_symbol(book: Codebook, wf_cfg: WaveformConfig, cwd_cfg: CwdConfig,
                   l: int, snr_db: Optional[float], doppler_hz: float,
                   trial_seed, detector=None,
                   detector_params: ClassicalDetectorParams = ClassicalDetectorParams(),
                   ) -> Tuple[PulseSymbol, DemodResult]:
    """Encode, transmit, and demodulate one random payload."""
    rng = np.random.default_rng(trial_seed)
    bits = _random_payload(book, rng)
    symbol = book.encode(bits)
    pulse = synthesize_pulse(symbol, wf_cfg)
    start = int(rng.integers(0, wf_cfg.n_s - len(pulse) + 1))
    window = place_in_window(pulse, start, wf_cfg)
    if doppler_hz:
        window = channel.apply_doppler(window, doppler_hz)
    if snr_db is not None:
        a_sq = wf_cfg.pulse_energy / len(pulse)
        noise_var = channel.snr_to_noise_var(snr_db, a_sq)
        window = channel.apply_awgn(window, noise_var, rng)
    result = demodulate(window, book, wf_cfg, cwd_cfg, l, detector, detector_params)
    return symbol, result


def run_ser_sweep(schemes: Sequence[str] = ("random", "costas"),
                  snrs_db: Sequence[Optional[float]] = DEFAULT_SNR_GRID_DB,
                  symbols_per_point: int = 300,
                  seed: int = 0,
                  doppler_hz: float = 0.0,
                  wf_cfg: WaveformConfig = WaveformConfig(),
                  cwd_cfg: CwdConfig = CwdConfig(),
                  l: int = DEFAULT_IMAGE_SIZE,
                  detector=None,
                  detector_params: ClassicalDetectorParams = ClassicalDetectorParams(),
                  ) -> List[Tuple[str, object, float, float, int]]:
    """End-to-end SER per (scheme, SNR); an SNR of None means noiseless.

    Rows: (scheme, snr_db, ser, erasure_rate, n_symbols).
    """
    rows = []
    for si, scheme in enumerate(schemes):
        book = Codebook(scheme, wf_cfg.n_f, wf_cfg.n_t)
        for pi, snr_db in enumerate(snrs_db):
            truth, decoded = [], []
            for t in range(symbols_per_point):
                trial_seed = channel.derive_seed(seed, (si * len(snrs_db) + pi)
                                                 * symbols_per_point + t)
                symbol, result = run_one_symbol(
                    book, wf_cfg, cwd_cfg, l, snr_db, doppler_hz, trial_seed,
                    detector, detector_params)
                truth.append(symbol)
                decoded.append(result)
            ser = compute_ser(truth, decoded)
            erasures = sum(1 for d in decoded if d.is_erasure) / len(decoded)
            rows.append((scheme, "inf" if snr_db is None else snr_db,
                         ser, erasures, symbols_per_point))
    return rows


# ---------------------------------------------------------------------------
# labeled dataset generation

@dataclass(frozen=True)
class DatasetConfig:
    schemes: Tuple[str, ...] = ("random", "costas")
    snrs_db: Tuple[float, ...] = DATASET_SNR_GRID_DB
    signals_per_scheme: int = 2700
    train_fraction: float = 0.8
    seed: int = 0
    image_format: str = "png"  # "png" | "pgm"
    l: int = DEFAULT_IMAGE_SIZE
    wf_cfg: WaveformConfig = field(default_factory=WaveformConfig)
    cwd_cfg: CwdConfig = field(default_factory=CwdConfig)


def generate_dataset(out_dir: str, cfg: DatasetConfig = DatasetConfig()) -> dict:
    """Write labeled training/validation images for the neural detector.

    Per image a label file holds one line per sub-pulse:
    ``class_id x_center y_center width height`` normalized to [0, 1] with
    top-origin y.  Returns the manifest (also written as manifest.json).
    """
    if cfg.signals_per_scheme % len(cfg.snrs_db):
        raise ValueError("signals_per_scheme must divide evenly over the SNR grid")
    per_snr = cfg.signals_per_scheme // len(cfg.snrs_db)
    n_train = round(per_snr * cfg.train_fraction)
    writer = write_png if cfg.image_format == "png" else write_pgm
    entries = {"train": [], "val": []}
    os.makedirs(out_dir, exist_ok=True)
    for split in ("train", "val"):
        for sub in ("images", "labels"):
            os.makedirs(os.path.join(out_dir, split, sub), exist_ok=True)
    class_ids = {scheme: i for i, scheme in enumerate(cfg.schemes)}
    for si, scheme in enumerate(cfg.schemes):
        book = Codebook(scheme, cfg.wf_cfg.n_f, cfg.wf_cfg.n_t)
        counter = 0
        for pi, snr_db in enumerate(cfg.snrs_db):
            for t in range(per_snr):
                trial_seed = channel.derive_seed(
                    cfg.seed, (si * len(cfg.snrs_db) + pi) * per_snr + t)
                rng = np.random.default_rng(trial_seed)
                symbol = book.encode(_random_payload(book, rng))
                pulse = synthesize_pulse(symbol, cfg.wf_cfg)
                start = int(rng.integers(0, cfg.wf_cfg.n_s - len(pulse) + 1))
                window = place_in_window(pulse, start, cfg.wf_cfg)
                a_sq = cfg.wf_cfg.pulse_energy / len(pulse)
                window = channel.apply_awgn(
                    window, channel.snr_to_noise_var(snr_db, a_sq), rng)
                img = resize_nearest(cwd(window, cfg.cwd_cfg), cfg.l)
                split = "train" if t < n_train else "val"
                stem = f"{scheme}_{counter:05d}"
                img_name = f"{stem}.{cfg.image_format}"
                writer(img, os.path.join(out_dir, split, "images", img_name))
                boxes = ground_truth_boxes(symbol, start, cfg.wf_cfg, cfg.l,
                                           label=scheme)
                with open(os.path.join(out_dir, split, "labels", f"{stem}.txt"),
                          "w", encoding="utf-8", newline="\n") as fh:
                    for box in boxes:
                        xc = (box.x_min + box.x_max) / 2.0 / cfg.l
                        yc = 1.0 - box.y_center / cfg.l  # top-origin
                        w = box.width / cfg.l
                        h = box.height / cfg.l
                        fh.write(f"{class_ids[scheme]} {xc:.6f} {yc:.6f} "
                                 f"{w:.6f} {h:.6f}\n")
                entries[split].append({
                    "image": f"{split}/images/{img_name}",
                    "label": f"{split}/labels/{stem}.txt",
                    "scheme": scheme, "snr_db": snr_db,
                })
                counter += 1
    manifest = {
        "seed": cfg.seed,
        "schemes": list(cfg.schemes),
        "snrs_db": list(cfg.snrs_db),
        "signals_per_scheme": cfg.signals_per_scheme,
        "train_fraction": cfg.train_fraction,
        "image_format": cfg.image_format,
        "image_size": cfg.l,
        "class_ids": class_ids,
        "window_len": cfg.wf_cfg.n_s,
        "counts": {k: len(v) for k, v in entries.items()},
        "entries": entries,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
