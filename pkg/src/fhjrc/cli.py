"""Command-line front end: encode/synthesize/analyze single windows and run
the reproducible sweeps.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 I/O failure,
3 external detector failure.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
import tempfile
from typing import List, Optional, Sequence

import numpy as np

from . import channel, harness
from .codebook import Codebook
from .demod import DEFAULT_IMAGE_SIZE, demodulate
from .detector import (ClassicalDetectorParams, DetectionErasureError,
                       DetectorUnavailableError, detect_classical, external_detect)
from .tfa import (CwdConfig, TimeFrequencyImage, cwd, read_gray_image,
                  resize_nearest, write_pgm, write_png)
from .waveform import SampleBuffer, WaveformConfig, place_in_window, synthesize_pulse

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_DETECTOR = 3


class ConfigError(Exception):
    """Invalid configuration file or flag values."""


def load_config(path: Optional[str]) -> dict:
    """Flat key-value config: one `key = value` per line, # comments."""
    cfg = {}
    if path is None:
        return cfg
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key = value")
            key, value = line.split("=", 1)
            cfg[key.strip()] = value.strip()
    return cfg


def _opt(args, cfg: dict, key: str, default, cast=str):
    """Flag beats config file beats default."""
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    if key in cfg:
        try:
            return cast(cfg[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key}: {exc}") from exc
    return default


def _float_list(text: str) -> List[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _write_text(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _emit_csv(path: Optional[str], header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(harness._format(v) for v in row) for row in rows]
    _write_text(path, "\n".join(lines) + "\n")


def write_samples_csv(path: Optional[str], buf: SampleBuffer) -> None:
    lines = ["index,re,im"]
    lines += [f"{i},{s.real:.12g},{s.imag:.12g}" for i, s in enumerate(buf.samples)]
    _write_text(path, "\n".join(lines) + "\n")


def read_samples_csv(path: str, sample_rate: float) -> SampleBuffer:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return SampleBuffer(data[:, 1] + 1j * data[:, 2], sample_rate)


def _book(args, cfg) -> Codebook:
    scheme = _opt(args, cfg, "scheme", "random")
    if scheme not in ("random", "costas"):
        raise ConfigError(f"unknown scheme {scheme!r}")
    wf = WaveformConfig()
    return Codebook(scheme, wf.n_f, wf.n_t)


def _image_from_file(path: str) -> TimeFrequencyImage:
    arr = read_gray_image(path)
    wf = WaveformConfig()
    return TimeFrequencyImage(arr[::-1].astype(np.float64) / 255.0,
                              wf.n_s, wf.sample_rate / 2.0)


def _detector_fn(args, cfg):
    """None selects the built-in classical detector inside demodulate."""
    choice = _opt(args, cfg, "detector", "classical")
    if choice == "classical":
        return None
    cmd = shlex.split(choice)

    def run(img, count):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "tfi.png")
            write_png(img, path)
            return external_detect(path, cmd, img.rows)

    return run


def _synthesize(args, cfg) -> SampleBuffer:
    book = _book(args, cfg)
    wf = WaveformConfig()
    bits = _opt(args, cfg, "bits", None)
    seed = int(_opt(args, cfg, "seed", 0, int))
    rng = np.random.default_rng(channel.derive_seed(seed, 0))
    if bits is None:
        bits = "".join(str(b) for b in rng.integers(0, 2, book.bits_per_pulse))
    symbol = book.encode(bits)
    pulse = synthesize_pulse(symbol, wf)
    start = _opt(args, cfg, "start", None, int)
    if start is None:
        start = int(rng.integers(0, wf.n_s - len(pulse) + 1))
    window = place_in_window(pulse, int(start), wf)
    doppler = float(_opt(args, cfg, "doppler", 0.0, float))
    if doppler:
        window = channel.apply_doppler(window, doppler)
    snr_db = _opt(args, cfg, "snr_db", None, float)
    if snr_db is not None:
        noise_var = channel.snr_to_noise_var(float(snr_db),
                                             wf.pulse_energy / len(pulse))
        window = channel.apply_awgn(window, noise_var, rng)
    return window


# ---------------------------------------------------------------------------
# subcommand bodies

def cmd_capacity(args, cfg) -> int:
    grid_text = _opt(args, cfg, "grid", "5x5")
    try:
        grid = [tuple(int(p) for p in cell.split("x"))
                for cell in grid_text.replace(",", " ").split()]
        if any(len(g) != 2 for g in grid):
            raise ValueError(grid_text)
    except ValueError:
        raise ConfigError(f"bad grid {grid_text!r}; expected like '5x5 4x3'")
    rows = harness.run_capacity_table(grid)
    _emit_csv(args.out, harness.CAPACITY_HEADER, rows)
    return EXIT_OK


def cmd_encode(args, cfg) -> int:
    book = _book(args, cfg)
    bits = _opt(args, cfg, "bits", None)
    if bits is None:
        raise ConfigError("encode requires --bits")
    symbol = book.encode(bits)
    rows = [(i, f, d) for i, (f, d) in
            enumerate(zip(symbol.freq_indices, symbol.dur_indices))]
    _emit_csv(args.out, ("position", "freq_index", "dur_index"), rows)
    return EXIT_OK


def cmd_synth(args, cfg) -> int:
    window = _synthesize(args, cfg)
    write_samples_csv(args.out, window)
    return EXIT_OK


def cmd_tfi(args, cfg) -> int:
    wf = WaveformConfig()
    if getattr(args, "infile", None):
        window = read_samples_csv(args.infile, wf.sample_rate)
    else:
        window = _synthesize(args, cfg)
    l = int(_opt(args, cfg, "image_size", DEFAULT_IMAGE_SIZE, int))
    img = resize_nearest(cwd(window, CwdConfig()), l)
    out = args.out or "tfi.png"
    (write_pgm if out.endswith(".pgm") else write_png)(img, out)
    return EXIT_OK


def cmd_detect(args, cfg) -> int:
    if not getattr(args, "infile", None):
        raise ConfigError("detect requires --in <image>")
    img = _image_from_file(args.infile)
    count = int(_opt(args, cfg, "count", WaveformConfig().n_f, int))
    scheme = _opt(args, cfg, "scheme", "random")
    choice = _opt(args, cfg, "detector", "classical")
    try:
        if choice == "classical":
            boxes = detect_classical(img, count, ClassicalDetectorParams(),
                                     label=scheme)
        else:
            boxes = external_detect(args.infile, shlex.split(choice), img.rows)
    except DetectionErasureError:
        boxes = []
    l = img.pixels.shape[0]
    lines = []
    for b in boxes:
        lines.append(json.dumps({
            "x_min": b.x_min, "x_max": b.x_max,
            "y_min": l - b.y_max, "y_max": l - b.y_min,
            "confidence": b.confidence, "label": b.label,
        }, sort_keys=True))
    lines.append("END")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_demod(args, cfg) -> int:
    wf = WaveformConfig()
    if getattr(args, "infile", None):
        window = read_samples_csv(args.infile, wf.sample_rate)
    else:
        window = _synthesize(args, cfg)
    book = _book(args, cfg)
    l = int(_opt(args, cfg, "image_size", DEFAULT_IMAGE_SIZE, int))
    result = demodulate(window, book, wf, CwdConfig(), l, _detector_fn(args, cfg))
    if result.is_erasure:
        _write_text(args.out, "ERASURE\n")
    else:
        _write_text(args.out, (result.bits or "UNADDRESSABLE") + "\n")
    return EXIT_OK


def cmd_pd_sweep(args, cfg) -> int:
    p_fas = _float_list(_opt(args, cfg, "p_fa", "0.1 0.01"))
    enrs = _float_list(_opt(args, cfg, "enr_db", "5 10 15"))
    trials = int(_opt(args, cfg, "trials", 10_000, int))
    seed = int(_opt(args, cfg, "seed", 0, int))
    if trials < 1 or not p_fas or not enrs:
        raise ConfigError("trials >= 1 and non-empty p_fa/enr grids required")
    rows = harness.run_pd_sweep(p_fas, enrs, trials, seed)
    _emit_csv(args.out, harness.PD_HEADER, rows)
    if getattr(args, "plot", False):
        from .plots import plot_pd_sweep
        plot_pd_sweep(rows, _plot_path(args.out))
    return EXIT_OK


def cmd_ser_sweep(args, cfg) -> int:
    snrs = _float_list(_opt(args, cfg, "snr_db", "-10 -8 -6 -4 -2 0 2 4 6 8 10"))
    symbols = int(_opt(args, cfg, "symbols", 300, int))
    seed = int(_opt(args, cfg, "seed", 0, int))
    doppler = float(_opt(args, cfg, "doppler", 0.0, float))
    scheme_opt = _opt(args, cfg, "scheme", None)
    schemes = (scheme_opt,) if scheme_opt else ("random", "costas")
    if symbols < 1 or not snrs:
        raise ConfigError("symbols >= 1 and a non-empty snr grid required")
    rows = harness.run_ser_sweep(schemes, snrs, symbols, seed, doppler,
                                 detector=_detector_fn(args, cfg))
    _emit_csv(args.out, harness.SER_HEADER, rows)
    if getattr(args, "plot", False):
        from .plots import plot_ser_sweep
        plot_ser_sweep(rows, _plot_path(args.out))
    return EXIT_OK


def cmd_dataset(args, cfg) -> int:
    out = args.out or _opt(args, cfg, "out", None)
    if out is None:
        raise ConfigError("dataset requires --out <directory>")
    dc = harness.DatasetConfig(
        snrs_db=tuple(_float_list(_opt(args, cfg, "snr_db", "-6 -4 -2 0 2 4 6 8 10"))),
        signals_per_scheme=int(_opt(args, cfg, "signals", 2700, int)),
        seed=int(_opt(args, cfg, "seed", 0, int)),
        image_format=_opt(args, cfg, "format", "png"),
        l=int(_opt(args, cfg, "image_size", DEFAULT_IMAGE_SIZE, int)),
    )
    harness.generate_dataset(out, dc)
    return EXIT_OK


def _plot_path(csv_path: Optional[str]) -> str:
    base = csv_path or "sweep.csv"
    return (base[:-4] if base.endswith(".csv") else base) + ".png"


COMMANDS = {
    "capacity": cmd_capacity,
    "encode": cmd_encode,
    "synth": cmd_synth,
    "tfi": cmd_tfi,
    "detect": cmd_detect,
    "demod": cmd_demod,
    "pd-sweep": cmd_pd_sweep,
    "ser-sweep": cmd_ser_sweep,
    "dataset": cmd_dataset,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fhjrc",
        description="Frequency-hopping joint radar-communications toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--scheme", choices=("random", "costas"), default=None)
        p.add_argument("--detector", default=None,
                       help="'classical' or an external detector command line")
        p.add_argument("--out", default=None)
        if name in ("capacity",):
            p.add_argument("--grid", default=None,
                           help="space-separated n_fxn_t cells, e.g. '5x5 4x3'")
        if name in ("encode", "synth", "tfi", "demod"):
            p.add_argument("--bits", default=None)
        if name in ("synth", "tfi", "demod"):
            p.add_argument("--start", type=int, default=None)
            p.add_argument("--doppler", type=float, default=None)
            p.add_argument("--snr-db", type=float, default=None)
        if name in ("tfi", "detect", "demod"):
            p.add_argument("--in", dest="infile", default=None)
            p.add_argument("--image-size", type=int, default=None)
        if name == "detect":
            p.add_argument("--count", type=int, default=None)
        if name in ("pd-sweep",):
            p.add_argument("--p-fa", dest="p_fa", default=None)
            p.add_argument("--enr-db", dest="enr_db", default=None)
            p.add_argument("--trials", type=int, default=None)
        if name in ("ser-sweep",):
            p.add_argument("--snr-grid", dest="snr_db", default=None)
            p.add_argument("--symbols", type=int, default=None)
            p.add_argument("--doppler", type=float, default=None)
        if name in ("pd-sweep", "ser-sweep"):
            p.add_argument("--plot", action="store_true",
                           help="also render a figure next to the CSV")
        if name == "dataset":
            p.add_argument("--snr-grid", dest="snr_db", default=None)
            p.add_argument("--signals", type=int, default=None)
            p.add_argument("--format", choices=("png", "pgm"), default=None)
            p.add_argument("--image-size", type=int, default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DetectorUnavailableError as exc:
        print(f"error: external detector failed: {exc}", file=sys.stderr)
        return EXIT_DETECTOR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
