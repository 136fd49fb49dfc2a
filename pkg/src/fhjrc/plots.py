"""Figure rendering for sweep results.

Plots are a convenience layer over the CSV rows: the CSV stays the machine
contract, the PNG sits next to it for a quick visual check.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_pd_sweep(rows: Sequence[Tuple], path: str) -> None:
    """Detection probability vs ENR, one curve per (waveform, p_fa)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    series = {}
    for waveform, p_fa, enr_db, pd_sim, pd_theory in rows:
        series.setdefault((waveform, p_fa), []).append((enr_db, pd_sim, pd_theory))
    theory_drawn = set()
    for (waveform, p_fa), pts in sorted(series.items()):
        pts.sort()
        enrs = [p[0] for p in pts]
        ax.plot(enrs, [p[1] for p in pts], marker="o",
                label=f"{waveform}, Pfa={p_fa:g}")
        if p_fa not in theory_drawn:
            ax.plot(enrs, [p[2] for p in pts], "k--", linewidth=0.8,
                    label=f"theory, Pfa={p_fa:g}")
            theory_drawn.add(p_fa)
    ax.set_xlabel("ENR (dB)")
    ax.set_ylabel("detection probability")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_ser_sweep(rows: Sequence[Tuple], path: str) -> None:
    """Symbol error rate vs SNR, log-scaled, one curve per scheme."""
    fig, ax = plt.subplots(figsize=(6, 4))
    series = {}
    for scheme, snr_db, ser, _erasures, _n in rows:
        if snr_db == "inf":
            continue
        series.setdefault(scheme, []).append((float(snr_db), ser))
    floor = 1e-4  # zero SER still shows on the log axis
    for scheme, pts in sorted(series.items()):
        pts.sort()
        ax.semilogy([p[0] for p in pts], [max(p[1], floor) for p in pts],
                    marker="s", label=scheme)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("symbol error rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
