"""Report figures rendered to files with the non-interactive backend."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_dataflow(report, path) -> Path:
    """Bar chart of items surviving each stage."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = ["input"] + [st.name for st in report.stages]
    counts = [report.input_count] + [st.items_out for st in report.stages]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(range(len(names)), counts, color="tab:blue")
    for i, c in enumerate(counts):
        ax.text(i, c, str(c), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("recordings")
    ax.set_title("dataflow yield")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_distributions(records, path, bins: int = 20) -> Path:
    """Per-airport histograms of SNR, language score and duration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    by_airport = defaultdict(list)
    for r in sorted(records, key=lambda r: r.wav_id):
        by_airport[r.airport].append(r)
    panels = [
        ("SNR [dB]", lambda r: r.quality.avg_snr),
        ("language score", lambda r: r.quality.lid_score),
        ("duration [s]", lambda r: r.quality.audio_len),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.5))
    for ax, (label, get) in zip(axes, panels):
        all_vals = np.array([get(r) for r in records], dtype=float)
        lo, hi = (all_vals.min(), all_vals.max()) if all_vals.size else (0.0, 1.0)
        if hi <= lo:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, bins + 1)
        for airport in sorted(by_airport):
            vals = [get(r) for r in by_airport[airport]]
            ax.hist(vals, bins=edges, alpha=0.5, label=airport)
        ax.set_xlabel(label)
    axes[0].set_ylabel("recordings")
    axes[-1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path
