"""Figure rendering for run artifacts (headless matplotlib).

Everything here draws from already-serialized data structures and writes
PNG files next to the CSV/JSON outputs; nothing is computed here.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")  # render to files; no display in scope

import matplotlib.pyplot as plt
import numpy as np

from .characterize import CalibrationCurve


def plot_calibration_curve(curve: CalibrationCurve, path: str | Path) -> Path:
    """Raw discard observations plus the fitted monotone curve."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    rates = curve.rates
    if curve.raw_discards:
        ax.plot(rates, curve.raw_discards, "o", ms=4, color="tab:gray", label="observed")
    ax.plot(rates, curve.discards, "-", color="tab:blue", label="isotonic fit")
    ax.set_xlabel("single-qubit depolarizing rate p1")
    ax.set_ylabel("discard fraction")
    ax.set_title(f"Discard rate vs noise ({curve.benchmark_label})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_heatmap(grid: np.ndarray, title: str, cbar_label: str, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    masked = np.ma.masked_invalid(np.asarray(grid, dtype=float))
    im = ax.imshow(masked, aspect="auto", cmap="viridis")
    fig.colorbar(im, ax=ax, label=cbar_label)
    ax.set_xlabel("grid column")
    ax.set_ylabel("grid row")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_fidelity_comparison(
    labels: Sequence[str], pcs_values: Sequence[float], base_values: Sequence[float], path: str | Path
) -> Path:
    """Grouped bars: checked-and-filtered ensemble vs plain ensemble."""
    path = Path(path)
    x = np.arange(len(labels))
    width = 0.38
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(x - width / 2, pcs_values, width, label="with checks", color="tab:blue")
    ax.bar(x + width / 2, base_values, width, label="no checks", color="tab:orange")
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("value")
    ax.set_title("Ensemble quality")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
