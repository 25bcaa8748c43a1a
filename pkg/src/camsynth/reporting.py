"""Delimited reports and matplotlib figures for the CLI report paths."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def save_histogram(path, values, title: str, xlabel: str, bins: int = 50,
                   vline: float | None = None) -> None:
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    if len(values):
        ax.hist(values, bins=bins, color="#3b6ea5", edgecolor="black", linewidth=0.3)
    if vline is not None:
        ax.axvline(vline, color="crimson", linestyle="--", linewidth=1.0)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_error_curves(path, pos_err_m, ang_err_deg) -> None:
    """Per-frame position/orientation error traces side by side."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(pos_err_m, linewidth=0.7, color="#3b6ea5")
    ax1.set_title("position error")
    ax1.set_xlabel("frame")
    ax1.set_ylabel("m")
    ax2.plot(ang_err_deg, linewidth=0.7, color="#a53b3b")
    ax2.set_title("orientation error")
    ax2.set_xlabel("frame")
    ax2.set_ylabel("deg")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
