"""Figure rendering for the report paths.

Every CLI subcommand that writes delimited output can also drop a PNG next
to it; these helpers keep the styling in one place.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .density import DensityGrid


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_density(g: DensityGrid, path, title: str = "", overlay: DensityGrid | None = None,
                 labels=("solved", "sampled")) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.step(g.edges()[:-1], g.values, where="post", lw=0.8, label=labels[0])
    if overlay is not None:
        ax.step(overlay.edges()[:-1], overlay.values, where="post",
                lw=0.8, alpha=0.7, label=labels[1])
        ax.legend()
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    _finish(fig, path)


def plot_series(xs, ys_by_label: dict, path, xlabel: str = "n",
                ylabel: str = "", title: str = "", logy: bool = False) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, ys in ys_by_label.items():
        ax.plot(xs, ys, marker="o", ms=3, lw=1, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(ys_by_label) > 1:
        ax.legend()
    if title:
        ax.set_title(title)
    _finish(fig, path)


def plot_histogram2d(H: np.ndarray, extent, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(H.T, origin="lower", extent=extent, aspect="auto",
                   cmap="viridis")
    fig.colorbar(im, ax=ax, label="mass")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    _finish(fig, path)


def plot_slice_profile(h: DensityGrid, xs, lower, path, title: str = "") -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.step(h.edges()[:-1], h.values, where="post", lw=0.8)
    ax1.set_ylabel("projected density")
    ax2.plot(xs, lower, lw=1)
    ax2.set_ylabel("slice measure floor")
    ax2.set_xlabel("x")
    if title:
        ax1.set_title(title)
    _finish(fig, path)
