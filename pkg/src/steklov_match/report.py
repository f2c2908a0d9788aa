"""Figure rendering for the CLI report paths (written next to the CSVs)."""

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_error_curve(curve, path, title=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(curve.thresholds, curve.percentages, lw=1.5)
    ax.set_xlim(0, 0.25)
    ax.set_ylim(0, 102)
    ax.set_xlabel("geodesic error threshold (fraction of diameter)")
    ax.set_ylabel("% correspondences below")
    ax.grid(alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_eigenvalues(blocks, path, ylabel="eigenvalue"):
    """`blocks` is a list of (label, values) pairs plotted against index."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, values in blocks:
        ax.plot(np.arange(1, len(values) + 1), values, marker=".", ms=4, lw=1, label=label)
    ax.set_xlabel("index")
    ax.set_ylabel(ylabel)
    if len(blocks) > 1:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_gram(gram, path, block_slices=None):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(np.abs(gram), cmap="viridis", vmin=0.0, vmax=1.0)
    if block_slices:
        for s in block_slices[:-1]:
            ax.axhline(s.stop - 0.5, color="w", lw=0.5)
            ax.axvline(s.stop - 0.5, color="w", lw=0.5)
    fig.colorbar(im, ax=ax, label="|inner product|")
    ax.set_title("basis Gram matrix (Dirichlet form)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_energy_log(energy_log, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    it = [e["iteration"] for e in energy_log]
    ax.plot(it, [e["ab"]["total"] for e in energy_log], marker="o", ms=3, label="a to b")
    ax.plot(it, [e["ba"]["total"] for e in energy_log], marker="s", ms=3, label="b to a")
    ax.set_xlabel("refinement iteration")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
