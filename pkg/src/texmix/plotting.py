"""Matplotlib figures written next to the CSV/JSON report outputs."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps figure bytes stable between runs
_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def plot_loss_traces(traces, path, labels=None, title="synthesis loss"):
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, trace in enumerate(traces):
        label = labels[i] if labels else None
        ax.semilogy(np.arange(len(trace)), np.maximum(trace, 1e-300), label=label, lw=1)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.set_title(title)
    if labels:
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    _save(fig, path)


def plot_image_strip(images, path, labels=None):
    n = len(images)
    fig, axes = plt.subplots(1, n, figsize=(1.6 * n, 1.9), squeeze=False)
    for i, (ax, img) in enumerate(zip(axes[0], images)):
        ax.imshow(np.clip(img, 0, 1), interpolation="nearest")
        ax.set_axis_off()
        if labels:
            ax.set_title(labels[i], fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_statistics(correlation, spectrum, path, title=""):
    """Correlation field (centred) and log spectrum for up to 3 channels."""
    k = min(correlation.shape[2], 3)
    fig, axes = plt.subplots(2, k, figsize=(2.4 * k, 4.6), squeeze=False)
    for c in range(k):
        corr = np.fft.fftshift(correlation[:, :, c])
        axes[0, c].imshow(corr, cmap="viridis")
        axes[0, c].set_title(f"correlation ch{c}", fontsize=8)
        spec = np.fft.fftshift(np.log1p(spectrum[:, :, c]))
        axes[1, c].imshow(spec, cmap="magma")
        axes[1, c].set_title(f"log spectrum ch{c}", fontsize=8)
        for ax in axes[:, c]:
            ax.set_axis_off()
    if title:
        fig.suptitle(title, fontsize=9)
    fig.tight_layout()
    _save(fig, path)
