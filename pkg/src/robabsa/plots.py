"""Figures written next to the delimited CLI outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed metadata keeps repeated runs byte-identical
_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def confidence_histograms(groups: dict, thresholds: dict, path) -> Path:
    """One panel per synthetic kind: histogram of confidences with the gate marked."""
    fig, axes = plt.subplots(1, len(groups), figsize=(4 * len(groups), 3.2), squeeze=False)
    for ax, (name, values) in zip(axes[0], groups.items()):
        if values:
            ax.hist(values, bins=20, color="#4c72b0")
        ax.axvline(thresholds.get(name, 0.0), color="#c44e52", linestyle="--", linewidth=1)
        ax.set_title(f"{name} (n={len(values)})", fontsize=9)
        ax.set_xlabel("confidence")
    axes[0][0].set_ylabel("samples")
    fig.tight_layout()
    return _save(fig, path)


def training_curves(history: list, path) -> Path:
    """Per-iteration total loss and per-epoch accuracies."""
    iters = [h for h in history if "epoch_end" not in h]
    epochs = [h for h in history if "epoch_end" in h]
    fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.2))
    left.plot([h["iter"] for h in iters], [h["loss"] for h in iters], linewidth=1)
    left.set_xlabel("iteration")
    left.set_ylabel("loss")
    right.plot([h["epoch_end"] for h in epochs], [h["train_acc"] for h in epochs], label="train")
    dev = [(h["epoch_end"], h["dev_acc"]) for h in epochs if h.get("dev_acc") is not None]
    if dev:
        right.plot(*zip(*dev), label="dev")
    right.set_xlabel("epoch")
    right.set_ylabel("accuracy")
    right.set_ylim(0, 1.02)
    right.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def subset_accuracy(report, path) -> Path:
    """Bar chart of overall and per-tag accuracy."""
    names = ["overall"] + sorted(report.tags)
    values = [report.accuracy] + [report.tag_accuracy(t) for t in sorted(report.tags)]
    fig, ax = plt.subplots(figsize=(1.2 * len(names) + 2, 3.2))
    ax.bar(names, values, color="#55a868")
    ax.set_ylim(0, 1.02)
    ax.set_ylabel("accuracy")
    for x, v in enumerate(values):
        ax.text(x, v + 0.01, f"{v:.2f}", ha="center", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
