"""Matplotlib rendering of report curves, written next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_curves(curves: dict[str, list[tuple[float, float]]],
                  path: str | Path, title: str, ylabel: str = "value",
                  logx: bool = True, logy: bool = False) -> Path:
    """One figure with every named curve over t."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, rows in curves.items():
        ts = [t for t, _ in rows]
        vs = [v for _, v in rows]
        ax.plot(ts, vs, marker="o", markersize=3, linewidth=1.2, label=name)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if curves:
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_recovery(rows, path: str | Path, title: str) -> Path:
    """Bar chart of relative recovery errors per observable."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    labels = [r.observable for r in rows]
    errs = [max(r.rel_err, 1e-16) for r in rows]
    ax.bar(range(len(rows)), errs)
    ax.set_yscale("log")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("relative error")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
