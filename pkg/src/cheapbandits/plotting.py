"""Regret and cost figures from aggregated summaries."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "CheapUCB": dict(color="tab:red", marker="o"),
    "SpectralUCB": dict(color="tab:blue", marker="s"),
    "LinUCB": dict(color="tab:green", marker="^"),
}


def _panel(ax, summary, mean_attr, se_attr, ylabel):
    for policy, s in summary.items():
        mean = getattr(s, mean_attr)
        se = getattr(s, se_attr)
        t = np.arange(1, len(mean) + 1)
        style = STYLE.get(policy, {})
        ax.plot(t, mean, label=policy, markevery=max(1, len(t) // 10), ms=4, lw=1.5, **style)
        ax.fill_between(t, mean - se, mean + se, alpha=0.2, color=style.get("color"))
    ax.set_xlabel("time T")
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.legend(frameon=False)


def plot_summary(summary, out_dir: str | Path, title: str | None = None, dpi: int = 150) -> list[Path]:
    """Write ``regret.png`` and ``cost.png`` into ``out_dir``; return the paths."""
    out_dir = Path(out_dir)
    written = []
    for name, mean_attr, se_attr, ylabel in (
        ("regret", "regret_mean", "regret_se", "cumulative regret"),
        ("cost", "cost_mean", "cost_se", "cumulative cost"),
    ):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        _panel(ax, summary, mean_attr, se_attr, ylabel)
        if title:
            ax.set_title(title, fontsize=10)
        fig.tight_layout()
        path = out_dir / f"{name}.png"
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
        written.append(path)
    return written
