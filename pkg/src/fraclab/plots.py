"""Static vector figures for scenario reports.

Everything renders through the Agg backend to SVG files. The hash salt and
the stripped date metadata keep the output byte-stable across runs.
"""

from __future__ import annotations

import threading

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "fraclab"

import matplotlib.pyplot as plt

# pyplot keeps global state; scenario pipelines may plot from worker threads
_LOCK = threading.Lock()


def line_plot(path, series, *, xlabel, ylabel, title=None,
              xscale="linear", yscale="linear"):
    """Plot named (x, y) pairs on shared axes and save as SVG.

    `series` maps label -> (x, y); insertion order fixes draw order and
    the legend.
    """
    with _LOCK:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for label, (x, y) in series.items():
            ax.plot(x, y, label=label)
        ax.set_xscale(xscale)
        ax.set_yscale(yscale)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
