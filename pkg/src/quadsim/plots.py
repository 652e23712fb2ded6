"""Static SVG line charts for traces and comparisons.

Output is byte-stable across runs: a fixed SVG hash salt and no date stamp.
"""
from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ._io import atomic_write_text  # noqa: E402

_RC = {"svg.hashsalt": "quadsim", "svg.fonttype": "path", "path.simplify": False}


def _save(fig, path) -> None:
    buf = io.StringIO()
    with plt.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write_text(path, buf.getvalue())


def line_panels(path, t, series, title: str = "") -> None:
    """One stacked panel per ``(label, unit, y)`` entry of ``series``."""
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(len(series), 1, sharex=True, figsize=(7, 2.0 * len(series) + 0.6))
        axes = np.atleast_1d(axes)
        for ax, (label, unit, y) in zip(axes, series):
            ax.plot(t, y, linewidth=1.2)
            ax.set_ylabel(f"{label} [{unit}]")
            ax.grid(True, linewidth=0.4)
        axes[-1].set_xlabel("t [s]")
        if title:
            axes[0].set_title(title)
        fig.tight_layout()
    _save(fig, path)


def multi_line(path, t, lines, ylabel: str, title: str = "") -> None:
    """Several ``(label, y)`` lines on a single axis."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 3.4))
        for label, y in lines:
            ax.plot(t, y, linewidth=1.2, label=label)
        ax.set_xlabel("t [s]")
        ax.set_ylabel(ylabel)
        ax.grid(True, linewidth=0.4)
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        fig.tight_layout()
    _save(fig, path)
