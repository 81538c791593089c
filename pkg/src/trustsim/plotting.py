"""Render figure tables to PNG files.

Uses the non-interactive agg backend so rendering works headless and the
bytes depend only on the table contents and the pinned library versions.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("agg")

import matplotlib.pyplot as plt  # noqa: E402

from .reporting import FigureTable  # noqa: E402

_FIGSIZE = (8.0, 4.5)
_DPI = 120
# A fixed Software tag keeps the PNG tEXt chunk independent of the
# matplotlib version string.
_METADATA = {"Software": "trustsim"}

_COLOR0 = "tab:blue"
_COLOR1 = "tab:orange"


def _plot_densities(ax, table: FigureTable) -> None:
    x = table.columns["x"]
    ax.plot(x, table.columns["density0"], color=_COLOR0, label="trustworthy (0)")
    ax.plot(x, table.columns["density1"], color=_COLOR1, label="untrustworthy (1)")
    ax.set_xlabel("signal x")
    ax.set_ylabel("density")


def _shade_errors(ax, table: FigureTable, threshold: float) -> None:
    x = table.columns["x"]
    d0 = table.columns["density0"]
    d1 = table.columns["density1"]
    right = [xi > threshold for xi in x]
    left = [xi <= threshold for xi in x]
    ax.fill_between(x, d0, where=right, color=_COLOR0, alpha=0.25, label="false positives")
    ax.fill_between(x, d1, where=left, color=_COLOR1, alpha=0.25, label="false negatives")


def _render_threshold_figure(ax, table: FigureTable) -> None:
    _plot_densities(ax, table)
    threshold = table.columns["threshold"][0]
    _shade_errors(ax, table, threshold)
    ax.axvline(threshold, color="black", linestyle="--", label="threshold")
    extra = table.columns.get("bayes_threshold")
    if extra is not None:
        ax.axvline(extra[0], color="gray", linestyle=":", label="optimal threshold")


def _render_sharpen_figure(ax, table: FigureTable) -> None:
    _plot_densities(ax, table)
    x = table.columns["x"]
    ax.plot(
        x,
        table.columns["density0_sharpened"],
        color=_COLOR0,
        linestyle="--",
        label="trustworthy, sharpened",
    )
    ax.plot(
        x,
        table.columns["density1_sharpened"],
        color=_COLOR1,
        linestyle="--",
        label="untrustworthy, sharpened",
    )
    ax.axvline(table.columns["threshold"][0], color="black", linestyle="--", label="threshold")
    ax.axvline(
        table.columns["threshold_sharpened"][0],
        color="gray",
        linestyle=":",
        label="sharpened threshold",
    )


def _render_band_figure(ax, table: FigureTable) -> None:
    _plot_densities(ax, table)
    lower = table.columns["band_lower"][0]
    upper = table.columns["band_upper"][0]
    ax.axvspan(lower, upper, color="gray", alpha=0.2, label="band")
    ax.axvline(lower, color="black", linestyle=":")
    ax.axvline(upper, color="black", linestyle="--")


def _render_schedule_figure(ax, table: FigureTable) -> None:
    rounds = table.columns["x"]
    ax.plot(rounds, table.columns["threshold"], color="black", marker="o", label="threshold")
    ax.set_xlabel("round")
    ax.set_ylabel("threshold")
    twin = ax.twinx()
    twin.plot(rounds, table.columns["fpr"], color=_COLOR0, linestyle="--", label="fpr")
    twin.plot(rounds, table.columns["fnr"], color=_COLOR1, linestyle="--", label="fnr")
    twin.set_ylabel("error rate")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = twin.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="center right", fontsize=8)


def render_figure(table: FigureTable, path: str | Path) -> Path:
    """Draw one figure table and save it as a PNG at the given path."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    try:
        if table.figure_id in (1, 2, 3, 4):
            _render_threshold_figure(ax, table)
        elif table.figure_id == 5:
            _render_sharpen_figure(ax, table)
        elif table.figure_id in (6, 7):
            _render_band_figure(ax, table)
        else:
            _render_schedule_figure(ax, table)
        if table.figure_id != 8:
            ax.legend(loc="upper left", fontsize=8)
        ax.set_title(f"figure {table.figure_id}", fontsize=10)
        fig.tight_layout()
        fig.savefig(path, format="png", metadata=_METADATA)
    finally:
        plt.close(fig)
    return path


def render_figures(tables: Iterable[FigureTable], directory: str | Path) -> dict[str, Path]:
    """Render every table as figure<N>.png inside the directory."""
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for table in tables:
        name = f"figure{table.figure_id}"
        paths[name] = render_figure(table, out_dir / f"{name}.png")
    return paths
